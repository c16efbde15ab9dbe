"""Label cover reductions, recovery maps and swap-sensitivity measurement at desk scale."""
from .core import (
    Assignment,
    LabelCoverInstance,
    Swap,
    TwoCspInstance,
    apply_swap,
    opt_bruteforce,
    swap_distance,
    value,
)
from .metrics import EmpiricalDistribution, distance_vector, emd_exact, hamming
from .rng import SeededCoins, derive_seed, enumerate_runs

__all__ = [
    "Assignment",
    "EmpiricalDistribution",
    "LabelCoverInstance",
    "SeededCoins",
    "Swap",
    "TwoCspInstance",
    "apply_swap",
    "derive_seed",
    "distance_vector",
    "emd_exact",
    "enumerate_runs",
    "hamming",
    "opt_bruteforce",
    "swap_distance",
    "value",
]
