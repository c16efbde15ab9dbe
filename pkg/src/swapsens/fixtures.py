"""Deterministic fixture generators shared by the suites, scripts and tests."""
from __future__ import annotations

import itertools

from .core import LabelCoverInstance, TwoCspInstance, planted_csp, planted_label_cover
from .rng import SeededCoins, derive_seed

BASE_GRAPHS: dict[str, tuple[int, tuple]] = {
    "triangle": (3, ((0, 1), (1, 2), (0, 2))),
    "square": (4, ((0, 1), (1, 2), (2, 3), (0, 3))),
    "pentagon": (5, ((0, 1), (1, 2), (2, 3), (3, 4), (0, 4))),
    "hexagon": (6, ((0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5))),
    "k4": (4, tuple(itertools.combinations(range(4), 2))),
    "k33": (6, tuple((a, b) for a in range(3) for b in range(3, 6))),
    "prism": (6, ((0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (0, 3), (1, 4), (2, 5))),
}


def graph_by_name(name: str) -> tuple[int, tuple]:
    if name in BASE_GRAPHS:
        return BASE_GRAPHS[name]
    if name.startswith("cycle:"):
        n = int(name.split(":")[1])
        return n, tuple((i, (i + 1) % n) if i + 1 < n else (0, n - 1) for i in range(n))
    if name.startswith("complete:"):
        n = int(name.split(":")[1])
        return n, tuple(itertools.combinations(range(n), 2))
    raise KeyError(f"unknown base graph {name!r}")


def planted_csp_fixture(graph: str, seed: int, sigma: int = 2, density: float = 0.5) -> tuple[TwoCspInstance, tuple]:
    n, edges = graph_by_name(graph)
    return planted_csp(n, edges, sigma, SeededCoins(seed), density)


def planted_csp_family(count: int, seed: int, max_vertices: int = 6) -> list[tuple[TwoCspInstance, tuple]]:
    """Planted binary CSPs over the regular base graphs with at most ``max_vertices`` vertices."""
    names = [k for k, (n, _) in BASE_GRAPHS.items() if n <= max_vertices]
    out = []
    for i in range(count):
        s = derive_seed(seed, i)
        name = names[s % len(names)]
        out.append(planted_csp_fixture(name, s))
    return out


def small_lc_fixture(seed: int, n_left: int = 2, n_right: int = 2, sigma_u: int = 2, sigma_v: int = 2,
                     degree: int = 2) -> tuple[LabelCoverInstance, object]:
    """Planted instance on a bi-regular-ish bipartite graph (each left vertex hits ``degree`` right vertices cyclically)."""
    edges = [(u, (u + j) % n_right) for u in range(n_left) for j in range(degree)]
    return planted_label_cover(n_left, n_right, sigma_u, sigma_v, edges, SeededCoins(seed))


def triangle_pipeline_spec(seed: int = 2024) -> dict:
    """The end-to-end demo: triangle CSP through IKW, degree reduction, balancing, set cover, dominating set, padding."""
    return {
        "seed": seed,
        "stages": [
            {"stage": "gen", "kind": "planted_csp", "graph": "triangle", "sigma": 2, "seed": 1},
            {"stage": "ikw", "k": 2, "kprime": 1, "mode": "exhaustive"},
            {"stage": "recover"},
            {"stage": "dr", "d": 4, "lambda_target": 0.9, "seed": 3},
            {"stage": "recover"},
            {"stage": "balance", "mode": "minimal"},
            {"stage": "recover"},
            {"stage": "setcover", "set_system": "hypercube"},
            {"stage": "recover"},
            {"stage": "domset"},
            {"stage": "recover"},
            {"stage": "pad", "extra": 7},
            {"stage": "verify", "oracle": "auto"},
        ],
    }
