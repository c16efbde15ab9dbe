"""Hamming and earth mover's distances, and the swap-sensitivity harness.

Exact EMD is a transportation problem with integer Hamming costs.  Masses are
scaled to integers over their common denominator and the problem is solved
by successive shortest augmenting paths (Dijkstra with potentials), so the
returned optimum is an exact rational.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Any, Callable, Iterable, Sequence

from .core import Assignment, BudgetError, InstanceError, Swap, apply_swap, differing_tables, swap_path
from .rng import Coins, as_coins, coupled, derive_seed, enumerate_runs


@dataclass(frozen=True)
class DistanceVector:
    left: int
    right: int

    @property
    def total(self) -> int:
        return self.left + self.right


def _seq_hamming(a: Sequence, b: Sequence) -> int:
    if len(a) != len(b):
        raise InstanceError("domain mismatch")
    return sum(1 for x, y in zip(a, b) if x != y)


def hamming(x: Any, y: Any) -> int:
    """Hamming distance between assignments, label vectors, or index sets (symmetric difference)."""
    if isinstance(x, Assignment) and isinstance(y, Assignment):
        return _seq_hamming(x.left, y.left) + _seq_hamming(x.right, y.right)
    if isinstance(x, (set, frozenset)) and isinstance(y, (set, frozenset)):
        return len(set(x) ^ set(y))
    if isinstance(x, (tuple, list)) and isinstance(y, (tuple, list)):
        return _seq_hamming(x, y)
    raise InstanceError("domain mismatch")


def distance_vector(pi: Assignment, other: Assignment) -> DistanceVector:
    return DistanceVector(_seq_hamming(pi.left, other.left), _seq_hamming(pi.right, other.right))


class EmpiricalDistribution:
    """Finite-support distribution with exact rational weights summing to 1."""

    def __init__(self, support: Iterable[tuple[Any, Fraction]]):
        merged: dict = {}
        for outcome, w in support:
            w = Fraction(w)
            if w < 0:
                raise ValueError("negative weight")
            if w == 0:
                continue
            merged[outcome] = merged.get(outcome, Fraction(0)) + w
        if sum(merged.values(), Fraction(0)) != 1:
            raise ValueError("weights must sum to 1")
        self.support = tuple(merged.items())

    @classmethod
    def point(cls, outcome: Any) -> "EmpiricalDistribution":
        return cls([(outcome, Fraction(1))])

    @classmethod
    def from_runs(cls, runs) -> "EmpiricalDistribution":
        return cls((r.output, r.probability) for r in runs)

    def __len__(self) -> int:
        return len(self.support)

    def prob(self, outcome: Any) -> Fraction:
        for o, w in self.support:
            if o == outcome:
                return w
        return Fraction(0)

    def expect(self, fn: Callable[[Any], Any]) -> Fraction:
        return sum((w * fn(o) for o, w in self.support), Fraction(0))

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmpiricalDistribution):
            return NotImplemented
        return dict(self.support) == dict(other.support)

    def __repr__(self) -> str:
        return f"EmpiricalDistribution({len(self.support)} atoms)"


class _Flow:
    def __init__(self, n: int):
        self.n = n
        self.graph: list[list[list[int]]] = [[] for _ in range(n)]

    def add(self, a: int, b: int, cap: int, cost: int) -> None:
        self.graph[a].append([b, cap, cost, len(self.graph[b])])
        self.graph[b].append([a, 0, -cost, len(self.graph[a]) - 1])

    def min_cost(self, s: int, t: int, need: int) -> int:
        n = self.n
        pot = [0] * n
        total = 0
        while need > 0:
            dist = [None] * n
            prev: list = [None] * n
            dist[s] = 0
            heap = [(0, s)]
            while heap:
                d, a = heapq.heappop(heap)
                if d != dist[a]:
                    continue
                for idx, (b, cap, cost, _) in enumerate(self.graph[a]):
                    if cap <= 0:
                        continue
                    nd = d + cost + pot[a] - pot[b]
                    if dist[b] is None or nd < dist[b]:
                        dist[b] = nd
                        prev[b] = (a, idx)
                        heapq.heappush(heap, (nd, b))
            if dist[t] is None:
                raise ValueError("infeasible transportation problem")
            for v in range(n):
                if dist[v] is not None:
                    pot[v] += dist[v]
            push = need
            v = t
            while v != s:
                a, idx = prev[v]
                push = min(push, self.graph[a][idx][1])
                v = a
            v = t
            while v != s:
                a, idx = prev[v]
                edge = self.graph[a][idx]
                edge[1] -= push
                self.graph[v][edge[3]][1] += push
                total += push * edge[2]
                v = a
            need -= push
        return total


def transport_cost(p: Sequence[Fraction], q: Sequence[Fraction], cost: Sequence[Sequence[int]]) -> Fraction:
    """Exact minimum transportation cost between two mass vectors of equal total."""
    den = 1
    for w in list(p) + list(q):
        den = lcm(den, Fraction(w).denominator)
    ip = [int(Fraction(w) * den) for w in p]
    iq = [int(Fraction(w) * den) for w in q]
    if sum(ip) != sum(iq):
        raise ValueError("unequal total mass")
    n, m = len(ip), len(iq)
    flow = _Flow(n + m + 2)
    s, t = n + m, n + m + 1
    for i in range(n):
        flow.add(s, i, ip[i], 0)
    for j in range(m):
        flow.add(n + j, t, iq[j], 0)
    big = sum(ip)
    for i in range(n):
        for j in range(m):
            flow.add(i, n + j, big, int(cost[i][j]))
    return Fraction(flow.min_cost(s, t, sum(ip)), den)


def emd_exact(
    P: EmpiricalDistribution,
    Q: EmpiricalDistribution,
    budget: int = 1 << 16,
    metric: Callable[[Any, Any], int] = hamming,
) -> Fraction:
    """Earth mover's distance under Hamming cost, exact."""
    if len(P) * len(Q) > budget:
        raise BudgetError("support product exceeds budget")
    xs = [o for o, _ in P.support]
    ys = [o for o, _ in Q.support]
    cost = [[metric(x, y) for y in ys] for x in xs]
    return transport_cost([w for _, w in P.support], [w for _, w in Q.support], cost)


@dataclass
class RandomizedAlgorithm:
    """Callable ``fn(instance, coins)``; ``max_runs`` bounds exhaustive enumeration."""

    fn: Callable[[Any, Coins], Any]
    name: str = "algorithm"
    max_runs: int = 1 << 16

    def __call__(self, inst: Any, rng: "int | Coins") -> Any:
        return self.fn(inst, as_coins(rng))


def output_distribution(A: RandomizedAlgorithm, inst: Any) -> EmpiricalDistribution:
    return EmpiricalDistribution.from_runs(enumerate_runs(lambda c: A.fn(inst, c), budget=A.max_runs))


def emd_coupled_upper(A: RandomizedAlgorithm, inst: Any, other: Any, n_samples: int, seed: int) -> Fraction:
    """Mean Hamming distance of the two outputs over ``n_samples`` shared seeds."""
    total = 0
    for i in range(n_samples):
        s = derive_seed(seed, i)
        total += hamming(A(inst, s), A(other, s))
    return Fraction(total, n_samples)


def coupled_expectation_exact(
    A: RandomizedAlgorithm | Callable,
    inst: Any,
    other: Any,
    metric: Callable[[Any, Any], Any] = hamming,
    B: RandomizedAlgorithm | Callable | None = None,
) -> Fraction:
    """Exact expected distance under the shared-draw coupling, by enumerating every coin branch.

    ``B`` (default ``A``) is run on ``other``.
    """
    fa = A.fn if isinstance(A, RandomizedAlgorithm) else A
    fb = fa if B is None else (B.fn if isinstance(B, RandomizedAlgorithm) else B)
    prog = coupled(lambda c: fa(inst, c), lambda c: fb(other, c))
    budget = A.max_runs if isinstance(A, RandomizedAlgorithm) else 1 << 16
    total = Fraction(0)
    for run in enumerate_runs(prog, budget=budget):
        x, y = run.output
        total += run.probability * metric(x, y)
    return total


@dataclass
class SensitivityReport:
    max_emd: Fraction
    argmax: Swap | None
    per_swap: list = field(default_factory=list)
    mode: str = "exact"
    coupling: str | None = None
    n_samples: int | None = None

    def to_json(self, instance_hash: str = "") -> dict:
        return {
            "op": "swap_sensitivity",
            "instance": instance_hash,
            "mode": self.mode,
            "coupling": self.coupling,
            "n_samples": self.n_samples,
            "per_swap": [{"swap": _swap_json(s), "emd": str(e)} for s, e in self.per_swap],
            "max": str(self.max_emd),
        }


def _swap_json(s: Swap) -> dict:
    table = s.table
    if isinstance(table, tuple):
        table = [list(r) if isinstance(r, tuple) else r for r in table]
    return {"kind": s.kind, "target": s.target, "table": table}


def swap_sensitivity(
    A: RandomizedAlgorithm,
    inst: Any,
    swaps: Iterable[Swap],
    mode: str = "exact",
    n_samples: int = 256,
    seed: int = 0,
    budget: int = 1 << 16,
    apply: Callable[[Any, Swap], Any] = apply_swap,
) -> SensitivityReport:
    """Largest EMD between A(I) and A(I^s) over the supplied swaps."""
    per = []
    if mode == "exact":
        base = output_distribution(A, inst)
        for s in swaps:
            per.append((s, emd_exact(base, output_distribution(A, apply(inst, s)), budget=budget)))
        coupling, count = None, None
    elif mode == "sampled":
        for s in swaps:
            per.append((s, emd_coupled_upper(A, inst, apply(inst, s), n_samples, seed)))
        coupling, count = "shared-seed splitmix64", n_samples
    else:
        raise ValueError(f"unknown mode {mode!r}")
    best, arg = Fraction(0), None
    for s, e in per:
        if arg is None or e > best:
            best, arg = e, s
    return SensitivityReport(best, arg, per, mode, coupling, count)


@dataclass
class WitnessResult:
    step: int
    emd_at_step: Fraction
    per_step: list
    total_emd: Fraction
    distance: int


def neighboring_witness(A: RandomizedAlgorithm, inst: Any, other: Any, budget: int = 1 << 16) -> WitnessResult:
    """Walk the canonical shortest swap path and return its largest single-step EMD.

    The maximum step EMD is at least the mean step EMD, which by the triangle
    inequality is at least EMD(A(I), A(I~)) divided by the swap distance.
    """
    diffs = differing_tables(inst, other)
    if not diffs:
        raise InstanceError("zero distance")
    path = swap_path(inst, other)
    dists = [output_distribution(A, x) for x in path]
    per = [emd_exact(dists[i], dists[i + 1], budget=budget) for i in range(len(path) - 1)]
    total = emd_exact(dists[0], dists[-1], budget=budget)
    step = max(range(len(per)), key=lambda i: (per[i], -i))
    return WitnessResult(step, per[step], per, total, len(diffs))
