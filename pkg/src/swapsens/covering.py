"""Balancing, the set-cover reduction and its recovery, and the dominating-set reduction with padding."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import csr_matrix

from .core import Assignment, BudgetError, InstanceError, LabelCoverInstance
from .gadgets import SetSystem
from .metrics import EmpiricalDistribution, emd_exact
from .rng import Coins, as_coins, enumerate_runs

DEFAULT_BUDGET = 1 << 22


# Balancing


@dataclass(frozen=True)
class BalanceHandle:
    left_degrees: tuple
    right_degrees: tuple
    K: int

    def offsets(self, degrees) -> list[int]:
        out, acc = [], 0
        for d in degrees:
            out.append(acc)
            acc += d
        return out

    def project(self, pi: Assignment, rng: "int | Coins") -> Assignment:
        """Each source vertex takes the label of one uniformly chosen copy (left vertices first)."""
        coins = as_coins(rng)
        lo, ro = self.offsets(self.left_degrees), self.offsets(self.right_degrees)
        left = tuple(pi.left[lo[u] + coins.randbelow(d)] for u, d in enumerate(self.left_degrees))
        right = tuple(pi.right[ro[v] + coins.randbelow(d)] for v, d in enumerate(self.right_degrees))
        return Assignment(left, right)

    def lift(self, pi: Assignment) -> Assignment:
        left = tuple(x for u, d in enumerate(self.left_degrees) for x in [pi.left[u]] * d)
        right = tuple(x for v, d in enumerate(self.right_degrees) for x in [pi.right[v]] * d)
        return Assignment(left, right)


def balance_constant(inst: LabelCoverInstance, mode: str = "lcm-square") -> int:
    """lcm(1..Delta)^2 in ``lcm-square`` mode; the lcm of d(u)d(v) over edges in ``minimal`` mode."""
    dl, dr = inst.left_degrees(), inst.right_degrees()
    if mode == "lcm-square":
        delta = max(dl + dr)
        return reduce(math.lcm, range(1, delta + 1), 1) ** 2
    if mode == "minimal":
        return reduce(math.lcm, (dl[u] * dr[v] for u, v in inst.edges), 1)
    raise InstanceError(f"unknown balance mode {mode!r}")


def balance(inst: LabelCoverInstance, mode: str = "lcm-square", max_edges: int = 1 << 22):
    """Copy vertex u d(u) times and edge e = (u, v) into K/(d(u)d(v)) parallel edges between every copy pair.

    Every copy then has degree exactly K.
    """
    dl, dr = inst.left_degrees(), inst.right_degrees()
    if min(dl) == 0 or min(dr) == 0:
        raise InstanceError("isolated vertex present")
    K = balance_constant(inst, mode)
    if len(inst.edges) * K > max_edges:
        raise BudgetError("balanced instance too large")
    handle = BalanceHandle(tuple(dl), tuple(dr), K)
    lo, ro = handle.offsets(dl), handle.offsets(dr)
    edges, projs = [], []
    for (u, v), f in zip(inst.edges, inst.projections):
        reps = K // (dl[u] * dr[v])
        for i in range(dl[u]):
            for j in range(dr[v]):
                for _ in range(reps):
                    edges.append((lo[u] + i, ro[v] + j))
                    projs.append(f)
    preds = tuple(p for u, d in enumerate(dl) for p in [inst.predicates[u]] * d)
    out = LabelCoverInstance(len(inst.edges), len(inst.edges), inst.sigma_u, inst.sigma_v, tuple(edges), tuple(projs), preds)
    return out, handle


# Set cover


@dataclass(frozen=True)
class SetCoverInstance:
    n_elements: int
    sets: tuple

    @property
    def m(self) -> int:
        return len(self.sets)

    @property
    def full(self) -> int:
        return (1 << self.n_elements) - 1

    def members(self, i: int) -> list[int]:
        mask, out, b = self.sets[i], [], 0
        while mask:
            if mask & 1:
                out.append(b)
            mask >>= 1
            b += 1
        return out

    def covers(self, selection: Iterable[int]) -> bool:
        acc = 0
        for i in selection:
            acc |= self.sets[i]
        return acc == self.full

    def feasible(self) -> bool:
        return self.covers(range(self.m))

    def max_set_size(self) -> int:
        return max((s.bit_count() for s in self.sets), default=0)

    def frequencies(self) -> list[int]:
        freq = [0] * self.n_elements
        for i in range(self.m):
            for b in self.members(i):
                freq[b] += 1
        return freq

    def max_frequency(self) -> int:
        return max(self.frequencies(), default=0)

    def to_json(self) -> dict:
        return {"kind": "set_cover", "N": self.n_elements, "sets": [self.members(i) for i in range(self.m)]}

    @classmethod
    def from_lists(cls, n: int, sets: Sequence[Iterable[int]]) -> "SetCoverInstance":
        masks = []
        for s in sets:
            mask = 0
            for b in s:
                if not 0 <= b < n:
                    raise InstanceError("element out of range")
                mask |= 1 << b
            masks.append(mask)
        return cls(n, tuple(masks))


def sc_from_json(obj: dict) -> SetCoverInstance:
    if obj.get("kind") != "set_cover":
        raise InstanceError("expected a set_cover object")
    return SetCoverInstance.from_lists(obj["N"], obj["sets"])


def toggle_membership(J: SetCoverInstance, element: int, set_index: int) -> SetCoverInstance:
    sets = list(J.sets)
    sets[set_index] ^= 1 << element
    return SetCoverInstance(J.n_elements, tuple(sets))


def sc_right_index(inst: LabelCoverInstance, v: int, x: int) -> int:
    return v * inst.sigma_v + x


def sc_left_index(inst: LabelCoverInstance, u: int, y: int) -> int:
    return inst.n_right * inst.sigma_v + u * inst.sigma_u + y


def sc_index_label(inst: LabelCoverInstance, idx: int) -> tuple[str, int, int]:
    base = inst.n_right * inst.sigma_v
    if idx < base:
        return ("right",) + divmod(idx, inst.sigma_v)
    return ("left",) + divmod(idx - base, inst.sigma_u)


def sc_transform(inst: LabelCoverInstance, S: SetSystem) -> SetCoverInstance:
    """Ground set E x B (element (e, b) has index e*|B| + b).

    Right label (v, x) covers {e} x C_x on every edge at v; an accepted left
    label (u, y) covers {e} x complement(C_{f_e(y)}) on every edge at u; a
    rejected one is empty.
    """
    if S.m != inst.sigma_v:
        raise InstanceError("set system size must equal the right alphabet size")
    width = S.universe
    comp = [S.complement(x) for x in range(S.m)]
    sets = []
    for v in range(inst.n_right):
        for x in range(inst.sigma_v):
            mask = 0
            for e in inst.right_incidence[v]:
                mask |= S.sets[x] << (e * width)
            sets.append(mask)
    for u in range(inst.n_left):
        for y in range(inst.sigma_u):
            mask = 0
            if inst.accepts(u, y):
                for e in inst.left_incidence[u]:
                    mask |= comp[inst.project(e, y)] << (e * width)
            sets.append(mask)
    return SetCoverInstance(len(inst.edges) * width, tuple(sets))


def sc_planted_cover(inst: LabelCoverInstance, pi: Assignment) -> frozenset:
    return frozenset(
        [sc_right_index(inst, v, pi.right[v]) for v in range(inst.n_right)]
        + [sc_left_index(inst, u, pi.left[u]) for u in range(inst.n_left)]
    )


def sc_label_lists(inst: LabelCoverInstance, selection: Iterable[int]) -> tuple[list, list]:
    sel = set(selection)
    left = [[y for y in range(inst.sigma_u) if sc_left_index(inst, u, y) in sel and inst.accepts(u, y)] for u in range(inst.n_left)]
    right = [[x for x in range(inst.sigma_v) if sc_right_index(inst, v, x) in sel] for v in range(inst.n_right)]
    return left, right


def sc_recover(inst: LabelCoverInstance, selection: Iterable[int], rng: "int | Coins") -> Assignment:
    """Uniform picks from the accepted selected labels of each vertex (left first), 0 when none."""
    coins = as_coins(rng)
    L, R = sc_label_lists(inst, selection)
    return Assignment(tuple(_pick(coins, x) for x in L), tuple(_pick(coins, x) for x in R))


def _pick(coins: Coins, options: list) -> int:
    # one draw per vertex even when the list is empty keeps shared streams aligned
    j = coins.randbelow(max(1, len(options)))
    return options[j] if options else 0


def sc_opt_bruteforce(J: SetCoverInstance, budget: int = DEFAULT_BUDGET) -> tuple[int, frozenset]:
    """Minimum cover by increasing size; combinations order makes the witness lexicographically least."""
    if not J.feasible():
        raise InstanceError("uncoverable element")
    if 2**J.m > budget:
        raise BudgetError("instance too large for exhaustive oracle")
    for k in range(J.m + 1):
        for combo in itertools.combinations(range(J.m), k):
            if J.covers(combo):
                return k, frozenset(combo)
    raise AssertionError("unreachable")


def _milp_cover(rows: list[list[int]], n_vars: int, time_limit: float | None):
    data, ri, ci = [], [], []
    for r, cols in enumerate(rows):
        for c in cols:
            ri.append(r)
            ci.append(c)
            data.append(1.0)
    A = csr_matrix((data, (ri, ci)), shape=(len(rows), n_vars))
    opts = {"time_limit": time_limit} if time_limit else {}
    res = milp(
        c=np.ones(n_vars),
        constraints=LinearConstraint(A, lb=np.ones(len(rows)), ub=np.inf),
        integrality=np.ones(n_vars),
        bounds=Bounds(0, 1),
        options=opts,
    )
    if res.x is None:
        raise InstanceError("integer program failed: " + str(res.message))
    chosen = frozenset(int(i) for i in np.flatnonzero(res.x > 0.5))
    proven = res.status == 0
    return chosen, proven


def sc_opt_ilp(J: SetCoverInstance, time_limit: float | None = 60.0) -> tuple[int, frozenset, bool]:
    """Exact minimum cover via a covering integer program (HiGHS); the flag reports proven optimality."""
    if not J.feasible():
        raise InstanceError("uncoverable element")
    rows = [[] for _ in range(J.n_elements)]
    for i in range(J.m):
        for b in J.members(i):
            rows[b].append(i)
    chosen, proven = _milp_cover(rows, J.m, time_limit)
    if not J.covers(chosen):
        raise InstanceError("solver returned a non-cover")
    return len(chosen), chosen, proven


def greedy_cover(J: SetCoverInstance) -> frozenset:
    if not J.feasible():
        raise InstanceError("uncoverable element")
    covered, chosen = 0, []
    while covered != J.full:
        best, gain = None, 0
        for i, s in enumerate(J.sets):
            g = (s & ~covered).bit_count()
            if g > gain:
                best, gain = i, g
        chosen.append(best)
        covered |= J.sets[best]
    return frozenset(chosen)


# Dominating set


@dataclass(frozen=True)
class DomSetGraph:
    n: int
    adj: tuple
    roles: tuple
    gamma: int
    n_elements: int
    n_sets: int
    n_helpers: int
    sigma: tuple
    pad_centers: tuple = ()

    def set_vertex(self, i: int) -> int:
        return self.n_elements + i

    def edge_set(self) -> frozenset:
        return frozenset(frozenset((a, b)) for a in range(self.n) for b in self.adj[a] if a < b)

    def max_degree(self) -> int:
        return max((len(x) for x in self.adj), default=0)

    def closed_masks(self) -> list[int]:
        out = []
        for a in range(self.n):
            mask = 1 << a
            for b in self.adj[a]:
                mask |= 1 << b
            out.append(mask)
        return out

    def dominates(self, D: Iterable[int]) -> bool:
        masks = self.closed_masks()
        acc = 0
        for a in D:
            acc |= masks[a]
        return acc == (1 << self.n) - 1

    def to_json(self) -> dict:
        return {
            "kind": "graph",
            "n": self.n,
            "edges": sorted([sorted(e) for e in self.edge_set()]),
            "roles": list(self.roles),
            "gamma": self.gamma,
            "sigma": [s if s is not None else -1 for s in self.sigma],
            "pad_centers": list(self.pad_centers),
        }


def graph_from_json(obj: dict) -> DomSetGraph:
    n = obj["n"]
    adj = [set() for _ in range(n)]
    for a, b in obj["edges"]:
        adj[a].add(b)
        adj[b].add(a)
    roles = tuple(obj["roles"])
    return DomSetGraph(
        n,
        tuple(frozenset(a) for a in adj),
        roles,
        obj["gamma"],
        roles.count("element"),
        roles.count("set"),
        roles.count("helper"),
        tuple(None if x < 0 else x for x in obj["sigma"]),
        tuple(obj.get("pad_centers", ())),
    )


def ds_transform(J: SetCoverInstance, gamma: int) -> DomSetGraph:
    """Incidence graph of J plus helper w_h adjacent to sets h*gamma .. (h+1)*gamma - 1.

    Vertices: elements, then sets, then helpers.  ``sigma[u]`` is the smallest
    index of a set containing element u (None when there is none).
    """
    if J.max_set_size() > gamma or J.max_frequency() > gamma:
        raise InstanceError("set size or element frequency exceeds gamma")
    N, m = J.n_elements, J.m
    h = math.ceil(m / gamma) if m else 0
    n = N + m + h
    adj = [set() for _ in range(n)]
    sigma: list = [None] * N
    for i in range(m):
        for b in J.members(i):
            adj[b].add(N + i)
            adj[N + i].add(b)
            if sigma[b] is None:
                sigma[b] = i
        w = N + m + i // gamma
        adj[N + i].add(w)
        adj[w].add(N + i)
    roles = ("element",) * N + ("set",) * m + ("helper",) * h
    return DomSetGraph(n, tuple(frozenset(a) for a in adj), roles, gamma, N, m, h, tuple(sigma))


def star_forest(t: int, delta: int) -> list[list[int]]:
    """Component sizes of the padding forest: floor(t/delta) stars of delta vertices, then one of t mod delta."""
    if delta < 1:
        raise InstanceError("delta must be positive")
    a, b = divmod(t, delta)
    return [delta] * a + ([b] if b else [])


def ds_pad(G: DomSetGraph, n_target: int, delta: int) -> DomSetGraph:
    """Append a star forest on n_target - |V(G)| vertices; its domination number is ceil(t/delta)."""
    t = n_target - G.n
    if t < 0:
        raise InstanceError("n_target too small")
    adj = [set(x) for x in G.adj]
    centers = list(G.pad_centers)
    for size in star_forest(t, delta):
        c = len(adj)
        adj.append(set())
        centers.append(c)
        for _ in range(size - 1):
            leaf = len(adj)
            adj.append({c})
            adj[c].add(leaf)
    roles = G.roles + ("padding",) * t
    return DomSetGraph(
        n_target, tuple(frozenset(a) for a in adj), roles, G.gamma, G.n_elements, G.n_sets, G.n_helpers, G.sigma, tuple(centers)
    )


def ds_recover(G: DomSetGraph, D: Iterable[int]) -> frozenset:
    """Selected set vertices plus the designated set of every selected element; helpers and padding ignored."""
    out = set()
    for a in D:
        role = G.roles[a]
        if role == "set":
            out.add(a - G.n_elements)
        elif role == "element" and G.sigma[a] is not None:
            out.add(G.sigma[a])
    return frozenset(out)


def ds_witness(G: DomSetGraph, cover: Iterable[int]) -> frozenset:
    """Dominating set built from a cover: its set vertices, every helper, every padding center."""
    base = G.n_elements + G.n_sets
    return frozenset([G.set_vertex(i) for i in cover] + list(range(base, base + G.n_helpers)) + list(G.pad_centers))


def ds_opt_bruteforce(G: DomSetGraph, budget: int = DEFAULT_BUDGET) -> tuple[int, frozenset]:
    if 2**G.n > budget:
        raise BudgetError("instance too large for exhaustive oracle")
    masks = G.closed_masks()
    full = (1 << G.n) - 1
    for k in range(G.n + 1):
        for combo in itertools.combinations(range(G.n), k):
            acc = 0
            for a in combo:
                acc |= masks[a]
            if acc == full:
                return k, frozenset(combo)
    raise AssertionError("unreachable")


def ds_opt_ilp(G: DomSetGraph, time_limit: float | None = 60.0) -> tuple[int, frozenset, bool]:
    rows = [sorted({a} | set(G.adj[a])) for a in range(G.n)]
    chosen, proven = _milp_cover(rows, G.n, time_limit)
    if not G.dominates(chosen):
        raise InstanceError("solver returned a non-dominating set")
    return len(chosen), chosen, proven


def greedy_domset(G: DomSetGraph, rotation: int = 0) -> frozenset:
    """Max newly-dominated greedy; ties go to the vertex first in the order starting at ``rotation``."""
    masks = G.closed_masks()
    full = (1 << G.n) - 1
    covered, chosen = 0, []
    while covered != full:
        best, gain, best_rank = None, 0, None
        for a in range(G.n):
            g = (masks[a] & ~covered).bit_count()
            rank = (a - rotation) % G.n
            if g > gain or (g == gain and g > 0 and rank < best_rank):
                best, gain, best_rank = a, g, rank
        chosen.append(best)
        covered |= masks[best]
    return frozenset(chosen)


def random_tiebreak_greedy(G: DomSetGraph, coins: Coins) -> frozenset:
    return greedy_domset(G, coins.randbelow(G.n))


@dataclass
class PullbackCheck:
    lhs: Fraction
    target_emd: Fraction
    rhs: Fraction
    C_T: int = 1
    C_R: int = 1
    D: int = 2

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs


def pullback_check(
    J: SetCoverInstance,
    J2: SetCoverInstance,
    gamma: int,
    n_target: int,
    delta: int,
    algorithm: Callable[[DomSetGraph, Coins], frozenset] = random_tiebreak_greedy,
) -> PullbackCheck:
    """Exact EMD of pulled-back covers against C_T * C_R * EMD of the graph algorithm's outputs + D.

    J and J2 must be one membership toggle apart, so the padded graphs are one
    edge apart (C_T = 1) and the recovery has C_R = 1, D = 2.
    """
    H = ds_pad(ds_transform(J, gamma), n_target, delta)
    H2 = ds_pad(ds_transform(J2, gamma), n_target, delta)
    P = EmpiricalDistribution.from_runs(enumerate_runs(lambda c: algorithm(H, c)))
    Q = EmpiricalDistribution.from_runs(enumerate_runs(lambda c: algorithm(H2, c)))
    target = emd_exact(P, Q)
    PB = EmpiricalDistribution((ds_recover(H, D), w) for D, w in P.support)
    QB = EmpiricalDistribution((ds_recover(H2, D), w) for D, w in Q.support)
    lhs = emd_exact(PB, QB)
    return PullbackCheck(lhs, target, 1 * 1 * target + 2)
