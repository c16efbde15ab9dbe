"""Combinatorial parallel repetition of a regular 2-CSP as a left-predicate label cover.

An edge of the repeated game is generated in four steps: draw a k'-subset A of
base vertices, draw one incident base edge per vertex of A (these form the
"anchor" edges), draw k - k' further base edges without replacement among the
rest (the "checked" edges), and connect the left vertex (anchors, checked) to
the right vertex A.

A left label assigns one symbol to each endpoint slot of the k edges (anchor
edges first, then checked edges, two slots per edge), so the left alphabet is
sigma^(2k), encoded little-endian in base sigma.  A right label assigns one
symbol per vertex of A, so the right alphabet is sigma^k'.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Sequence

from .core import Assignment, BudgetError, InstanceError, LabelCoverInstance, TwoCspInstance, csp_value
from .rng import Coins, SeededCoins, as_coins, sample_without_replacement

DEFAULT_BUDGET = 1 << 20


@dataclass(frozen=True)
class IkwParams:
    k: int
    k_prime: int
    epsilon: float = 0.1
    samples_per_vertex: int | None = None
    sample_multiplier: int = 4

    def samples_for(self, n_vertices: int) -> int:
        if self.samples_per_vertex is not None:
            return self.samples_per_vertex
        return max(1, math.ceil(self.sample_multiplier * math.log(max(n_vertices, 2)) / self.epsilon))


@dataclass(frozen=True)
class IkwInstance:
    base: TwoCspInstance
    params: IkwParams
    mode: str
    left_vertices: tuple
    right_vertices: tuple
    lc: LabelCoverInstance
    containing: tuple = field(repr=False)

    def edge_list(self, s: int) -> tuple:
        anchors, checked = self.left_vertices[s]
        return anchors + checked


def _encode(digits: Sequence[int], sigma: int) -> int:
    x = 0
    for dgt in reversed(digits):
        x = x * sigma + dgt
    return x


def _decode(x: int, sigma: int, n: int) -> list[int]:
    out = []
    for _ in range(n):
        out.append(x % sigma)
        x //= sigma
    return out


def _anchor_slot(phi: TwoCspInstance, anchors: Sequence[int], x: int) -> int | None:
    """Slot of vertex x inside the first anchor edge containing it."""
    for p, e in enumerate(anchors):
        a, b = phi.constraints[e]
        if a == x:
            return 2 * p
        if b == x:
            return 2 * p + 1
    return None


def _predicate_table(phi: TwoCspInstance, anchors, checked, k: int) -> tuple:
    sigma = phi.sigma
    offset = len(anchors)
    table = []
    for label in range(sigma ** (2 * k)):
        ds = _decode(label, sigma, 2 * k)
        ok = all(
            phi.relations[e][ds[2 * (offset + p)]][ds[2 * (offset + p) + 1]] for p, e in enumerate(checked)
        )
        table.append(1 if ok else 0)
    return tuple(table)


def _projection_table(phi: TwoCspInstance, anchors, A, k: int) -> tuple:
    sigma = phi.sigma
    slots = [_anchor_slot(phi, anchors, x) for x in A]
    return tuple(
        _encode([_decode(label, sigma, 2 * k)[s] for s in slots], sigma) for label in range(sigma ** (2 * k))
    )


def _check(phi: TwoCspInstance, params: IkwParams) -> None:
    if not phi.is_regular():
        raise InstanceError("base CSP must be regular")
    if not 1 <= params.k_prime <= params.k <= len(phi.constraints):
        raise InstanceError("need 1 <= k' <= k <= number of constraints")
    if params.k_prime > phi.n_vertices:
        raise InstanceError("k' exceeds the number of base vertices")


def _process_paths(phi: TwoCspInstance, params: IkwParams):
    """Every outcome of the four-step process with its exact probability."""
    k, kp = params.k, params.k_prime
    n_e = len(phi.constraints)
    p_a = Fraction(1, math.comb(phi.n_vertices, kp))
    for A in itertools.combinations(range(phi.n_vertices), kp):
        choices = [phi.incidence[x] for x in A]
        p_choice = p_a
        for c in choices:
            p_choice /= len(c)
        for pick in itertools.product(*choices):
            anchors = tuple(sorted(set(pick)))
            rest = [e for e in range(n_e) if e not in anchors]
            r = k - kp
            if len(rest) < r:
                continue
            p_b = p_choice / math.comb(len(rest), r)
            for checked in itertools.combinations(rest, r):
                yield anchors, checked, A, p_b


def _assemble(phi, params, mode, keyed_edges, left_keys) -> IkwInstance:
    k = params.k
    left_vertices = tuple(sorted(left_keys))
    left_index = {s: i for i, s in enumerate(left_vertices)}
    right_vertices = tuple(itertools.combinations(range(phi.n_vertices), params.k_prime))
    right_index = {A: i for i, A in enumerate(right_vertices)}
    proj_cache: dict = {}
    edges, projs = [], []
    for (anchors, checked), A in keyed_edges:
        edges.append((left_index[(anchors, checked)], right_index[A]))
        key = (anchors, A)
        if key not in proj_cache:
            proj_cache[key] = _projection_table(phi, anchors, A, k)
        projs.append(proj_cache[key])
    preds = tuple(_predicate_table(phi, a, c, k) for a, c in left_vertices)
    lc = LabelCoverInstance(
        len(left_vertices),
        len(right_vertices),
        phi.sigma ** (2 * k),
        phi.sigma ** params.k_prime,
        tuple(edges),
        tuple(projs),
        preds,
    )
    containing = [[] for _ in phi.constraints]
    for i, (a, c) in enumerate(left_vertices):
        for e in a + c:
            containing[e].append(i)
    return IkwInstance(phi, params, mode, left_vertices, right_vertices, lc, tuple(tuple(x) for x in containing))


def ikw_build(
    phi: TwoCspInstance,
    params: IkwParams,
    mode: str = "exhaustive",
    n_samples: int = 0,
    seed: int = 0,
    budget: int = DEFAULT_BUDGET,
) -> IkwInstance:
    """Materialize the repeated game.

    Exhaustive mode lists every (left, right) pair the process can emit, with
    multiplicity equal to its probability times the common denominator,
    divided by the gcd of all multiplicities.  Sampled mode keeps ``n_samples``
    independent draws in draw order.
    """
    _check(phi, params)
    if mode == "exhaustive":
        if math.comb(len(phi.constraints), params.k) * math.comb(phi.n_vertices, params.k_prime) > budget:
            raise BudgetError("instance too large for exhaustive materialization")
        weights: dict = {}
        for anchors, checked, A, p in _process_paths(phi, params):
            key = ((anchors, checked), A)
            weights[key] = weights.get(key, Fraction(0)) + p
        den = reduce(math.lcm, (w.denominator for w in weights.values()), 1)
        counts = {key: int(w * den) for key, w in weights.items()}
        g = reduce(math.gcd, counts.values())
        keyed = []
        left_keys = {key[0] for key in counts}
        left_sorted = sorted(left_keys)
        li = {s: i for i, s in enumerate(left_sorted)}
        for key in sorted(counts, key=lambda kk: (li[kk[0]], kk[1])):
            keyed.extend([key] * (counts[key] // g))
        return _assemble(phi, params, "exhaustive", keyed, left_keys)
    if mode == "sampled":
        if n_samples < 1:
            raise InstanceError("sampled mode needs a positive sample count")
        coins = SeededCoins(seed)
        keyed = [_draw_edge(phi, params, coins) for _ in range(n_samples)]
        return _assemble(phi, params, "sampled", keyed, {key[0] for key in keyed})
    raise InstanceError(f"unknown mode {mode!r}")


def _draw_edge(phi: TwoCspInstance, params: IkwParams, coins: Coins):
    A = tuple(sorted(sample_without_replacement(coins, list(range(phi.n_vertices)), params.k_prime)))
    anchors = tuple(sorted({phi.incidence[x][coins.randbelow(len(phi.incidence[x]))] for x in A}))
    rest = [e for e in range(len(phi.constraints)) if e not in anchors]
    checked = tuple(sorted(sample_without_replacement(coins, rest, params.k - params.k_prime)))
    return (anchors, checked), A


def ikw_lift(ikw: IkwInstance, labels: Sequence[int]) -> Assignment:
    """Honest assignment induced by a labeling of the base vertices."""
    phi, sigma, k = ikw.base, ikw.base.sigma, ikw.params.k
    left = []
    for s in range(len(ikw.left_vertices)):
        ds = [0] * (2 * k)
        for p, e in enumerate(ikw.edge_list(s)):
            a, b = phi.constraints[e]
            ds[2 * p], ds[2 * p + 1] = labels[a], labels[b]
        left.append(_encode(ds, sigma))
    right = [_encode([labels[x] for x in A], sigma) for A in ikw.right_vertices]
    return Assignment(tuple(left), tuple(right))


def restriction(ikw: IkwInstance, left_label: int, s: int, A: Sequence[int]) -> tuple | None:
    """Symbols the left label gives the vertices of A, or None if A is not covered by the anchors."""
    anchors, _ = ikw.left_vertices[s]
    ds = _decode(left_label, ikw.base.sigma, 2 * ikw.params.k)
    out = []
    for x in A:
        slot = _anchor_slot(ikw.base, anchors, x)
        if slot is None:
            return None
        out.append(ds[slot])
    return tuple(out)


def cons_member(ikw: IkwInstance, left_labels: Sequence[int], A: Sequence[int], a: int, s: int) -> bool:
    """Whether left vertex s has A among its anchor vertices and its label restricted to A equals a."""
    got = restriction(ikw, left_labels[s], s, A)
    if got is None:
        raise InstanceError("A is not contained in the anchor vertices")
    return _encode(got, ikw.base.sigma) == a


def _symbol_on_edge(ikw: IkwInstance, label: int, s: int, e: int, x: int) -> int:
    p = ikw.edge_list(s).index(e)
    a, _ = ikw.base.constraints[e]
    ds = _decode(label, ikw.base.sigma, 2 * ikw.params.k)
    return ds[2 * p] if a == x else ds[2 * p + 1]


def ikw_recover(
    ikw: IkwInstance, pi: Assignment, rng: "int | Coins", samples_per_vertex: int | None = None
) -> tuple:
    """Randomized decoding of a repeated-game assignment into a base labeling.

    Draw a right vertex A and read a = pi(A).  For every base vertex x draw an
    incident base edge e and ``samples_per_vertex`` left vertices containing e
    (uniformly, with replacement).  If some draw is consistent with (A, a),
    output the symbol a uniformly chosen consistent draw gives x on edge e;
    otherwise output 0.
    """
    coins = as_coins(rng)
    phi = ikw.base
    spv = samples_per_vertex or ikw.params.samples_for(phi.n_vertices)
    ai = coins.randbelow(len(ikw.right_vertices))
    A = ikw.right_vertices[ai]
    a = pi.right[ai]
    out = []
    for x in range(phi.n_vertices):
        inc = phi.incidence[x]
        e = inc[coins.randbelow(len(inc))]
        pool = ikw.containing[e]
        draws = [pool[coins.randbelow(len(pool))] for _ in range(spv)] if pool else []
        good = []
        for s in draws:
            got = restriction(ikw, pi.left[s], s, A)
            if got is not None and _encode(got, phi.sigma) == a:
                good.append(s)
        j = coins.randbelow(max(1, len(good)))
        out.append(_symbol_on_edge(ikw, pi.left[good[j]], good[j], e, x) if good else 0)
    return tuple(out)


def majority_decode(ikw: IkwInstance, pi: Assignment, ai: int) -> tuple:
    """Deterministic comparison decoder: plurality vote of the consistent left vertices (ties to the smaller symbol)."""
    phi = ikw.base
    A = ikw.right_vertices[ai]
    a = pi.right[ai]
    votes = [[0] * phi.sigma for _ in range(phi.n_vertices)]
    for s in range(len(ikw.left_vertices)):
        got = restriction(ikw, pi.left[s], s, A)
        if got is None or _encode(got, phi.sigma) != a:
            continue
        ds = _decode(pi.left[s], phi.sigma, 2 * ikw.params.k)
        seen = set()
        for p, e in enumerate(ikw.edge_list(s)):
            for slot, x in zip((2 * p, 2 * p + 1), phi.constraints[e]):
                if x not in seen:
                    seen.add(x)
                    votes[x][ds[slot]] += 1
    return tuple(max(range(phi.sigma), key=lambda b: (row[b], -b)) if any(row) else 0 for row in votes)


def threshold_index(values: Sequence[Fraction], theta: Fraction) -> int | None:
    for i, v in enumerate(values):
        if v >= theta:
            return i
    return None


def grid_threshold(lo, hi, g: int, grid: int) -> Fraction:
    lo, hi = Fraction(lo), Fraction(hi)
    return lo + (hi - lo) * Fraction(g, grid)


def threshold_select(
    candidates: Sequence,
    values: Sequence,
    lo,
    hi,
    rng: "int | Coins",
    default,
    grid: int = 1 << 20,
):
    """First candidate whose value clears a random grid threshold in [lo, hi); the default if none does."""
    lo, hi = Fraction(lo), Fraction(hi)
    if not lo < hi:
        raise InstanceError("need lo < hi")
    if not candidates or len(candidates) != len(values):
        raise InstanceError("need a nonempty candidate list with one value each")
    coins = as_coins(rng)
    theta = grid_threshold(lo, hi, coins.randbelow(grid), grid)
    i = threshold_index([Fraction(v) for v in values], theta)
    return default if i is None else candidates[i]


def ikw_select(
    ikw: IkwInstance, pi: Assignment, n_candidates: int, lo, hi, rng: "int | Coins", grid: int = 1 << 20
) -> tuple:
    """Run the recovery n_candidates times and keep one base labeling via threshold selection."""
    coins = as_coins(rng)
    cands = [ikw_recover(ikw, pi, coins) for _ in range(n_candidates)]
    vals = [csp_value(ikw.base, c) for c in cands]
    return threshold_select(cands, vals, lo, hi, coins, tuple([0] * ikw.base.n_vertices), grid)
