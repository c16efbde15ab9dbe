"""Named verification suites: each runs exact checks of one finite-scale property on shipped fixtures."""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable

from .compose import comp_recover, compose, compose_lift, soundness_error, toy_decoder
from .core import (
    Assignment,
    LabelCoverInstance,
    Swap,
    apply_swap,
    random_assignment,
    random_label_cover,
    random_swap,
    swap_distance,
    value,
)
from .covering import (
    balance,
    ds_opt_bruteforce,
    ds_pad,
    ds_recover,
    ds_transform,
    pullback_check,
    sc_label_lists,
    sc_planted_cover,
    sc_recover,
    sc_transform,
    toggle_membership,
    SetCoverInstance,
)
from .fixtures import planted_csp_family, small_lc_fixture
from .gadgets import (
    build_code,
    build_expander,
    build_set_system,
    hypercube_set_system,
    list_count,
    verify_code,
    verify_set_system,
)
from .ikw import IkwParams, grid_threshold, ikw_build, ikw_lift, threshold_index
from .metrics import (
    RandomizedAlgorithm,
    coupled_expectation_exact,
    distance_vector,
    emd_exact,
    hamming,
    neighboring_witness,
    output_distribution,
)
from .pipeline import best_response
from .reduce import (
    alphabet_reduce,
    ar_recover,
    build_package,
    degree_reduce,
    dr_recover,
    dr_shape,
)
from .rng import SeededCoins, derive_seed, enumerate_runs
from .store import Report

SHIPPED_SET_SYSTEMS = [(1, 1, 11), (2, 1, 12), (2, 2, 13), (3, 1, 14), (3, 2, 15), (4, 2, 16), (3, 3, 17), (4, 3, 18)]
SHIPPED_CODES = [(2, Fraction(1, 2)), (3, Fraction(1, 3)), (8, Fraction(1, 2)), (16, Fraction(1, 2)),
                 (27, Fraction(2, 3)), (64, Fraction(1, 2)), (5, Fraction(1, 100))]
SHIPPED_EXPANDERS = [(4, 3), (5, 4), (9, 8), (16, 4), (24, 4), (12, 6), (6, 4), (4, 4)]

SUITES: dict[str, Callable[[], Report]] = {}


def suite(name: str):
    def deco(fn):
        SUITES[name] = fn
        return fn

    return deco


def verify_suite(name: str) -> Report:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}")
    return SUITES[name]()


def _flip(pi: Assignment, side: str, idx: int, sigma: int) -> Assignment:
    left, right = list(pi.left), list(pi.right)
    if side == "left":
        left[idx] = (left[idx] + 1) % sigma
    else:
        right[idx] = (right[idx] + 1) % sigma
    return Assignment(tuple(left), tuple(right))


def _four_regular_lc(seed: int, n_right: int = 2, sigma_u: int = 2, sigma_v: int = 2) -> tuple[LabelCoverInstance, Assignment]:
    """Planted instance where every right vertex has degree 4 (four left vertices, complete bipartite)."""
    from .core import planted_label_cover

    edges = [(u, v) for u in range(4) for v in range(n_right)]
    return planted_label_cover(4, n_right, sigma_u, sigma_v, edges, SeededCoins(seed))


@suite("neighboring-witness")
def _neighboring_witness() -> Report:
    rep = Report("neighboring-witness")
    alg = RandomizedAlgorithm(best_response, "best-response")
    for i in range(10):
        coins = SeededCoins(derive_seed(101, i))
        inst = random_label_cover(2, 2, 2, 2, 4, coins)
        other = inst
        while swap_distance(inst, other) < 3:
            other = apply_swap(other, random_swap(other, coins))
        res = neighboring_witness(alg, inst, other)
        rep.check(f"fixture {i}: best step EMD * distance >= total EMD", res.emd_at_step * res.distance, ">=", res.total_emd)
    return rep


@suite("degree-reduction-region")
def _degree_reduction() -> Report:
    rep = Report("degree-reduction-region")
    for i in range(6):
        inst, plant = _four_regular_lc(derive_seed(202, i))
        d = 4
        pkg = build_package(inst, d, 0.9, i)
        out = degree_reduce(inst, d, pkg)
        shape = dr_shape(inst)
        coins = SeededCoins(derive_seed(203, i))
        s = random_swap(inst, coins, "projection")
        rep.check(f"fixture {i}: projection swap changes d target tables",
                  swap_distance(out, degree_reduce(apply_swap(inst, s), d, pkg)), "==", d)
        s = random_swap(inst, coins, "predicate")
        rep.check(f"fixture {i}: predicate swap changes one target table",
                  swap_distance(out, degree_reduce(apply_swap(inst, s), d, pkg)), "==", 1)
        p1 = random_assignment(out, coins)
        p2 = _flip(p1, "right", coins.randbelow(out.n_right), out.sigma_v)
        h = hamming(p1, p2)
        A = lambda pi, c: dr_recover(out, pi, shape, c)
        coupled = coupled_expectation_exact(A, p1, p2)
        emd = emd_exact(output_distribution(RandomizedAlgorithm(A), p1), output_distribution(RandomizedAlgorithm(A), p2))
        right = coupled_expectation_exact(A, p1, p2, metric=lambda x, y: distance_vector(x, y).right)
        rep.check(f"fixture {i}: exact EMD <= coupled expectation", emd, "<=", coupled)
        rep.check(f"fixture {i}: coupled recovery distance <= h", coupled, "<=", h)
        rep.check(f"fixture {i}: right-coordinate distance <= (1/min right degree) * right distance", right, "<=",
                  Fraction(distance_vector(p1, p2).right, min(shape)))
    return rep


@suite("alphabet-reduction")
def _alphabet_reduction() -> Report:
    rep = Report("alphabet-reduction")
    code = build_code(2, Fraction(1, 100))
    for i in range(6):
        inst, plant = small_lc_fixture(derive_seed(303, i), n_left=3, n_right=2, degree=2)
        out = alphabet_reduce(inst, code)
        coins = SeededCoins(derive_seed(304, i))
        s = random_swap(inst, coins, "projection")
        rep.check(f"fixture {i}: projection swap changes k target tables",
                  swap_distance(out, alphabet_reduce(apply_swap(inst, s), code)), "==", code.block_length)
        s2 = random_swap(inst, coins, "predicate")
        rep.check(f"fixture {i}: predicate swap changes one target table",
                  swap_distance(out, alphabet_reduce(apply_swap(inst, s2), code)), "==", 1)
        p1 = random_assignment(out, coins)
        p2 = _flip(p1, "left", coins.randbelow(out.n_left), out.sigma_u)
        h = hamming(p1, p2)
        dl, dr = inst.left_degrees(), inst.right_degrees()
        A = lambda pi, c: ar_recover(inst, pi, c)
        rep.check(f"fixture {i}: coupled recovery distance <= (1 + Delta_U/delta_V) h",
                  coupled_expectation_exact(A, p1, p2), "<=", (1 + Fraction(max(dl), min(dr))) * h)
        other = apply_swap(inst, s)
        drift = coupled_expectation_exact(lambda I, c: ar_recover(I, p1, c), inst, other)
        rep.check(f"fixture {i}: source-swap drift <= 1/delta_V", drift, "<=", Fraction(1, min(dr)))
    return rep


@suite("ikw-blowup")
def _ikw_blowup() -> Report:
    rep = Report("ikw-blowup")
    for i, (phi, plant) in enumerate(planted_csp_family(6, 404)):
        for k in (2, 3):
            if k > len(phi.constraints):
                continue
            ikw = ikw_build(phi, IkwParams(k, 1))
            j = derive_seed(405, i, k) % len(phi.constraints)
            rel = tuple(tuple(1 - x for x in row) for row in phi.relations[j])
            ikw2 = ikw_build(apply_swap(phi, Swap("csp", j, rel)), IkwParams(k, 1))
            changed = sum(1 for a, b in zip(ikw.lc.predicates, ikw2.lc.predicates) if a != b)
            n_e = len(phi.constraints)
            expected = 1 - Fraction(math.comb(n_e - 1, k - 1), math.comb(n_e, k - 1))
            rep.check(f"fixture {i}, k={k}: changed predicate fraction", Fraction(changed, ikw.lc.n_left), "==", expected)
            rep.check(f"fixture {i}, k={k}: projections unchanged", ikw.lc.projections == ikw2.lc.projections, "==", True)
    return rep


@suite("ikw-completeness")
def _ikw_completeness() -> Report:
    rep = Report("ikw-completeness")
    for i, (phi, plant) in enumerate(planted_csp_family(8, 505)):
        ikw = ikw_build(phi, IkwParams(2, 1))
        rep.check(f"fixture {i}: honest lift has value 1", value(ikw.lc, ikw_lift(ikw, plant)), "==", Fraction(1))
    return rep


@suite("stable-threshold-selector")
def _threshold() -> Report:
    rep = Report("stable-threshold-selector")
    grid = 1 << 10
    lo, hi = Fraction(1, 4), Fraction(1, 2)
    vals = [Fraction(1, 5), Fraction(3, 10), Fraction(9, 20), Fraction(1)]
    moved = list(vals)
    moved[1] = Fraction(2, 5)
    differ = sum(1 for g in range(grid) if threshold_index(vals, grid_threshold(lo, hi, g, grid))
                 != threshold_index(moved, grid_threshold(lo, hi, g, grid)))
    gap = (moved[1] - vals[1]) / (hi - lo)
    rep.check("disagreement probability within one grid cell of gap/(hi-lo)", abs(Fraction(differ, grid) - gap), "<=", Fraction(1, grid))
    worst = min(vals[threshold_index(vals, grid_threshold(lo, hi, g, grid))] for g in range(grid))
    rep.check("selected value >= lo when a value-1 candidate exists", worst, ">=", lo)
    return rep


@suite("composition")
def _composition() -> Report:
    rep = Report("composition")
    for i in range(4):
        inst, plant = small_lc_fixture(derive_seed(606, i), n_left=3, n_right=2, degree=2)
        dec = toy_decoder(max(inst.left_degrees()), inst.sigma_v)
        comp = compose(inst, dec)
        rep.check(f"fixture {i}: |U'| = |V| 2^r", comp.n_left, "==", inst.n_right * dec.n_random)
        rep.check(f"fixture {i}: |V'| = |U| m", comp.n_right, "==", inst.n_left * dec.proof_length)
        rep.check(f"fixture {i}: honest proofs satisfy", value(comp, compose_lift(comp, plant)), "==", Fraction(1))
        coins = SeededCoins(derive_seed(607, i))
        s = random_swap(inst, coins)
        comp2 = compose(apply_swap(inst, s), dec)
        u = s.target if s.kind == "predicate" else inst.edges[s.target][0]
        proj = sum(1 for e in range(len(comp.edges)) if comp.projection_key(e) != comp2.projection_key(e))
        rep.check(f"fixture {i}: source swap changes no projections", proj, "==", 0)
        rep.check(f"fixture {i}: changed predicates <= deg(u) 2^r", swap_distance(comp, comp2), "<=",
                  inst.left_degrees()[u] * dec.n_random)
        pi = compose_lift(comp, plant)
        left = list(pi.left)
        left[0] = tuple((x + 1) % dec.proof_alphabet for x in left[0])
        pi2 = Assignment(tuple(left), pi.right)
        d1 = _dist_of(lambda c: comp_recover(comp, pi, c))
        d2 = _dist_of(lambda c: comp_recover(comp, pi2, c))
        rep.check(f"fixture {i}: recovery ignores composed left labels", d1 == d2, "==", True)
        consts = comp.constants()
        drift = coupled_expectation_exact(lambda C, c: comp_recover(C, pi, c), comp, comp2,
                                          B=lambda C, c: comp_recover(C, pi, c))
        rep.check(f"fixture {i}: one-swap drift <= D_Comp", drift, "<=", consts["D_Comp"])
        r = coins.randbelow(comp.n_right)
        pi3 = _flip(pi, "right", r, dec.proof_alphabet)
        lip = coupled_expectation_exact(lambda p, c: comp_recover(comp, p, c), pi, pi3)
        rep.check(f"fixture {i}: one right-coordinate change moves recovery <= d (1+d_V) 2^-r", lip, "<=", consts["C_R"])
        circ = comp.circuits[0]
        if circ.arity == 2 and dec.proof_alphabet ** dec.proof_length <= 1 << 12:
            err = soundness_error(dec, circ, len(circ.tuples))
            rep.check(f"fixture {i}: measured list-decoding error with the declared list", err, "==", Fraction(0))
    return rep


def _dist_of(program):
    from .metrics import EmpiricalDistribution

    return EmpiricalDistribution.from_runs(enumerate_runs(program))


@suite("sensitivity-pullback")
def _pullback() -> Report:
    rep = Report("sensitivity-pullback")
    for i in range(4):
        coins = SeededCoins(derive_seed(707, i))
        sets = [[b for b in range(6) if coins.randbelow(2)] for _ in range(4)]
        sets.append(list(range(0, 6, 2)))
        sets.append(list(range(1, 6, 2)))
        J = SetCoverInstance.from_lists(6, sets)
        J2 = toggle_membership(J, coins.randbelow(6), coins.randbelow(4))
        if not J2.feasible():
            continue
        gamma = max(J.max_set_size(), J.max_frequency(), J2.max_set_size(), J2.max_frequency())
        n = J.n_elements + J.m + math.ceil(J.m / gamma) + 5
        res = pullback_check(J, J2, gamma, n, gamma + 1)
        rep.check(f"fixture {i}: pulled-back EMD <= C_T C_R EMD(target) + D", res.lhs, "<=", res.rhs)
    return rep


@suite("m-l-set-system")
def _set_systems() -> Report:
    rep = Report("m-l-set-system")
    for m, l, seed in SHIPPED_SET_SYSTEMS:
        S = build_set_system(m, l, seed)
        rep.check(f"random (m={m}, l={l}) system passes brute force", verify_set_system(S, l), "==", True)
    for m in (1, 2, 3):
        S = hypercube_set_system(m)
        rep.check(f"hypercube m={m} passes brute force at l=2m", verify_set_system(S, 2 * m), "==", True)
    return rep


@suite("sc-recovery")
def _sc_recovery() -> Report:
    rep = Report("sc-recovery")
    S = hypercube_set_system(2)
    for i in range(4):
        inst, plant = small_lc_fixture(derive_seed(808, i), n_left=2, n_right=2, degree=2)
        J = sc_transform(inst, S)
        cover = sc_planted_cover(inst, plant)
        rep.check(f"fixture {i}: planted labels form a cover", J.covers(cover), "==", True)
        coins = SeededCoins(derive_seed(809, i))
        sel = {x for x in range(J.m) if coins.randbelow(2)}
        sel2 = sel ^ {coins.randbelow(J.m)}
        lip = coupled_expectation_exact(lambda s, c: sc_recover(inst, s, c), sel, sel2)
        rep.check(f"fixture {i}: toggling one index moves recovery <= 1", lip, "<=", hamming(frozenset(sel), frozenset(sel2)))
        other = apply_swap(inst, random_swap(inst, coins, "predicate"))
        drift = coupled_expectation_exact(lambda I, c: sc_recover(I, sel, c), inst, other)
        rep.check(f"fixture {i}: predicate-swap drift <= 1", drift, "<=", 1)
    return rep


@suite("sc-slice-soundness")
def _slice() -> Report:
    rep = Report("sc-slice-soundness")
    for i, (m, l, seed) in enumerate([(2, 2, 13), (2, 3, 21), (3, 2, 15), (4, 2, 16)]):
        S = build_set_system(m, l, seed)
        coins = SeededCoins(derive_seed(909, i))
        inst = random_label_cover(2, 2, 2, m, 4, coins, 1.0)
        J = sc_transform(inst, S)
        for _ in range(50):
            sel = {x for x in range(J.m) if coins.randbelow(3) == 0}
            if not J.covers(sel):
                continue
            L, R = sc_label_lists(inst, sel)
            for e, (u, v) in enumerate(inst.edges):
                if len(L[u]) + len(R[v]) > l:
                    continue
                good = sum(1 for y in L[u] for x in R[v] if inst.project(e, y) == x)
                rep.check(f"system {i}: edge {e} satisfaction probability >= 4/l^2",
                          Fraction(good, len(L[u]) * len(R[v])), ">=", Fraction(4, l * l))
    return rep


@suite("lc-balance")
def _balance() -> Report:
    rep = Report("lc-balance")
    for i in range(4):
        inst, plant = small_lc_fixture(derive_seed(1010, i), n_left=2, n_right=2, degree=2 if i % 2 else 1)
        out, handle = balance(inst, "lcm-square")
        rep.check(f"fixture {i}: all degrees equal K", sorted(set(out.left_degrees() + out.right_degrees())), "==", [handle.K])
        coins = SeededCoins(derive_seed(1011, i))
        pi = random_assignment(out, coins)
        exp = sum((r.probability * value(inst, r.output) for r in enumerate_runs(lambda c: handle.project(pi, c))), Fraction(0))
        rep.check(f"fixture {i}: expected projected value equals balanced value", exp, "==", value(out, pi))
        pi2 = _flip(pi, "left", coins.randbelow(out.n_left), out.sigma_u)
        lip = coupled_expectation_exact(lambda p, c: handle.project(p, c), pi, pi2)
        rep.check(f"fixture {i}: projection moves <= Hamming distance", lip, "<=", hamming(pi, pi2))
    return rep


@suite("ds-recovery")
def _ds_recovery() -> Report:
    rep = Report("ds-recovery")
    for i in range(4):
        coins = SeededCoins(derive_seed(1111, i))
        sets = [[b for b in range(5) if coins.randbelow(2)] for _ in range(3)] + [list(range(5))]
        J = SetCoverInstance.from_lists(5, sets)
        G = ds_transform(J, 5)
        k, D = ds_opt_bruteforce(G)
        R = ds_recover(G, D)
        rep.check(f"fixture {i}: recovered family covers", J.covers(R), "==", True)
        rep.check(f"fixture {i}: |R(D)| <= |D|", len(R), "<=", len(D))
        D2 = set(D) ^ {coins.randbelow(G.n), coins.randbelow(G.n)}
        rep.check(f"fixture {i}: |R(D) ^ R(D~)| <= |D ^ D~|", len(R ^ ds_recover(G, D2)), "<=", len(set(D) ^ D2))
        J2 = toggle_membership(J, coins.randbelow(5), coins.randbelow(3))
        G2 = ds_transform(J2, 5)
        rep.check(f"fixture {i}: toggle drift <= 2", len(R ^ ds_recover(G2, D)), "<=", 2)
    return rep


@suite("ds-padded-recovery")
def _ds_padded() -> Report:
    rep = Report("ds-padded-recovery")
    for t, delta in [(7, 3), (5, 5), (4, 2), (1, 3)]:
        forest = ds_pad(ds_transform(SetCoverInstance.from_lists(1, [[0]]), 1), 3 + t, delta)
        k, _ = ds_opt_bruteforce(forest)
        rep.check(f"padding t={t}, Delta={delta}: domination number is ceil(t/Delta) (+1 for the base graph)",
                  k, "==", math.ceil(t / delta) + 1)
    for i in range(3):
        coins = SeededCoins(derive_seed(1212, i))
        sets = [[b for b in range(6) if coins.randbelow(2)] for _ in range(4)]
        J = SetCoverInstance.from_lists(6, sets)
        J2 = toggle_membership(J, coins.randbelow(6), coins.randbelow(4))
        gamma = 6
        n = 6 + 4 + 1 + 6
        H, H2 = ds_pad(ds_transform(J, gamma), n, 4), ds_pad(ds_transform(J2, gamma), n, 4)
        rep.check(f"fixture {i}: common vertex count", H.n, "==", H2.n)
        rep.check(f"fixture {i}: exactly one differing edge", len(H.edge_set() ^ H2.edge_set()), "==", 1)
        rep.check(f"fixture {i}: identical padding", H.pad_centers == H2.pad_centers and H.roles == H2.roles, "==", True)
    return rep


@suite("code-distance")
def _codes() -> Report:
    rep = Report("code-distance")
    for s, delta in SHIPPED_CODES:
        c = build_code(s, delta)
        rep.check(f"code s={s}, delta={delta}: verified distance >= 1 - delta", verify_code(c), ">=", 1 - delta)
    return rep


@suite("code-list-count")
def _list_count() -> Report:
    rep = Report("code-list-count")
    c = build_code(8, Fraction(1, 2))
    coins = SeededCoins(1313)
    for i in range(20):
        w = tuple(coins.randbelow(c.target_size) for _ in range(c.block_length))
        for eta in (Fraction(2, 3), Fraction(1)):
            res = list_count(c, w, eta)
            if res.precondition:
                rep.check(f"word {i}, eta={eta}: list size <= floor(2/eta)", res.count, "<=", math.floor(2 / eta))
    c2 = build_code(4, Fraction(1, 100))
    for i in range(10):
        w = tuple(coins.randbelow(c2.target_size) for _ in range(c2.block_length))
        eta = Fraction(1, 2)
        res = list_count(c2, w, eta)
        rep.check(f"distance-1 code word {i}: list size <= 2/eta", res.count, "<=", math.floor(2 / eta))
    return rep


@suite("expander-certificates")
def _expanders() -> Report:
    rep = Report("expander-certificates")
    for n, d in SHIPPED_EXPANDERS:
        G = build_expander(n, d, 0.95, derive_seed(1414, n, d))
        rep.check(f"[{n},{d}] handshake", sum(len(r) for r in G.neighbors), "==", n * d)
        if n == d + 1:
            rep.check(f"K_{n} lambda equals 1/d within 1e-10", abs(G.measured_lambda - 1 / d), "<=", 1e-10)
        rep.measurements.append({"graph": f"[{n},{d}]", "lambda": G.measured_lambda, "residual": G.residual,
                                 "certified": G.certified})
    return rep
