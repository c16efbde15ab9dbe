import math
from fractions import Fraction

import pytest
from hypothesis import assume, given, strategies as st

from swapsens.core import InstanceError, LabelCoverInstance, apply_swap, planted_label_cover, random_assignment, random_swap, value
from swapsens.covering import (
    SetCoverInstance,
    balance,
    balance_constant,
    ds_opt_bruteforce,
    ds_opt_ilp,
    ds_pad,
    ds_recover,
    ds_transform,
    ds_witness,
    graph_from_json,
    greedy_cover,
    greedy_domset,
    pullback_check,
    sc_from_json,
    sc_index_label,
    sc_label_lists,
    sc_left_index,
    sc_opt_bruteforce,
    sc_opt_ilp,
    sc_planted_cover,
    sc_recover,
    sc_right_index,
    sc_transform,
    star_forest,
    toggle_membership,
)
from swapsens.gadgets import build_set_system, hypercube_set_system
from swapsens.metrics import coupled_expectation_exact, hamming
from swapsens.rng import SeededCoins, enumerate_runs

from strategies import label_cover


# balancing

def test_lcm_square_constant_small_degrees():
    inst = LabelCoverInstance(2, 1, 2, 2, ((0, 0), (1, 0)), ((0, 1), (1, 0)), ((1, 1), (1, 1)))
    assert inst.left_degrees() == [1, 1] and inst.right_degrees() == [2]
    assert balance_constant(inst, "lcm-square") == 4
    out, h = balance(inst, "lcm-square")
    assert set(out.left_degrees()) == {4} == set(out.right_degrees())
    with pytest.raises(InstanceError):
        balance_constant(inst, "other")


@st.composite
def connected_lc(draw):
    inst = draw(label_cover(max_left=2, max_right=2, max_sigma_u=2, max_sigma_v=2, max_edges=3))
    assume(min(inst.left_degrees()) > 0 and min(inst.right_degrees()) > 0)
    return inst


@given(connected_lc(), st.integers(0, 2**32))
def test_balance_value_identity_and_lipschitz(inst, seed):
    out, h = balance(inst, "minimal")
    assert set(out.left_degrees() + out.right_degrees()) == {h.K}
    assert out.n_left == out.n_right == len(inst.edges)
    coins = SeededCoins(seed)
    pi = random_assignment(out, coins)
    runs = enumerate_runs(lambda c: h.project(pi, c))
    assert sum((r.probability * value(inst, r.output) for r in runs), Fraction(0)) == value(out, pi)
    other = random_assignment(out, coins)
    assert coupled_expectation_exact(lambda p, c: h.project(p, c), pi, other) <= hamming(pi, other)


def test_balance_lift_of_planted():
    inst, plant = planted_label_cover(3, 2, 2, 2, [(0, 0), (1, 0), (1, 1), (2, 1), (2, 0)], SeededCoins(3))
    for mode in ("lcm-square", "minimal"):
        out, h = balance(inst, mode)
        assert value(out, h.lift(plant)) == 1


def test_balance_rejects_isolated():
    inst = LabelCoverInstance(2, 1, 2, 2, ((0, 0),), ((0, 1),), ((1, 1), (1, 1)))
    with pytest.raises(InstanceError):
        balance(inst)


# set cover reduction

def small_lc(seed, sigma_v=2):
    return planted_label_cover(2, 2, 2, sigma_v, [(0, 0), (0, 1), (1, 1)], SeededCoins(seed))


@pytest.mark.parametrize("seed", range(10))
def test_planted_cover_and_size_bounds(seed):
    inst, plant = small_lc(seed)
    S = hypercube_set_system(2)
    J = sc_transform(inst, S)
    cover = sc_planted_cover(inst, plant)
    assert len(cover) == inst.n_left + inst.n_right and J.covers(cover)
    delta = max(inst.left_degrees() + inst.right_degrees())
    assert J.max_set_size() <= delta * S.universe
    assert J.max_frequency() <= inst.sigma_u + inst.sigma_v
    assert J.n_elements == len(inst.edges) * S.universe and J.m == inst.n_right * inst.sigma_v + inst.n_left * inst.sigma_u


def test_index_layout():
    inst, _ = small_lc(0)
    for v in range(2):
        for x in range(2):
            assert sc_index_label(inst, sc_right_index(inst, v, x)) == ("right", v, x)
    for u in range(2):
        for y in range(2):
            assert sc_index_label(inst, sc_left_index(inst, u, y)) == ("left", u, y)


@pytest.mark.parametrize("seed", range(10))
def test_predicate_swap_changes_only_left_sets(seed):
    inst, _ = small_lc(seed)
    S = hypercube_set_system(2)
    J = sc_transform(inst, S)
    coins = SeededCoins(seed)
    s = random_swap(inst, coins, "predicate")
    J2 = sc_transform(apply_swap(inst, s), S)
    changed = {i for i in range(J.m) if J.sets[i] != J2.sets[i]}
    assert changed <= {sc_left_index(inst, s.target, y) for y in range(inst.sigma_u)}
    toggles = sum((a ^ b).bit_count() for a, b in zip(J.sets, J2.sets))
    assert toggles <= inst.sigma_u * inst.left_degrees()[s.target] * S.universe


def test_set_system_size_must_match():
    inst, _ = small_lc(0)
    with pytest.raises(InstanceError):
        sc_transform(inst, hypercube_set_system(3))


def test_singleton_lists_are_deterministic():
    inst, plant = small_lc(4)
    runs = enumerate_runs(lambda c: sc_recover(inst, sc_planted_cover(inst, plant), c))
    assert len(runs) == 1 and runs[0].output == plant


@given(st.integers(0, 2**32))
def test_sc_recovery_lipschitz_and_drift(seed):
    coins = SeededCoins(seed)
    inst, _ = small_lc(seed % 1000)
    J = sc_transform(inst, hypercube_set_system(2))
    sel = frozenset(x for x in range(J.m) if coins.randbelow(2))
    sel2 = sel ^ {coins.randbelow(J.m)}
    A = lambda s, c: sc_recover(inst, s, c)
    assert coupled_expectation_exact(A, sel, sel2) <= 1
    other = apply_swap(inst, random_swap(inst, coins, "predicate"))
    assert coupled_expectation_exact(lambda I, c: sc_recover(I, sel, c), inst, other) <= 1


@pytest.mark.parametrize("m,l,seed", [(2, 2, 1), (2, 3, 2), (3, 2, 3), (3, 3, 4), (4, 2, 5)])
def test_slice_soundness(m, l, seed):
    S = build_set_system(m, l, seed)
    coins = SeededCoins(seed)
    checked = 0
    for trial in range(300):
        inst, _ = planted_label_cover(2, 2, 2, m, [(0, 0), (0, 1), (1, 1), (1, 0)], coins)
        J = sc_transform(inst, S)
        # small random label lists per vertex, biased toward covers
        sel = set()
        for u in range(2):
            for y in coins.sample(range(2), 1 + coins.randbelow(2)):
                sel.add(sc_left_index(inst, u, y))
        for v in range(2):
            for x in coins.sample(range(m), 1 + coins.randbelow(2)):
                sel.add(sc_right_index(inst, v, x))
        if not J.covers(sel):
            continue
        L, R = sc_label_lists(inst, sel)
        for e, (u, v) in enumerate(inst.edges):
            if len(L[u]) + len(R[v]) <= l:
                good = sum(1 for y in L[u] for x in R[v] if inst.project(e, y) == x)
                assert Fraction(good, len(L[u]) * len(R[v])) >= Fraction(4, l * l)
                checked += 1
    assert checked > 0


# oracles

def test_family_containing_universe():
    J = SetCoverInstance.from_lists(4, [[0, 1], [0, 1, 2, 3], [3]])
    assert sc_opt_bruteforce(J)[0] == 1 and sc_opt_ilp(J)[0] == 1
    assert greedy_cover(J) == frozenset({1})


def random_family(coins, n=8, m=5):
    sets = [[b for b in range(n) if coins.randbelow(3) == 0] for _ in range(m)]
    sets[-1] = sorted(set(sets[-1]) | set(range(n)) - set().union(*map(set, sets[:-1])))
    return SetCoverInstance.from_lists(n, sets)


@given(st.integers(0, 2**32))
def test_cover_oracles_agree(seed):
    J = random_family(SeededCoins(seed))
    k, sel = sc_opt_bruteforce(J)
    assert J.covers(sel)
    # independent enumeration order: smallest k over all subsets as bitmasks
    best = min(bin(mask).count("1") for mask in range(1, 1 << J.m) if J.covers(i for i in range(J.m) if mask >> i & 1))
    assert k == best == sc_opt_ilp(J)[0]
    g = greedy_cover(J)
    assert J.covers(g) and k <= len(g) <= (math.log(J.n_elements) + 1) * k


def test_infeasible_cover():
    J = SetCoverInstance.from_lists(3, [[0], [1]])
    for fn in (sc_opt_bruteforce, greedy_cover):
        with pytest.raises(InstanceError):
            fn(J)


def test_json_round_trips():
    J = SetCoverInstance.from_lists(4, [[0, 1], [2], [3, 1]])
    assert sc_from_json(J.to_json()) == J
    G = ds_pad(ds_transform(J, 2), 12, 3)
    assert graph_from_json(G.to_json()) == G


# dominating set

def test_star_graph():
    J = SetCoverInstance.from_lists(5, [list(range(5))])
    G = ds_transform(J, 5)
    assert G.n == 7 and ds_opt_bruteforce(G)[0] == 1
    assert greedy_domset(G) == frozenset({G.set_vertex(0)})


def test_graph_size_example():
    J = SetCoverInstance.from_lists(4, [[0, 1], [1, 2], [2, 3]])
    G = ds_transform(J, 2)
    assert G.n == 4 + 3 + 2
    assert G.max_degree() <= 3


def test_gamma_too_small():
    J = SetCoverInstance.from_lists(4, [[0, 1, 2], [3]])
    with pytest.raises(InstanceError):
        ds_transform(J, 2)


@given(st.integers(0, 2**32), st.integers(2, 5))
def test_sandwich_and_toggle(seed, gamma):
    coins = SeededCoins(seed)
    J = random_family(coins, n=5, m=4)
    assume(J.max_set_size() <= gamma and J.max_frequency() <= gamma)
    G = ds_transform(J, gamma)
    sc, cover = sc_opt_bruteforce(J)
    ds, D = ds_opt_bruteforce(G)
    assert sc <= ds <= sc + math.ceil(J.m / gamma)
    assert ds == ds_opt_ilp(G)[0]
    W = ds_witness(G, cover)
    assert G.dominates(W) and len(W) == sc + math.ceil(J.m / gamma)
    R = ds_recover(G, D)
    assert J.covers(R) and len(R) <= len(D)
    J2 = toggle_membership(J, coins.randbelow(5), coins.randbelow(4))
    if J2.max_set_size() <= gamma and J2.max_frequency() <= gamma:
        G2 = ds_transform(J2, gamma)
        assert len(G.edge_set() ^ G2.edge_set()) == 1
        assert len(ds_recover(G, D) ^ ds_recover(G2, D)) <= 2


@given(st.integers(0, 2**32))
def test_ds_recover_lipschitz(seed):
    coins = SeededCoins(seed)
    J = random_family(coins, n=5, m=4)
    G = ds_pad(ds_transform(J, 5), 14, 2)
    D = frozenset(a for a in range(G.n) if coins.randbelow(2))
    D2 = D ^ {coins.randbelow(G.n), coins.randbelow(G.n)}
    assert len(ds_recover(G, D) ^ ds_recover(G, D2)) <= len(D ^ D2)
    pad = [a for a in range(G.n) if G.roles[a] == "padding"]
    assert ds_recover(G, D) == ds_recover(G, D | set(pad)) == ds_recover(G, D - set(pad))


def test_padding_examples():
    J = SetCoverInstance.from_lists(2, [[0, 1]])
    G = ds_transform(J, 2)
    assert ds_pad(G, G.n, 3) == G
    assert star_forest(7, 3) == [3, 3, 1]
    forest = ds_pad(ds_transform(SetCoverInstance(0, ()), 1), 7, 3)
    assert forest.n == 7 and ds_opt_bruteforce(forest)[0] == 3
    with pytest.raises(InstanceError):
        ds_pad(G, G.n - 1, 3)


@pytest.mark.parametrize("t,delta", [(1, 1), (4, 2), (5, 5), (6, 4), (9, 2), (10, 3)])
def test_padding_domination_number(t, delta):
    forest = ds_pad(ds_transform(SetCoverInstance(0, ()), 1), t, delta)
    assert ds_opt_bruteforce(forest)[0] == math.ceil(t / delta)
    assert forest.max_degree() <= delta - 1 or delta == 1


def test_padding_identical_across_toggle():
    J = SetCoverInstance.from_lists(4, [[0, 1], [1, 2], [2, 3]])
    J2 = toggle_membership(J, 3, 0)
    H, H2 = ds_pad(ds_transform(J, 3), 20, 4), ds_pad(ds_transform(J2, 3), 20, 4)
    assert H.pad_centers == H2.pad_centers and H.roles == H2.roles
    assert len(H.edge_set() ^ H2.edge_set()) == 1


@pytest.mark.parametrize("seed", range(5))
def test_pullback(seed):
    coins = SeededCoins(seed)
    J = random_family(coins, n=5, m=4)
    J2 = toggle_membership(J, coins.randbelow(5), coins.randbelow(3))
    assume_ok = J2.feasible()
    if not assume_ok:
        return
    res = pullback_check(J, J2, 5, 14, 6)
    assert res.holds and res.lhs <= res.target_emd + 2
