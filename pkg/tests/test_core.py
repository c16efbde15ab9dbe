import itertools
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from swapsens.core import (
    Assignment,
    InstanceError,
    LabelCoverInstance,
    Swap,
    TwoCspInstance,
    all_one_swaps,
    apply_swap,
    assignment_from_json,
    assignment_to_json,
    csp_from_json,
    csp_to_json,
    csp_value,
    lc_from_json,
    lc_to_json,
    opt_bruteforce,
    planted_csp,
    planted_label_cover,
    random_label_cover,
    random_swap,
    swap_distance,
    swap_path,
    value,
)
from swapsens.rng import SeededCoins

from strategies import instance_and_assignment, label_cover


def single_edge(pred=(1, 1)):
    return LabelCoverInstance(1, 1, 2, 2, ((0, 0),), ((0, 1),), (pred,))


def recount(inst, pi):
    """Edge count taken right vertex by right vertex."""
    good = 0
    for v in range(inst.n_right):
        for e, (u, w) in enumerate(inst.edges):
            if w != v:
                continue
            a = pi.left[u]
            if inst.predicates[u][a] and inst.projections[e][a] == pi.right[v]:
                good += 1
    return Fraction(good, len(inst.edges))


def test_single_identity_edge():
    assert value(single_edge(), Assignment((1,), (1,))) == 1


def test_rejecting_predicate_kills_edges():
    assert value(single_edge((0, 0)), Assignment((1,), (1,))) == 0


def test_three_edges_two_satisfied():
    # edges 0,1 satisfied by (left 0 -> 1, right 1); edge 2 projects 0 -> 0 against right label 1
    inst = LabelCoverInstance(1, 2, 2, 2, ((0, 0), (0, 1), (0, 1)), ((1, 0), (1, 1), (0, 1)), ((1, 1),))
    assert value(inst, Assignment((0,), (1, 1))) == Fraction(2, 3)


def test_parallel_edges_count_separately():
    inst = LabelCoverInstance(1, 1, 2, 2, ((0, 0), (0, 0)), ((0, 0), (1, 1)), ((1, 1),))
    assert value(inst, Assignment((0,), (0,))) == Fraction(1, 2)


def test_no_edges_is_an_error():
    inst = LabelCoverInstance(1, 1, 2, 2, (), (), ((1, 1),))
    with pytest.raises(InstanceError):
        value(inst, Assignment((0,), (0,)))


def test_shape_mismatch_is_an_error():
    with pytest.raises(InstanceError):
        value(single_edge(), Assignment((0, 0), (0,)))


def test_bad_tables_rejected():
    with pytest.raises(InstanceError):
        LabelCoverInstance(1, 1, 2, 2, ((0, 0),), ((0, 2),), ((1, 1),))
    with pytest.raises(InstanceError):
        LabelCoverInstance(1, 1, 2, 2, ((0, 1),), ((0, 1),), ((1, 1),))


@given(instance_and_assignment())
def test_value_matches_independent_recount(case):
    inst, pi = case
    assert value(inst, pi) == recount(inst, pi)


def test_random_four_vertex_instance_recount():
    inst = random_label_cover(2, 2, 2, 2, 6, SeededCoins(11))
    for left in itertools.product(range(2), repeat=2):
        for right in itertools.product(range(2), repeat=2):
            pi = Assignment(left, right)
            assert value(inst, pi) == recount(inst, pi)


def best_by_right_labels(inst):
    """Optimum by fixing right labels and letting each left vertex choose independently."""
    best = Fraction(0)
    for right in itertools.product(range(inst.sigma_v), repeat=inst.n_right):
        good = 0
        for u in range(inst.n_left):
            inc = [e for e, (w, _) in enumerate(inst.edges) if w == u]
            good += max(
                (sum(1 for e in inc if inst.projections[e][a] == right[inst.edges[e][1]])
                 for a in range(inst.sigma_u) if inst.predicates[u][a]),
                default=0,
            )
        best = max(best, Fraction(good, len(inst.edges)))
    return best


@given(label_cover())
def test_opt_matches_right_first_oracle(inst):
    v, pi = opt_bruteforce(inst)
    assert v == best_by_right_labels(inst)
    assert value(inst, pi) == v


def test_planted_instance_has_value_one():
    for seed in range(20):
        coins = SeededCoins(seed)
        inst, plant = planted_label_cover(3, 2, 3, 2, [(0, 0), (1, 0), (1, 1), (2, 1)], coins)
        assert value(inst, plant) == 1
        assert opt_bruteforce(inst)[0] == 1


def test_all_rejecting_predicates_value_zero():
    inst = random_label_cover(2, 2, 2, 2, 4, SeededCoins(5), predicate_density=0.0)
    assert opt_bruteforce(inst)[0] == 0


def test_identity_swap_returns_equal_instance():
    inst = single_edge()
    assert apply_swap(inst, Swap("projection", 0, inst.projections[0])) == inst


def test_zero_predicate_swap_zeroes_vertex():
    inst = random_label_cover(2, 2, 2, 2, 5, SeededCoins(2))
    out = apply_swap(inst, Swap("predicate", 0, (0, 0)))
    for left in itertools.product(range(2), repeat=2):
        for right in itertools.product(range(2), repeat=2):
            pi = Assignment(left, right)
            # edges at vertex 0 never count; the rest count iff the projection matches and the label is accepted
            expect = sum(1 for e, (u, v) in enumerate(out.edges)
                         if u != 0 and out.predicates[u][left[u]] and out.projections[e][left[u]] == right[v])
            assert value(out, pi) == Fraction(expect, len(out.edges))


@given(label_cover(), st.randoms(use_true_random=False))
def test_inverse_swaps_restore(inst, rnd):
    coins = SeededCoins(rnd.getrandbits(64))
    s = random_swap(inst, coins)
    old = inst.projections[s.target] if s.kind == "projection" else inst.predicates[s.target]
    assert apply_swap(apply_swap(inst, s), Swap(s.kind, s.target, old)) == inst


def test_invalid_swap_rejected():
    inst = single_edge()
    for s in (Swap("projection", 3, (0, 0)), Swap("projection", 0, (0, 5)), Swap("predicate", 0, (1,)), Swap("x", 0)):
        with pytest.raises(InstanceError):
            apply_swap(inst, s)


def test_swap_distance_examples():
    inst = random_label_cover(2, 2, 2, 2, 4, SeededCoins(9))
    assert swap_distance(inst, inst) == 0
    f = tuple(1 - b for b in inst.projections[0])
    assert swap_distance(inst, apply_swap(inst, Swap("projection", 0, f))) == 1
    other = apply_swap(inst, Swap("projection", 0, f))
    other = apply_swap(other, Swap("projection", 2, tuple(1 - b for b in inst.projections[2])))
    other = apply_swap(other, Swap("predicate", 1, tuple(1 - b for b in inst.predicates[1])))
    assert swap_distance(inst, other) == 3


def test_incomparable_instances():
    a = random_label_cover(2, 2, 2, 2, 4, SeededCoins(1))
    b = random_label_cover(2, 2, 2, 2, 4, SeededCoins(2))
    if a.edges != b.edges:
        with pytest.raises(InstanceError):
            swap_distance(a, b)


@given(label_cover(), label_cover())
def test_swap_distance_is_a_metric_on_comparable_pairs(a, b):
    b = LabelCoverInstance(a.n_left, a.n_right, a.sigma_u, a.sigma_v, a.edges,
                           tuple(tuple(x % a.sigma_v for x in (b.projections[i % len(b.projections)] * a.sigma_u)[:a.sigma_u])
                                 for i in range(len(a.edges))),
                           tuple(tuple((b.predicates[u % b.n_left] * a.sigma_u)[:a.sigma_u]) for u in range(a.n_left)))
    d = swap_distance(a, b)
    assert d == swap_distance(b, a)
    assert (d == 0) == (a == b)
    path = swap_path(a, b)
    assert len(path) == d + 1 and path[-1] == b
    assert all(swap_distance(path[i], path[i + 1]) == 1 for i in range(d))


def test_all_one_swaps_count():
    inst = single_edge()
    swaps = all_one_swaps(inst)
    assert len(swaps) == (2**2 - 1) + (2**2 - 1)
    assert all(swap_distance(inst, apply_swap(inst, s)) == 1 for s in swaps)


@given(label_cover())
def test_json_round_trip(inst):
    assert lc_from_json(lc_to_json(inst)) == inst


def test_csp_round_trip_and_planted_value():
    phi, plant = planted_csp(3, [(0, 1), (1, 2), (0, 2)], 2, SeededCoins(4))
    assert csp_from_json(csp_to_json(phi)) == phi
    assert csp_value(phi, plant) == 1
    pi = Assignment((0, 1), (1,))
    assert assignment_from_json(assignment_to_json(pi)) == pi


def test_csp_rejects_bad_relation():
    with pytest.raises(InstanceError):
        TwoCspInstance(2, 2, ((0, 1),), (((1, 1),),))
