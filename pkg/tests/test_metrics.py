import itertools
from fractions import Fraction
from math import lcm

import networkx as nx
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from swapsens.core import Assignment, InstanceError, LabelCoverInstance, Swap, all_one_swaps, apply_swap, random_label_cover, random_swap, swap_distance
from swapsens.metrics import (
    EmpiricalDistribution,
    RandomizedAlgorithm,
    coupled_expectation_exact,
    distance_vector,
    emd_coupled_upper,
    emd_exact,
    hamming,
    neighboring_witness,
    output_distribution,
    swap_sensitivity,
)
from swapsens.pipeline import best_response
from swapsens.rng import SeededCoins


def bits(s):
    return tuple(int(c) for c in s)


@st.composite
def distribution(draw, length=3, max_support=4):
    k = draw(st.integers(1, max_support))
    pts = draw(st.lists(st.tuples(*[st.integers(0, 1)] * length), min_size=k, max_size=k))
    ws = draw(st.lists(st.integers(1, 6), min_size=k, max_size=k))
    tot = sum(ws)
    return EmpiricalDistribution((p, Fraction(w, tot)) for p, w in zip(pts, ws))


def nx_emd(P, Q):
    """Min-cost flow on the bipartite transport graph with masses scaled to integers."""
    den = lcm(*[w.denominator for _, w in P.support], *[w.denominator for _, w in Q.support])
    G = nx.DiGraph()
    for i, (x, w) in enumerate(P.support):
        G.add_node(("p", i), demand=-int(w * den))
    for j, (y, w) in enumerate(Q.support):
        G.add_node(("q", j), demand=int(w * den))
    for i, (x, _) in enumerate(P.support):
        for j, (y, _) in enumerate(Q.support):
            G.add_edge(("p", i), ("q", j), weight=hamming(x, y))
    return Fraction(nx.min_cost_flow_cost(G), den)


def lp_emd(P, Q):
    xs, ys = P.support, Q.support
    n, m = len(xs), len(ys)
    c = [hamming(x, y) for x, _ in xs for y, _ in ys]
    A, b = [], []
    for i in range(n):
        A.append([1.0 if k // m == i else 0.0 for k in range(n * m)])
        b.append(float(xs[i][1]))
    for j in range(m):
        A.append([1.0 if k % m == j else 0.0 for k in range(n * m)])
        b.append(float(ys[j][1]))
    return linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs").fun


def test_hamming_examples():
    pi = Assignment((0, 1, 2), (0, 1))
    other = Assignment((1, 1, 0), (0, 0))
    assert hamming(pi, pi) == 0
    assert hamming(pi, other) == 3
    dv = distance_vector(pi, other)
    assert (dv.left, dv.right) == (2, 1) and dv.total == 3
    with pytest.raises(InstanceError):
        hamming(pi, Assignment((0,), (0, 1)))
    assert hamming(frozenset({1, 2}), frozenset({2, 3})) == 2


def test_emd_examples():
    P = EmpiricalDistribution([(bits("0000"), Fraction(1, 2)), (bits("1110"), Fraction(1, 2))])
    assert emd_exact(P, P) == 0
    a, b, c, d = bits("0000"), bits("1110"), bits("0001"), bits("1111")
    assert (hamming(a, c), hamming(a, d), hamming(b, c), hamming(b, d)) == (1, 4, 4, 1)
    Q = EmpiricalDistribution([(c, Fraction(1, 2)), (d, Fraction(1, 2))])
    assert emd_exact(P, Q) == 1
    x, y = Assignment((0, 0), (0,)), Assignment((1, 1), (1,))
    assert emd_exact(EmpiricalDistribution.point(x), EmpiricalDistribution.point(y)) == 3


def test_distribution_validation():
    with pytest.raises(ValueError):
        EmpiricalDistribution([((0,), Fraction(1, 2))])
    with pytest.raises(ValueError):
        EmpiricalDistribution([((0,), Fraction(3, 2)), ((1,), Fraction(-1, 2))])
    D = EmpiricalDistribution([((0,), Fraction(1, 4)), ((0,), Fraction(1, 4)), ((1,), Fraction(1, 2)), ((2,), 0)])
    assert len(D) == 2 and D.prob((0,)) == Fraction(1, 2)


@given(distribution(), distribution())
def test_emd_matches_network_flow_and_lp(P, Q):
    e = emd_exact(P, Q)
    assert e == nx_emd(P, Q)
    assert abs(float(e) - lp_emd(P, Q)) < 1e-9


@given(st.lists(st.lists(st.integers(1, 5), min_size=2, max_size=2), min_size=1, max_size=3),
       st.lists(st.lists(st.integers(1, 5), min_size=2, max_size=2), min_size=1, max_size=3))
def test_product_distributions_emd_is_sum_of_coordinate_tv(pw, qw):
    """Independent bit coordinates: the optimal coupling is coordinatewise."""
    n = min(len(pw), len(qw))
    pw, qw = pw[:n], qw[:n]
    pm = [Fraction(a, a + b) for a, b in pw]
    qm = [Fraction(a, a + b) for a, b in qw]

    def product(ms):
        out = []
        for x in itertools.product((0, 1), repeat=n):
            w = Fraction(1)
            for bit, p0 in zip(x, ms):
                w *= p0 if bit == 0 else 1 - p0
            out.append((x, w))
        return EmpiricalDistribution(out)

    assert emd_exact(product(pm), product(qm)) == sum(abs(a - b) for a, b in zip(pm, qm))


@given(distribution(), distribution(), distribution())
def test_emd_metric_axioms(P, Q, R):
    pq = emd_exact(P, Q)
    assert pq == emd_exact(Q, P)
    assert (pq == 0) == (P == Q)
    assert emd_exact(P, R) <= pq + emd_exact(Q, R)


def test_emd_of_point_masses_is_hamming():
    for x, y in itertools.product(itertools.product((0, 1), repeat=3), repeat=2):
        assert emd_exact(EmpiricalDistribution.point(x), EmpiricalDistribution.point(y)) == hamming(x, y)


def _small_instance(seed):
    return random_label_cover(2, 2, 2, 2, 4, SeededCoins(seed))


def test_deterministic_or_input_blind_algorithms_have_zero_emd():
    inst = _small_instance(1)
    det = RandomizedAlgorithm(lambda I, c: Assignment((0, 0), (0, 0)))
    blind = RandomizedAlgorithm(lambda I, c: Assignment((c.randbelow(2), 0), (c.randbelow(2), 0)))
    other = apply_swap(inst, random_swap(inst, SeededCoins(2)))
    assert emd_coupled_upper(det, inst, inst, 16, 0) == 0
    assert emd_coupled_upper(blind, inst, other, 16, 0) == 0
    rep = swap_sensitivity(det, inst, all_one_swaps(inst))
    assert rep.max_emd == 0


def _greedy_left(I, c):
    right = (0, 0)
    left = []
    for u in range(I.n_left):
        scores = [sum(1 for e in I.left_incidence[u] if I.project(e, a) == right[I.edges[e][1]]) for a in range(2)]
        best = max(scores)
        ties = [a for a in range(2) if scores[a] == best]
        left.append(ties[c.randbelow(len(ties))])
    return Assignment(tuple(left), right)


def test_coupled_estimate_matches_enumeration_when_seeds_exhaust():
    # one coin in {0,1} per run: the shared-seed mean over many seeds tends to the exact coupled value
    inst = _small_instance(3)
    other = apply_swap(inst, Swap("projection", 0, tuple(1 - b for b in inst.projections[0])))
    A = RandomizedAlgorithm(_greedy_left)
    exact = coupled_expectation_exact(A, inst, other)
    est = emd_coupled_upper(A, inst, other, 4000, 5)
    assert abs(float(est) - float(exact)) < 0.06
    assert emd_exact(output_distribution(A, inst), output_distribution(A, other)) <= exact


def test_two_seed_algorithm_sampled_equals_exact():
    inst = _small_instance(4)
    A = RandomizedAlgorithm(lambda I, c: Assignment((c.randbelow(2), I.predicates[0][0]), (0, 0)))
    swaps = [s for s in all_one_swaps(inst) if s.kind == "predicate"]
    ex = swap_sensitivity(A, inst, swaps, "exact")
    sa = swap_sensitivity(A, inst, swaps, "sampled", n_samples=8, seed=1)
    assert [e for _, e in ex.per_swap] == [e for _, e in sa.per_swap]


def test_sensitivity_of_projection_encoding():
    inst = LabelCoverInstance(3, 1, 3, 3, ((0, 0), (1, 0), (2, 0)),
                              ((0, 1, 2), (0, 0, 0), (1, 1, 1)), ((1, 1, 1),) * 3)
    A = RandomizedAlgorithm(lambda I, c: Assignment(tuple(I.projections[0]), (0,)))
    swaps = [s for s in all_one_swaps(inst, ("projection",)) if s.target == 0]
    rep = swap_sensitivity(A, inst, swaps)
    for s, e in rep.per_swap:
        assert e == hamming(tuple(s.table), inst.projections[0])
    assert rep.max_emd == 3


def test_witness_single_swap():
    inst = _small_instance(6)
    other = apply_swap(inst, Swap("predicate", 1, tuple(1 - b for b in inst.predicates[1])))
    A = RandomizedAlgorithm(best_response)
    res = neighboring_witness(A, inst, other)
    assert res.step == 0 and res.emd_at_step == res.total_emd and res.distance == 1


def test_witness_picks_the_only_moving_step():
    inst = _small_instance(7)
    other = inst
    for kind, idx in (("projection", 0), ("projection", 1), ("predicate", 0)):
        old = inst.projections[idx] if kind == "projection" else inst.predicates[idx]
        other = apply_swap(other, Swap(kind, idx, tuple(1 - b for b in old)))
    A = RandomizedAlgorithm(lambda I, c: Assignment(tuple(I.predicates[0]), (c.randbelow(2), 0)))
    res = neighboring_witness(A, inst, other)
    assert res.per_step[:2] == [0, 0] and res.step == 2 and res.emd_at_step == res.total_emd == 2


def test_witness_zero_distance_is_error():
    inst = _small_instance(8)
    with pytest.raises(InstanceError):
        neighboring_witness(RandomizedAlgorithm(best_response), inst, inst)


@given(st.integers(0, 2**32))
def test_witness_averaging_bound(seed):
    coins = SeededCoins(seed)
    inst = random_label_cover(2, 2, 2, 2, 4, coins)
    other = inst
    while swap_distance(inst, other) < 3:
        other = apply_swap(other, random_swap(other, coins))
    res = neighboring_witness(RandomizedAlgorithm(best_response), inst, other)
    assert res.emd_at_step * res.distance >= res.total_emd
    assert res.emd_at_step == max(res.per_step)
