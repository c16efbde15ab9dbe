"""Label cover instances with left predicates, base 2-CSPs, swaps and exhaustive optima."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Any, Iterable, Sequence

DEFAULT_BUDGET = 1 << 20


class InstanceError(ValueError):
    pass


class BudgetError(ValueError):
    pass


@dataclass(frozen=True)
class Assignment:
    left: tuple
    right: tuple

    def __post_init__(self):
        object.__setattr__(self, "left", tuple(self.left))
        object.__setattr__(self, "right", tuple(self.right))


@dataclass(frozen=True)
class LabelCoverInstance:
    """Bipartite projection game with one accept/reject table per left vertex.

    Edge ``e = edges[i]`` carries ``projections[i]``, a table of length
    ``sigma_u`` with entries in ``range(sigma_v)``.  ``predicates[u]`` is a
    0/1 table of length ``sigma_u``.  Parallel edges are allowed.
    """

    n_left: int
    n_right: int
    sigma_u: int
    sigma_v: int
    edges: tuple
    projections: tuple
    predicates: tuple

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(u), int(v)) for u, v in self.edges))
        object.__setattr__(self, "projections", tuple(tuple(int(b) for b in f) for f in self.projections))
        object.__setattr__(self, "predicates", tuple(tuple(int(bool(x)) for x in p) for p in self.predicates))
        if self.sigma_u < 1 or self.sigma_v < 1:
            raise InstanceError("alphabets must be nonempty")
        if len(self.projections) != len(self.edges):
            raise InstanceError("one projection table per edge required")
        if len(self.predicates) != self.n_left:
            raise InstanceError("one predicate table per left vertex required")
        for u, v in self.edges:
            if not (0 <= u < self.n_left and 0 <= v < self.n_right):
                raise InstanceError(f"edge ({u},{v}) out of range")
        for f in self.projections:
            if len(f) != self.sigma_u or any(not 0 <= b < self.sigma_v for b in f):
                raise InstanceError("projection table has wrong shape")
        for p in self.predicates:
            if len(p) != self.sigma_u:
                raise InstanceError("predicate table has wrong shape")

    # uniform accessors shared with lazily defined instances
    def accepts(self, u: int, a: Any) -> bool:
        return self.predicates[u][a] == 1

    def project(self, e: int, a: Any) -> Any:
        return self.projections[e][a]

    def predicate_key(self, u: int):
        return self.predicates[u]

    def projection_key(self, e: int):
        return self.projections[e]

    @property
    def is_ordinary(self) -> bool:
        return all(all(p) for p in self.predicates)

    @cached_property
    def left_incidence(self) -> tuple:
        inc = [[] for _ in range(self.n_left)]
        for i, (u, _) in enumerate(self.edges):
            inc[u].append(i)
        return tuple(tuple(x) for x in inc)

    @cached_property
    def right_incidence(self) -> tuple:
        inc = [[] for _ in range(self.n_right)]
        for i, (_, v) in enumerate(self.edges):
            inc[v].append(i)
        return tuple(tuple(x) for x in inc)

    def left_degrees(self) -> list[int]:
        return [len(x) for x in self.left_incidence]

    def right_degrees(self) -> list[int]:
        return [len(x) for x in self.right_incidence]

    def shape(self) -> tuple:
        return (self.n_left, self.n_right, self.sigma_u, self.sigma_v, self.edges)


@dataclass(frozen=True)
class TwoCspInstance:
    """Binary-constraint CSP; ``relations[i][a][b]`` is 1 iff (a, b) satisfies constraint i."""

    n_vertices: int
    sigma: int
    constraints: tuple
    relations: tuple

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple((int(a), int(b)) for a, b in self.constraints))
        object.__setattr__(
            self, "relations", tuple(tuple(tuple(int(bool(x)) for x in row) for row in r) for r in self.relations)
        )
        if len(self.relations) != len(self.constraints):
            raise InstanceError("one relation per constraint required")
        for a, b in self.constraints:
            if not (0 <= a < self.n_vertices and 0 <= b < self.n_vertices):
                raise InstanceError("constraint endpoint out of range")
        for r in self.relations:
            if len(r) != self.sigma or any(len(row) != self.sigma for row in r):
                raise InstanceError("relation table has wrong shape")

    @cached_property
    def incidence(self) -> tuple:
        inc = [[] for _ in range(self.n_vertices)]
        for i, (a, b) in enumerate(self.constraints):
            inc[a].append(i)
            if b != a:
                inc[b].append(i)
        return tuple(tuple(x) for x in inc)

    def degrees(self) -> list[int]:
        return [len(x) for x in self.incidence]

    def is_regular(self) -> bool:
        return len(set(self.degrees())) <= 1

    def satisfied(self, i: int, labels: Sequence[int]) -> bool:
        a, b = self.constraints[i]
        return self.relations[i][labels[a]][labels[b]] == 1


@dataclass(frozen=True)
class Swap:
    """One table replacement.

    kind is one of ``"projection"`` (target = edge index, table = new
    projection), ``"predicate"`` (target = left vertex, table = new predicate),
    ``"csp"`` (target = constraint index, table = new relation) or
    ``"toggle"`` (target = (element, set index), table unused).
    """

    kind: str
    target: Any
    table: Any = None


def value(inst, pi: Assignment) -> Fraction:
    """Exact fraction of satisfied edges, counting parallel edges separately."""
    if not inst.edges:
        raise InstanceError("no edges")
    if len(pi.left) != inst.n_left or len(pi.right) != inst.n_right:
        raise InstanceError("assignment does not match instance")
    good = 0
    ok = [inst.accepts(u, pi.left[u]) for u in range(inst.n_left)]
    for e, (u, v) in enumerate(inst.edges):
        if ok[u] and inst.project(e, pi.left[u]) == pi.right[v]:
            good += 1
    return Fraction(good, len(inst.edges))


def csp_value(phi: TwoCspInstance, labels: Sequence[int]) -> Fraction:
    if not phi.constraints:
        raise InstanceError("no edges")
    good = sum(phi.satisfied(i, labels) for i in range(len(phi.constraints)))
    return Fraction(good, len(phi.constraints))


def opt_bruteforce(inst: LabelCoverInstance, budget: int = DEFAULT_BUDGET) -> tuple[Fraction, Assignment]:
    """Exact optimum by scanning all assignments in lexicographic order.

    The first maximizer met is returned, which is the lexicographically
    smallest flattened (left labels, right labels) vector.
    """
    space = inst.sigma_u ** inst.n_left * inst.sigma_v ** inst.n_right
    if space > budget:
        raise BudgetError("instance too large for exhaustive oracle")
    best = Fraction(-1)
    best_pi = None
    lefts = itertools.product(range(inst.sigma_u), repeat=inst.n_left)
    for left in lefts:
        for right in itertools.product(range(inst.sigma_v), repeat=inst.n_right):
            pi = Assignment(left, right)
            val = value(inst, pi)
            if val > best:
                best, best_pi = val, pi
                if best == 1:
                    return best, best_pi
    return best, best_pi


def apply_swap(inst, s: Swap):
    if isinstance(inst, TwoCspInstance):
        if s.kind != "csp":
            raise InstanceError("invalid swap")
        i = s.target
        if not 0 <= i < len(inst.constraints):
            raise InstanceError("invalid swap")
        rel = tuple(tuple(int(bool(x)) for x in row) for row in s.table)
        if len(rel) != inst.sigma or any(len(row) != inst.sigma for row in rel):
            raise InstanceError("invalid swap")
        rels = list(inst.relations)
        rels[i] = rel
        return TwoCspInstance(inst.n_vertices, inst.sigma, inst.constraints, tuple(rels))
    if s.kind == "projection":
        e = s.target
        table = tuple(s.table)
        if not 0 <= e < len(inst.edges) or len(table) != inst.sigma_u or any(
            not 0 <= b < inst.sigma_v for b in table
        ):
            raise InstanceError("invalid swap")
        projs = list(inst.projections)
        projs[e] = table
        return LabelCoverInstance(
            inst.n_left, inst.n_right, inst.sigma_u, inst.sigma_v, inst.edges, tuple(projs), inst.predicates
        )
    if s.kind == "predicate":
        u = s.target
        table = tuple(int(bool(x)) for x in s.table)
        if not 0 <= u < inst.n_left or len(table) != inst.sigma_u:
            raise InstanceError("invalid swap")
        preds = list(inst.predicates)
        preds[u] = table
        return LabelCoverInstance(
            inst.n_left, inst.n_right, inst.sigma_u, inst.sigma_v, inst.edges, inst.projections, tuple(preds)
        )
    raise InstanceError("invalid swap")


def comparable(inst, other) -> bool:
    return (
        inst.n_left == other.n_left
        and inst.n_right == other.n_right
        and inst.sigma_u == other.sigma_u
        and inst.sigma_v == other.sigma_v
        and inst.edges == other.edges
    )


def differing_tables(inst, other) -> list[tuple[str, int]]:
    """Differing tables in canonical order: projections by edge, then predicates by vertex."""
    if not comparable(inst, other):
        raise InstanceError("incomparable instances")
    out = [("projection", e) for e in range(len(inst.edges)) if inst.projection_key(e) != other.projection_key(e)]
    out += [("predicate", u) for u in range(inst.n_left) if inst.predicate_key(u) != other.predicate_key(u)]
    return out


def swap_distance(inst, other) -> int:
    return len(differing_tables(inst, other))


def swap_path(inst: LabelCoverInstance, other: LabelCoverInstance) -> list[LabelCoverInstance]:
    """Shortest swap path from ``inst`` to ``other`` replacing tables in canonical order."""
    path = [inst]
    cur = inst
    for kind, idx in differing_tables(inst, other):
        table = other.projections[idx] if kind == "projection" else other.predicates[idx]
        cur = apply_swap(cur, Swap(kind, idx, table))
        path.append(cur)
    return path


def all_one_swaps(inst: LabelCoverInstance, kinds: Iterable[str] = ("projection", "predicate")) -> list[Swap]:
    """Every swap that changes exactly one table (small alphabets only)."""
    out = []
    kinds = set(kinds)
    if "projection" in kinds:
        for e in range(len(inst.edges)):
            for table in itertools.product(range(inst.sigma_v), repeat=inst.sigma_u):
                if table != inst.projections[e]:
                    out.append(Swap("projection", e, table))
    if "predicate" in kinds:
        for u in range(inst.n_left):
            for table in itertools.product((0, 1), repeat=inst.sigma_u):
                if table != inst.predicates[u]:
                    out.append(Swap("predicate", u, table))
    return out


def random_swap(inst: LabelCoverInstance, coins, kind: str | None = None) -> Swap:
    """A uniformly drawn table change of the given kind (never the identity)."""
    if kind is None:
        kind = ("projection", "predicate")[coins.randbelow(2)]
        if inst.sigma_v == 1 or not inst.edges:
            kind = "predicate"
    if kind == "projection":
        if inst.sigma_v == 1 or not inst.edges:
            raise InstanceError("no projection swap exists")
        e = coins.randbelow(len(inst.edges))
        while True:
            table = tuple(coins.randbelow(inst.sigma_v) for _ in range(inst.sigma_u))
            if table != inst.projections[e]:
                return Swap("projection", e, table)
    u = coins.randbelow(inst.n_left)
    while True:
        table = tuple(coins.randbelow(2) for _ in range(inst.sigma_u))
        if table != inst.predicates[u]:
            return Swap("predicate", u, table)


def planted_csp(
    n_vertices: int,
    edge_list: Sequence[tuple[int, int]],
    sigma: int,
    coins,
    density: float = 0.5,
) -> tuple[TwoCspInstance, tuple]:
    """Random CSP on the given graph satisfied by a random planted labeling.

    Each relation contains the planted pair and every other pair independently
    with probability about ``density``.
    """
    planted = tuple(coins.randbelow(sigma) for _ in range(n_vertices))
    scale = 1 << 16
    cut = int(density * scale)
    rels = []
    for a, b in edge_list:
        rel = [[0] * sigma for _ in range(sigma)]
        for x in range(sigma):
            for y in range(sigma):
                rel[x][y] = 1 if coins.randbelow(scale) < cut else 0
        rel[planted[a]][planted[b]] = 1
        rels.append(rel)
    return TwoCspInstance(n_vertices, sigma, tuple(edge_list), tuple(rels)), planted


def planted_label_cover(
    n_left: int,
    n_right: int,
    sigma_u: int,
    sigma_v: int,
    edges: Sequence[tuple[int, int]],
    coins,
    predicate_density: float = 0.75,
) -> tuple[LabelCoverInstance, Assignment]:
    """Random instance on a fixed graph that the returned assignment satisfies."""
    left = tuple(coins.randbelow(sigma_u) for _ in range(n_left))
    right = tuple(coins.randbelow(sigma_v) for _ in range(n_right))
    projs = []
    for u, v in edges:
        f = [coins.randbelow(sigma_v) for _ in range(sigma_u)]
        f[left[u]] = right[v]
        projs.append(f)
    scale = 1 << 16
    cut = int(predicate_density * scale)
    preds = []
    for u in range(n_left):
        p = [1 if coins.randbelow(scale) < cut else 0 for _ in range(sigma_u)]
        p[left[u]] = 1
        preds.append(p)
    inst = LabelCoverInstance(n_left, n_right, sigma_u, sigma_v, tuple(edges), tuple(projs), tuple(preds))
    return inst, Assignment(left, right)


def random_label_cover(
    n_left: int, n_right: int, sigma_u: int, sigma_v: int, n_edges: int, coins, predicate_density: float = 0.75
) -> LabelCoverInstance:
    edges = [(coins.randbelow(n_left), coins.randbelow(n_right)) for _ in range(n_edges)]
    projs = [[coins.randbelow(sigma_v) for _ in range(sigma_u)] for _ in edges]
    scale = 1 << 16
    cut = int(predicate_density * scale)
    preds = [[1 if coins.randbelow(scale) < cut else 0 for _ in range(sigma_u)] for _ in range(n_left)]
    return LabelCoverInstance(n_left, n_right, sigma_u, sigma_v, tuple(edges), tuple(projs), tuple(preds))


def random_assignment(inst, coins) -> Assignment:
    return Assignment(
        tuple(coins.randbelow(inst.sigma_u) for _ in range(inst.n_left)),
        tuple(coins.randbelow(inst.sigma_v) for _ in range(inst.n_right)),
    )


# JSON round trips


def lc_to_json(inst: LabelCoverInstance) -> dict:
    return {
        "kind": "label_cover",
        "nU": inst.n_left,
        "nV": inst.n_right,
        "sigmaU": inst.sigma_u,
        "sigmaV": inst.sigma_v,
        "edges": [list(e) for e in inst.edges],
        "projections": [list(f) for f in inst.projections],
        "predicates": [list(p) for p in inst.predicates],
    }


def lc_from_json(obj: dict) -> LabelCoverInstance:
    if obj.get("kind") != "label_cover":
        raise InstanceError("expected a label_cover object")
    return LabelCoverInstance(
        obj["nU"], obj["nV"], obj["sigmaU"], obj["sigmaV"], obj["edges"], obj["projections"], obj["predicates"]
    )


def csp_to_json(phi: TwoCspInstance) -> dict:
    return {
        "kind": "two_csp",
        "n": phi.n_vertices,
        "sigma": phi.sigma,
        "constraints": [list(c) for c in phi.constraints],
        "relations": [[list(row) for row in r] for r in phi.relations],
    }


def csp_from_json(obj: dict) -> TwoCspInstance:
    if obj.get("kind") != "two_csp":
        raise InstanceError("expected a two_csp object")
    return TwoCspInstance(obj["n"], obj["sigma"], obj["constraints"], obj["relations"])


def assignment_to_json(pi: Assignment) -> dict:
    return {"kind": "assignment", "left": list(pi.left), "right": list(pi.right)}


def assignment_from_json(obj: dict) -> Assignment:
    return Assignment(tuple(obj["left"]), tuple(obj["right"]))
