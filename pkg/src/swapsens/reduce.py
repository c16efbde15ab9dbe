"""Right-degree reduction, alphabet reduction, their recovery maps, and the combined branch."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .core import Assignment, InstanceError, LabelCoverInstance
from .gadgets import Code, build_code, build_expander
from .rng import Coins, as_coins, derive_seed


@dataclass(frozen=True)
class ExpanderPackage:
    d: int
    graphs: dict

    def __post_init__(self):
        for D, H in self.graphs.items():
            if H.n != D or H.d != self.d:
                raise InstanceError("package graph has wrong size or degree")

    @property
    def measured_lambda(self) -> float:
        return max((H.measured_lambda for H in self.graphs.values()), default=0.0)


def build_package(inst: LabelCoverInstance, d: int, lambda_target: float = 0.9, seed: int = 0, retries: int = 32):
    """One certified expander per right degree occurring in ``inst``."""
    graphs = {}
    for D in sorted(set(inst.right_degrees())):
        graphs[D] = build_expander(D, d, lambda_target, derive_seed(seed, D), retries)
    return ExpanderPackage(d, graphs)


def dr_shape(inst: LabelCoverInstance) -> tuple:
    """Right degrees of the source; cloud of v occupies indices offset(v) .. offset(v)+D_v-1."""
    return tuple(inst.right_degrees())


def _offsets(shape) -> list[int]:
    out, acc = [], 0
    for D in shape:
        out.append(acc)
        acc += D
    return out


def degree_reduce(inst: LabelCoverInstance, d: int, pkg: ExpanderPackage) -> LabelCoverInstance:
    """Replace every right vertex v by a cloud of D_v copies wired through the package expander H_{D_v}.

    Copy (v, i) gets, for k in 0..d-1, an edge to the left endpoint of the
    j-th edge of v, j = H(i, k); the edge inherits that projection.  Edges are
    emitted cloud by cloud, copy by copy, slot by slot.
    """
    if d % 2 or d < 4:
        raise InstanceError("d must be even and at least 4")
    shape = dr_shape(inst)
    if min(shape) < d:
        raise InstanceError("d exceeds the minimum right degree")
    if pkg.d != d:
        raise InstanceError("package degree differs from d")
    offs = _offsets(shape)
    edges, projs = [], []
    for v, inc in enumerate(inst.right_incidence):
        D = len(inc)
        if D not in pkg.graphs:
            raise InstanceError(f"package has no expander for degree {D}")
        H = pkg.graphs[D]
        for i in range(D):
            for k in range(d):
                e = inc[H.neighbors[i][k]]
                edges.append((inst.edges[e][0], offs[v] + i))
                projs.append(inst.projections[e])
    return LabelCoverInstance(
        inst.n_left, sum(shape), inst.sigma_u, inst.sigma_v, tuple(edges), tuple(projs), inst.predicates
    )


def dr_edge_origin(inst: LabelCoverInstance, pkg: ExpanderPackage) -> list[int]:
    """Source edge index of every edge of degree_reduce(inst, pkg.d, pkg), in output order."""
    out = []
    for inc in inst.right_incidence:
        H = pkg.graphs[len(inc)]
        for i in range(len(inc)):
            for k in range(pkg.d):
                out.append(inc[H.neighbors[i][k]])
    return out


def dr_lift(shape, pi: Assignment) -> Assignment:
    right = []
    for v, D in enumerate(shape):
        right.extend([pi.right[v]] * D)
    return Assignment(pi.left, tuple(right))


def dr_recover(target: LabelCoverInstance, pi: Assignment, shape, rng: "int | Coins") -> Assignment:
    """Copy left labels; each source right vertex reads one uniformly chosen cloud copy."""
    coins = as_coins(rng)
    if target.n_right != sum(shape) or len(pi.right) != sum(shape):
        raise InstanceError("shape mismatch")
    offs = _offsets(shape)
    right = tuple(pi.right[offs[v] + coins.randbelow(D)] if D else 0 for v, D in enumerate(shape))
    return Assignment(pi.left, right)


def alphabet_reduce(inst: LabelCoverInstance, code: Code) -> LabelCoverInstance:
    """Right vertex (v, i) has index v*k + i; edge (u, v) becomes k edges, in coordinate order."""
    if code.source_size != inst.sigma_v:
        raise InstanceError("code alphabet differs from the right alphabet")
    k = code.block_length
    edges, projs = [], []
    for (u, v), f in zip(inst.edges, inst.projections):
        for i in range(k):
            edges.append((u, v * k + i))
            projs.append(tuple(code.table[b][i] for b in f))
    return LabelCoverInstance(
        inst.n_left, inst.n_right * k, inst.sigma_u, code.target_size, tuple(edges), tuple(projs), inst.predicates
    )


def ar_lift(code: Code, pi: Assignment) -> Assignment:
    right = []
    for b in pi.right:
        right.extend(code.table[b])
    return Assignment(pi.left, tuple(right))


def ar_recover(source: LabelCoverInstance, pi: Assignment, rng: "int | Coins") -> Assignment:
    """Left labels copied; pi(v) is the projection of a uniformly chosen incident edge.

    That draw realizes p_v(b), the share of v's incident edges (with
    multiplicity) mapping the left label to b.  Isolated v get label 0.
    """
    coins = as_coins(rng)
    right = []
    for inc in source.right_incidence:
        if not inc:
            coins.randbelow(1)
            right.append(0)
            continue
        e = inc[coins.randbelow(len(inc))]
        right.append(source.projections[e][pi.left[source.edges[e][0]]])
    return Assignment(pi.left, tuple(right))


def ar_soundness_threshold(eps: float, eta: float) -> float:
    return eps / math.sqrt(eta) + 2 * math.sqrt(eta)


@dataclass(frozen=True)
class CombinedReduction:
    source: LabelCoverInstance
    code: Code
    alphabet_reduced: LabelCoverInstance
    package: ExpanderPackage | None
    d: int | None
    epsilon: Fraction
    branch_constant: Fraction
    target: LabelCoverInstance

    def recover(self, pi: Assignment, rng: "int | Coins") -> Assignment:
        coins = as_coins(rng)
        if self.package is not None:
            pi = dr_recover(self.target, pi, dr_shape(self.alphabet_reduced), coins)
        return ar_recover(self.source, pi, coins)

    def lift(self, pi: Assignment) -> Assignment:
        out = ar_lift(self.code, pi)
        if self.package is not None:
            out = dr_lift(dr_shape(self.alphabet_reduced), out)
        return out

    def to_json(self, refs: list[str] | None = None) -> dict:
        return {
            "transform": "red",
            "params": {
                "epsilon": str(self.epsilon),
                "c": str(self.branch_constant),
                "d": self.d,
                "branch": "ar+dr" if self.package is not None else "ar",
            },
            "gadget_refs": refs or [],
        }


def reduce_combined(
    inst: LabelCoverInstance,
    epsilon,
    c=16,
    lambda_target: float = 0.9,
    seed: int = 0,
) -> tuple[LabelCoverInstance, CombinedReduction]:
    """Alphabet reduction with code distance 1 - (eps/4)^3, then degree reduction when the
    minimum right degree exceeds c/eps (with d the smallest even integer >= max(4, c/eps))."""
    eps = Fraction(str(epsilon)) if isinstance(epsilon, float) else Fraction(epsilon)
    cc = Fraction(str(c)) if isinstance(c, float) else Fraction(c)
    if not 0 < eps < Fraction(1, 16):
        raise InstanceError("epsilon must lie in (0, 1/16)")
    eta = eps / 4
    code = build_code(inst.sigma_v, eta**3)
    reduced = alphabet_reduce(inst, code)
    bound = cc / eps
    pkg, d = None, None
    if min(reduced.right_degrees()) > bound:
        d = max(4, math.ceil(bound))
        d += d % 2
        if d <= min(reduced.right_degrees()):
            pkg = build_package(reduced, d, lambda_target, seed)
        else:
            d = None
    target = reduced if pkg is None else degree_reduce(reduced, d, pkg)
    handle = CombinedReduction(inst, code, reduced, pkg, d, eps, cc, target)
    return handle.target, handle
