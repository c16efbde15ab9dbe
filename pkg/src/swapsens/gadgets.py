"""Auxiliary objects with certificates: regular expanders, Reed-Solomon codes, (m,l)-set systems."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .core import BudgetError
from .rng import SeededCoins, derive_seed


class GadgetError(ValueError):
    pass


# eigensolver slack when comparing a measured lambda with its target
CERT_TOL = 1e-9


# Expanders


@dataclass(frozen=True)
class RegularGraph:
    n: int
    d: int
    neighbors: tuple
    measured_lambda: float
    residual: float
    certified: bool = True

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        for i, row in enumerate(self.neighbors):
            for j in row:
                A[i, j] += 1
        return A

    def to_json(self) -> dict:
        return {
            "kind": "regular_graph",
            "n": self.n,
            "d": self.d,
            "neighbors": [list(r) for r in self.neighbors],
            "certificate": {"lambda": self.measured_lambda, "solver_residual": self.residual},
            "certified": self.certified,
        }


def _check_regular(n: int, d: int, neighbors: Sequence[Sequence[int]]) -> np.ndarray:
    if len(neighbors) != n:
        raise GadgetError("non-regular input")
    A = np.zeros((n, n))
    for i, row in enumerate(neighbors):
        if len(row) != d:
            raise GadgetError("non-regular input")
        for j in row:
            A[i, j] += 1
    if not np.array_equal(A, A.T):
        raise GadgetError("non-regular input")
    return A


def second_eigenvalue(n: int, d: int, neighbors: Sequence[Sequence[int]]) -> tuple[float, float]:
    """Second-largest absolute eigenvalue of the normalized adjacency matrix, and the eigensolver residual.

    One copy of the top eigenvalue 1 is removed; a second copy (a disconnected
    graph) therefore yields 1.
    """
    A = _check_regular(n, d, neighbors) / d
    if n == 1:
        return 0.0, 0.0
    vals, vecs = np.linalg.eigh(A)
    residual = float(np.max(np.abs(A @ vecs - vecs * vals)))
    rest = np.delete(vals, int(np.argmax(vals)))
    return float(np.max(np.abs(rest))), residual


def graph_lambda(G: RegularGraph) -> float:
    return second_eigenvalue(G.n, G.d, G.neighbors)[0]


def complete_graph(n: int) -> tuple:
    return tuple(tuple(j for j in range(n) if j != i) for i in range(n))


def complete_graph_with_loops(n: int) -> tuple:
    return tuple(tuple(range(n)) for _ in range(n))


def _permutation_union(n: int, d: int, coins: SeededCoins) -> tuple:
    rows: list[list[int]] = [[] for _ in range(n)]
    if d % 2 == 1:
        order = coins.shuffle(list(range(n)))
        for a, b in zip(order[0::2], order[1::2]):
            rows[a].append(b)
            rows[b].append(a)
    for _ in range(d // 2):
        p = coins.shuffle(list(range(n)))
        inv = [0] * n
        for i, x in enumerate(p):
            inv[x] = i
        for i in range(n):
            rows[i].append(p[i])
            rows[i].append(inv[i])
    return tuple(tuple(r) for r in rows)


def build_expander(n: int, d: int, lambda_target: float, seed: int, retries: int = 32) -> RegularGraph:
    """Sample-and-certify d-regular multigraph on n vertices.

    n = d + 1 gives the complete graph, n = d the complete graph with one loop
    per vertex (lambda 0).  Otherwise d/2 random permutations plus, for odd d,
    a random perfect matching; the first sample with measured lambda at most
    the target is returned, else the best sample with ``certified=False``.
    """
    if d < 1:
        raise GadgetError("degree must be positive")
    if (n * d) % 2:
        raise GadgetError("n*d must be even")
    if d > n:
        raise GadgetError("degree larger than vertex count")
    if n == d + 1 or n == d:
        nbrs = complete_graph(n) if n == d + 1 else complete_graph_with_loops(n)
        lam, res = second_eigenvalue(n, d, nbrs)
        return RegularGraph(n, d, nbrs, lam, res, lam <= lambda_target + CERT_TOL)
    best = None
    for attempt in range(max(1, retries)):
        nbrs = _permutation_union(n, d, SeededCoins(derive_seed(seed, attempt)))
        lam, res = second_eigenvalue(n, d, nbrs)
        if lam <= lambda_target + CERT_TOL:
            return RegularGraph(n, d, nbrs, lam, res, True)
        if best is None or lam < best[0]:
            best = (lam, res, nbrs)
    lam, res, nbrs = best
    return RegularGraph(n, d, nbrs, lam, res, False)


# Finite fields and Reed-Solomon codes


def _factor_prime_power(q: int) -> tuple[int, int] | None:
    if q < 2:
        return None
    p = next(f for f in range(2, q + 1) if q % f == 0)
    n, r = 0, q
    while r % p == 0:
        r //= p
        n += 1
    return (p, n) if r == 1 else None


def is_prime_power(q: int) -> bool:
    return _factor_prime_power(q) is not None


def _poly_mod(a: list[int], m: list[int], p: int) -> list[int]:
    a = a[:]
    while len(a) >= len(m):
        c = a[-1]
        if c:
            shift = len(a) - len(m)
            for i, x in enumerate(m):
                a[shift + i] = (a[shift + i] - c * x) % p
        a.pop()
    return a


def _irreducible(p: int, n: int) -> list[int]:
    """Lexicographically first monic irreducible polynomial of degree n over F_p (low-order first)."""
    if n == 1:
        return [0, 1]
    small = []
    for deg in range(1, n // 2 + 1):
        for coeffs in itertools.product(range(p), repeat=deg):
            small.append(list(coeffs) + [1])
    for coeffs in itertools.product(range(p), repeat=n):
        cand = list(coeffs) + [1]
        if cand[0] == 0:
            continue
        if all(any(_poly_mod(cand, f, p)) for f in small):
            return cand
    raise GadgetError("no irreducible polynomial found")


class GaloisField:
    """GF(p^n) with elements encoded as integers whose base-p digits are polynomial coefficients."""

    def __init__(self, q: int):
        pn = _factor_prime_power(q)
        if pn is None:
            raise GadgetError(f"{q} is not a prime power")
        self.q = q
        self.p, self.n = pn
        self.modulus = _irreducible(self.p, self.n)

    def _digits(self, x: int) -> list[int]:
        out = []
        for _ in range(self.n):
            out.append(x % self.p)
            x //= self.p
        return out

    def _undigits(self, ds: list[int]) -> int:
        x = 0
        for c in reversed(ds):
            x = x * self.p + c
        return x

    def add(self, a: int, b: int) -> int:
        if self.n == 1:
            return (a + b) % self.p
        return self._undigits([(x + y) % self.p for x, y in zip(self._digits(a), self._digits(b))])

    def mul(self, a: int, b: int) -> int:
        if self.n == 1:
            return (a * b) % self.p
        da, db = self._digits(a), self._digits(b)
        prod = [0] * (2 * self.n - 1)
        for i, x in enumerate(da):
            if x:
                for j, y in enumerate(db):
                    prod[i + j] = (prod[i + j] + x * y) % self.p
        r = _poly_mod(prod, self.modulus, self.p)
        r += [0] * (self.n - len(r))
        return self._undigits(r[: self.n])

    def evaluate(self, coeffs: Sequence[int], x: int) -> int:
        acc = 0
        for c in reversed(coeffs):
            acc = self.add(self.mul(acc, x), c)
        return acc


@dataclass(frozen=True)
class Code:
    source_size: int
    block_length: int
    target_size: int
    table: tuple
    certified_distance: Fraction
    degree_bound: int = 1

    def encode(self, symbol: int) -> tuple:
        return self.table[symbol]

    def to_json(self) -> dict:
        return {
            "kind": "code",
            "source_size": self.source_size,
            "block_length": self.block_length,
            "target_size": self.target_size,
            "table": [list(w) for w in self.table],
            "certificate": {"min_distance": str(self.certified_distance)},
        }


def _digits_needed(q: int, s: int) -> int:
    t, cap = 1, q
    while cap < s:
        t += 1
        cap *= q
    return t


def rs_parameters(sigma_size: int, delta: Fraction) -> tuple[int, int]:
    """Smallest prime power q (linear search up to 2^16) with q >= (t-1)/delta, t = ceil(log_q sigma_size)."""
    for q in range(2, (1 << 16) + 1):
        if not is_prime_power(q):
            continue
        t = _digits_needed(q, sigma_size)
        if q * delta >= t - 1:
            return q, t
    raise GadgetError("no prime power up to 2^16 meets the distance requirement")


def minimum_distance(table: Sequence[Sequence[int]]) -> Fraction:
    """Minimum relative Hamming distance over all pairs of codewords."""
    k = len(table[0])
    best = k
    for a, b in itertools.combinations(table, 2):
        best = min(best, sum(1 for x, y in zip(a, b) if x != y))
    return Fraction(best, k)


def build_code(sigma_size: int, delta) -> Code:
    if sigma_size < 2:
        raise GadgetError("alphabet must have at least two symbols")
    delta = Fraction(delta) if not isinstance(delta, float) else Fraction(str(delta))
    if not 0 < delta < 1:
        raise GadgetError("delta must lie in (0, 1)")
    q, t = rs_parameters(sigma_size, delta)
    field = GaloisField(q)
    table = []
    for i in range(sigma_size):
        coeffs, x = [], i
        for _ in range(t):
            coeffs.append(x % q)
            x //= q
        table.append(tuple(field.evaluate(coeffs, pt) for pt in range(q)))
    table = tuple(table)
    return Code(sigma_size, q, q, table, minimum_distance(table), t)


def verify_code(c: Code) -> Fraction:
    if len(set(c.table)) != c.source_size:
        raise GadgetError("code is not injective")
    return minimum_distance(c.table)


class ListCount(NamedTuple):
    count: int
    precondition: bool


def list_count(c: Code, word: Sequence[int], eta) -> ListCount:
    """Number of source symbols whose codeword agrees with ``word`` on at least an eta fraction.

    ``precondition`` reports whether eta > 2*sqrt(delta) for 1 - delta = the
    certified distance; the count is returned either way.
    """
    eta = Fraction(eta) if not isinstance(eta, float) else Fraction(str(eta))
    k = c.block_length
    count = sum(1 for w in c.table if Fraction(sum(1 for x, y in zip(w, word) if x == y), k) >= eta)
    delta = 1 - c.certified_distance
    return ListCount(count, eta > 0 and eta * eta > 4 * delta)


# (m, l)-set systems


@dataclass(frozen=True)
class SetSystem:
    universe: int
    sets: tuple
    certified_l: int
    construction: str = "random"

    @property
    def m(self) -> int:
        return len(self.sets)

    @property
    def full(self) -> int:
        return (1 << self.universe) - 1

    def complement(self, i: int) -> int:
        return self.full & ~self.sets[i]

    def literal(self, lit: int) -> int:
        """Literal 2i is C_i, literal 2i+1 is its complement."""
        i, neg = divmod(lit, 2)
        return self.complement(i) if neg else self.sets[i]

    def members(self, mask: int) -> list[int]:
        return [b for b in range(self.universe) if mask >> b & 1]

    def to_json(self) -> dict:
        return {
            "kind": "set_system",
            "universe": self.universe,
            "sets": [self.members(s) for s in self.sets],
            "construction": self.construction,
            "certificate": {"verified_l": self.certified_l},
        }


def random_universe_size(m: int, l: int) -> int:
    return math.ceil(8 * 4**l * math.log(2 * m * (2 * m) ** l))


def verify_set_system(S: SetSystem, l: int, budget: int = 1 << 20) -> bool:
    """Brute force: no at most l literals without a complementary pair cover the universe."""
    lits = 2 * S.m
    if sum(math.comb(lits, j) for j in range(1, l + 1)) > budget:
        raise BudgetError("verification budget exceeded")
    masks = [S.literal(x) for x in range(lits)]
    full = S.full
    for j in range(1, l + 1):
        for sel in itertools.combinations(range(lits), j):
            vars_ = [x // 2 for x in sel]
            if len(set(vars_)) < len(vars_):
                continue
            acc = 0
            for x in sel:
                acc |= masks[x]
            if acc == full:
                return False
    return True


def hypercube_set_system(m: int) -> SetSystem:
    """B = {0,1}^m with C_i = {b : bit i of b is 1}; valid for every l."""
    if m < 1:
        raise GadgetError("m must be positive")
    sets = []
    for i in range(m):
        mask = 0
        for b in range(1 << m):
            if b >> i & 1:
                mask |= 1 << b
        sets.append(mask)
    return SetSystem(1 << m, tuple(sets), m, "hypercube")


def build_set_system(m: int, l: int, seed: int, retries: int = 16, budget: int = 1 << 20) -> SetSystem:
    """Random construction with |B| = ceil(8 * 4^l * ln(2m (2m)^l)), verified by brute force."""
    if m < 1 or l < 1:
        raise GadgetError("m and l must be positive")
    if sum(math.comb(2 * m, j) for j in range(1, l + 1)) > budget:
        raise BudgetError("verification budget exceeded")
    size = random_universe_size(m, l)
    for attempt in range(retries):
        coins = SeededCoins(derive_seed(seed, attempt))
        sets = []
        for _ in range(m):
            mask = 0
            for b in range(size):
                if coins.randbelow(2):
                    mask |= 1 << b
            sets.append(mask)
        S = SetSystem(size, tuple(sets), l, "random")
        if verify_set_system(S, l, budget):
            return S
    raise GadgetError("no valid set system within retries")
