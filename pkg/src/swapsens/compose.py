"""Composition of a label cover instance with a decodable-PCP decoder.

The composed instance is described lazily.  Its left vertices are pairs
(v, rho) of a source right vertex and a decoder random string; a left label is
a d_V x m matrix over the proof alphabet, stored row-major as a flat tuple,
whose row i holds the proof for the i-th neighbour of v.  Its right vertices
are pairs (u, t) of a source left vertex and a proof position.  Edges join
every active row i of (v, rho) to every column t of (u_i, t) and project the
matrix entry (i, t).  Predicates run the decoder on every active row and
accept when all rows decode to the same non-bottom symbol.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Sequence

from .core import Assignment, BudgetError, InstanceError, LabelCoverInstance
from .rng import Coins, as_coins


@dataclass(frozen=True)
class AdmissibleNeighborhood:
    u: int
    edges: tuple
    neighbors: tuple
    tuples: tuple

    @property
    def arity(self) -> int:
        return len(self.neighbors)

    def digest(self) -> str:
        blob = json.dumps([self.arity, [list(t) for t in self.tuples]]).encode()
        return hashlib.blake2b(blob, digest_size=8).hexdigest()


def admissible_tuples(inst, u: int) -> AdmissibleNeighborhood:
    edges = inst.left_incidence[u]
    tuples = sorted(
        {tuple(inst.project(e, a) for e in edges) for a in range(inst.sigma_u) if inst.accepts(u, a)}
    )
    return AdmissibleNeighborhood(u, tuple(edges), tuple(inst.edges[e][1] for e in edges), tuple(tuples))


class Decoder:
    """Interface: proof length m, q queries, randomness_bits random bits, proof alphabet size sigma.

    ``query(circuit, j, rho)`` returns (positions, table) where ``table`` maps
    the base-sigma code of the read symbols to a decoded symbol or None.
    """

    proof_length: int
    query_count: int
    randomness_bits: int
    proof_alphabet: int

    def query(self, circuit: AdmissibleNeighborhood, j: int, rho: int) -> tuple[tuple, tuple]:
        raise NotImplementedError

    def encode_proof(self, circuit: AdmissibleNeighborhood, y: Sequence[int]) -> tuple:
        raise NotImplementedError

    @property
    def n_random(self) -> int:
        return 1 << self.randomness_bits


def read_code(symbols: Sequence[int], sigma: int) -> int:
    x = 0
    for s in reversed(symbols):
        x = x * sigma + s
    return x


class ToyDecoder(Decoder):
    """Proof is the admissible tuple itself, zero padded to m symbols.

    Query (j, rho) reads position j and position rho mod arity; the table
    returns the first read symbol when the pair extends to an admissible
    tuple and None otherwise.
    """

    query_count = 2

    def __init__(self, max_degree: int, sigma_v: int):
        if max_degree < 1 or sigma_v < 1:
            raise InstanceError("decoder needs positive degree and alphabet")
        self.proof_length = max_degree
        self.proof_alphabet = sigma_v
        self.randomness_bits = math.ceil(math.log2(max_degree)) if max_degree > 1 else 0
        self._table = lru_cache(maxsize=None)(self._build_table)

    def declared_list_size(self, circuit: AdmissibleNeighborhood) -> int:
        return len(circuit.tuples)

    def _build_table(self, tuples: tuple, j: int, extra: int) -> tuple:
        s = self.proof_alphabet
        ok = {(y[j], y[extra]) for y in tuples}
        table = [None] * (s * s)
        for a in range(s):
            for b in range(s):
                if (a, b) in ok:
                    table[read_code((a, b), s)] = a
        return tuple(table)

    def query(self, circuit: AdmissibleNeighborhood, j: int, rho: int) -> tuple[tuple, tuple]:
        if not 0 <= j < circuit.arity:
            raise InstanceError("index outside the circuit arity")
        extra = rho % circuit.arity
        return (j, extra), self._table(circuit.tuples, j, extra)

    def encode_proof(self, circuit: AdmissibleNeighborhood, y: Sequence[int]) -> tuple:
        return tuple(y) + (0,) * (self.proof_length - len(y))

    def to_json(self) -> dict:
        return {
            "kind": "toy_decoder",
            "m": self.proof_length,
            "q": self.query_count,
            "r": self.randomness_bits,
            "sigma": self.proof_alphabet,
        }


def toy_decoder(max_degree: int, sigma_v: int) -> ToyDecoder:
    return ToyDecoder(max_degree, sigma_v)


def decode(decoder: Decoder, circuit: AdmissibleNeighborhood, proof: Sequence[int], j: int, rho: int):
    positions, table = decoder.query(circuit, j, rho)
    return table[read_code([proof[p] for p in positions], decoder.proof_alphabet)]


def decoder_fixture(decoder: Decoder, circuit: AdmissibleNeighborhood) -> list[dict]:
    """Explicit query/decode tables keyed by (circuit hash, j, rho)."""
    out = []
    for j in range(circuit.arity):
        for rho in range(decoder.n_random):
            positions, table = decoder.query(circuit, j, rho)
            out.append(
                {"circuit": circuit.digest(), "j": j, "r": rho, "positions": list(positions), "table": list(table)}
            )
    return out


def soundness_error(
    decoder: Decoder, circuit: AdmissibleNeighborhood, list_size: int, budget: int = 1 << 16
) -> Fraction:
    """Largest, over all proofs, of the smallest decoding error achievable by a list of at most list_size tuples.

    The error of a list Y is the probability over uniform (j, rho) that the
    decoded value is neither None nor y_j for some y in Y.
    """
    m, s, R = decoder.proof_length, decoder.proof_alphabet, decoder.n_random
    if s**m > budget:
        raise BudgetError("proof space exceeds budget")
    n = circuit.arity
    lists = [c for size in range(min(list_size, len(circuit.tuples)) + 1) for c in itertools.combinations(circuit.tuples, size)]
    worst = Fraction(0)
    for proof in itertools.product(range(s), repeat=m):
        outs = [[decode(decoder, circuit, proof, j, rho) for rho in range(R)] for j in range(n)]
        best = None
        for Y in lists:
            bad = sum(1 for j in range(n) for z in outs[j] if z is not None and all(y[j] != z for y in Y))
            err = Fraction(bad, n * R)
            if best is None or err < best:
                best = err
        worst = max(worst, best)
    return worst


class ComposedInstance:
    """Lazily evaluated composition; duck-types the label cover interface used by value()."""

    def __init__(self, source: LabelCoverInstance, decoder: Decoder, label_budget: int | None = None):
        if decoder.proof_alphabet != source.sigma_v:
            raise InstanceError("proof alphabet must equal the source right alphabet")
        self.source = source
        self.decoder = decoder
        self.m = decoder.proof_length
        self.R = decoder.n_random
        if max(source.left_degrees(), default=0) > self.m:
            raise InstanceError("decoder proof length below the maximum left degree")
        self.d_v = max(source.right_degrees(), default=0)
        self.d_u = max(source.left_degrees(), default=0)
        self.sigma = decoder.proof_alphabet
        self.sigma_u = self.sigma ** (self.d_v * self.m)
        if label_budget is not None and self.sigma_u > label_budget:
            raise BudgetError("composed left alphabet exceeds the label budget")
        self.sigma_v = self.sigma
        self.n_left = source.n_right * self.R
        self.n_right = source.n_left * self.m
        rows = []
        for v, inc in enumerate(source.right_incidence):
            row = []
            for e in inc:
                u = source.edges[e][0]
                row.append((u, source.left_incidence[u].index(e)))
            rows.append(tuple(row))
        self.rows = tuple(rows)
        self.circuits = tuple(admissible_tuples(source, u) for u in range(source.n_left))
        edges, keys = [], []
        for v in range(source.n_right):
            for rho in range(self.R):
                for i, (u, _) in enumerate(self.rows[v]):
                    for t in range(self.m):
                        edges.append((v * self.R + rho, u * self.m + t))
                        keys.append((i, t))
        self.edges = tuple(edges)
        self._proj_keys = tuple(keys)

    def left_vertex(self, lv: int) -> tuple[int, int]:
        return divmod(lv, self.R)

    def queries(self, lv: int) -> tuple:
        v, rho = self.left_vertex(lv)
        return tuple(self.decoder.query(self.circuits[u], j, rho) for u, j in self.rows[v])

    def accepts(self, lv: int, label: Sequence[int]) -> bool:
        v, _ = self.left_vertex(lv)
        val = None
        for i, (positions, table) in enumerate(self.queries(lv)):
            z = table[read_code([label[i * self.m + p] for p in positions], self.sigma)]
            if z is None or (val is not None and z != val):
                return False
            val = z
        return True

    def project(self, e: int, label: Sequence[int]) -> int:
        i, t = self._proj_keys[e]
        return label[i * self.m + t]

    def predicate_key(self, lv: int):
        return self.queries(lv)

    def projection_key(self, e: int):
        return self._proj_keys[e]

    @cached_property
    def left_incidence(self) -> tuple:
        inc = [[] for _ in range(self.n_left)]
        for i, (a, _) in enumerate(self.edges):
            inc[a].append(i)
        return tuple(tuple(x) for x in inc)

    @cached_property
    def right_incidence(self) -> tuple:
        inc = [[] for _ in range(self.n_right)]
        for i, (_, b) in enumerate(self.edges):
            inc[b].append(i)
        return tuple(tuple(x) for x in inc)

    def left_degrees(self) -> list[int]:
        return [len(x) for x in self.left_incidence]

    def right_degrees(self) -> list[int]:
        return [len(x) for x in self.right_incidence]

    def query_degree(self) -> int:
        """Max over (u, t) of the number of (j, rho, slot) triples whose query reads position t."""
        best = 0
        for c in self.circuits:
            counts = [0] * self.m
            for j in range(c.arity):
                for rho in range(self.R):
                    for p in self.decoder.query(c, j, rho)[0]:
                        counts[p] += 1
            best = max(best, max(counts))
        return best

    def constants(self) -> dict:
        d = self.query_degree()
        return {
            "C_T": self.d_u * self.R,
            "C_R": Fraction(d * (1 + self.d_v), self.R),
            "D_Comp": self.d_u * (1 + self.d_v) + 1,
            "query_degree": d,
        }


def compose(inst: LabelCoverInstance, decoder: Decoder, label_budget: int | None = None) -> ComposedInstance:
    return ComposedInstance(inst, decoder, label_budget)


def compose_lift(comp: ComposedInstance, pi: Assignment) -> Assignment:
    """Honest composed assignment: every row and column carries the proof of the source admissible tuple."""
    src = comp.source
    proofs = []
    for u in range(src.n_left):
        y = tuple(src.project(e, pi.left[u]) for e in src.left_incidence[u])
        proofs.append(comp.decoder.encode_proof(comp.circuits[u], y))
    left = []
    for v in range(src.n_right):
        mat = []
        for u, _ in comp.rows[v]:
            mat.extend(proofs[u])
        mat.extend([0] * (comp.m * (comp.d_v - len(comp.rows[v]))))
        for _ in range(comp.R):
            left.append(tuple(mat))
    right = tuple(proofs[u][t] for u in range(src.n_left) for t in range(comp.m))
    return Assignment(tuple(left), right)


def comp_recover(comp: ComposedInstance, pi: Assignment, rng: "int | Coins") -> Assignment:
    """Decode right labels of the source from composed right labels under one shared random string.

    Composed left labels are never read.
    """
    coins = as_coins(rng)
    if len(pi.right) != comp.n_right:
        raise InstanceError("shape mismatch")
    src = comp.source
    rho = coins.randbelow(comp.R)
    right = []
    for v in range(src.n_right):
        val = None
        ok = bool(comp.rows[v])
        for u, j in comp.rows[v]:
            positions, table = comp.decoder.query(comp.circuits[u], j, rho)
            z = table[read_code([pi.right[u * comp.m + p] for p in positions], comp.sigma)]
            if z is None or (val is not None and z != val):
                ok = False
                break
            val = z
        right.append(val if ok else 0)
    left = []
    for u in range(src.n_left):
        inc = src.left_incidence[u]
        choice = 0
        for a in range(src.sigma_u):
            if src.accepts(u, a) and all(src.project(e, a) == right[src.edges[e][1]] for e in inc):
                choice = a
                break
        left.append(choice)
    return Assignment(tuple(left), tuple(right))
