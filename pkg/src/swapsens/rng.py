"""Deterministic random streams and the coin interface used by every randomized map.

All randomness in the package flows through an object with a single method
``randbelow(n) -> int`` returning a uniform index in ``range(n)``.  Three
implementations exist:

* :class:`SeededCoins` draws from a splitmix64 counter stream.  Call ``i`` of a
  stream with seed ``s`` uses the 64-bit word ``mix64(s + (i + 1) * GOLDEN)``
  and maps it to ``range(n)`` with the multiply-shift rule ``(word * n) >> 64``.
  Because every call consumes exactly one word, two runs that make the same
  sequence of calls on the same seed stay aligned even when the requested
  ranges differ.  This is the shared-seed coupling.
* :class:`_ReplayCoins` (internal) drives :func:`enumerate_runs`, which walks
  every branch of a program's coin tree and returns exact probabilities.
* :class:`_TeeCoins` (internal) feeds a second program the same draws as a
  first one, which gives an exactly enumerable shared-randomness coupling.

``derive_seed(master, *keys)`` folds integer keys into a master seed with the
same mixer; it is how per-task streams are split off.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Protocol

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(x: int) -> int:
    """splitmix64 finalizer on a 64-bit word."""
    z = x & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, *keys: int) -> int:
    h = mix64(master & MASK64)
    for k in keys:
        h = mix64((h + GOLDEN) ^ mix64((k + GOLDEN) & MASK64))
    return h


class Coins(Protocol):
    def randbelow(self, n: int) -> int: ...


class SeededCoins:
    """Counter-based splitmix64 stream."""

    def __init__(self, seed: int):
        self.seed = seed & MASK64
        self.counter = 0

    def next_word(self) -> int:
        self.counter += 1
        return mix64((self.seed + self.counter * GOLDEN) & MASK64)

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randbelow needs a positive range")
        return (self.next_word() * n) >> 64

    def shuffle(self, items: list) -> list:
        return shuffle(self, items)

    def sample(self, population: list, k: int) -> list:
        return sample_without_replacement(self, population, k)


def shuffle(coins: "Coins", items: list) -> list:
    """Fisher-Yates shuffle in place (from the top index down)."""
    for i in range(len(items) - 1, 0, -1):
        j = coins.randbelow(i + 1)
        items[i], items[j] = items[j], items[i]
    return items


def sample_without_replacement(coins: "Coins", population, k: int) -> list:
    """k distinct items in draw order (partial Fisher-Yates from the front)."""
    pool = list(population)
    if k > len(pool):
        raise ValueError("sample larger than population")
    for i in range(k):
        j = i + coins.randbelow(len(pool) - i)
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:k]


def as_coins(rng: "int | Coins") -> Coins:
    if isinstance(rng, int):
        return SeededCoins(rng)
    return rng


class BudgetExceeded(RuntimeError):
    pass


class _ReplayCoins:
    def __init__(self, prefix: list[int]):
        self.prefix = prefix
        self.sizes: list[int] = []
        self.pos = 0

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randbelow needs a positive range")
        if self.pos < len(self.prefix):
            k = self.prefix[self.pos]
        else:
            k = 0
            self.prefix.append(0)
        self.sizes.append(n)
        self.pos += 1
        return k


@dataclass(frozen=True)
class Run:
    probability: Fraction
    output: Any


def enumerate_runs(program: Callable[[Coins], Any], budget: int = 1 << 16) -> list[Run]:
    """Run ``program`` on every branch of its coin tree.

    The program must consume coins deterministically given earlier draws.
    Returns one :class:`Run` per leaf; probabilities are exact and sum to 1.
    """
    runs: list[Run] = []
    prefix: list[int] = []
    while True:
        if len(runs) >= budget:
            raise BudgetExceeded("coin tree larger than budget")
        coins = _ReplayCoins(prefix)
        out = program(coins)
        p = Fraction(1)
        for n in coins.sizes:
            p /= n
        runs.append(Run(p, out))
        del prefix[coins.pos:]
        sizes = coins.sizes
        # odometer step on the deepest position that can still advance
        i = len(prefix) - 1
        while i >= 0 and prefix[i] + 1 >= sizes[i]:
            i -= 1
        if i < 0:
            return runs
        prefix[i] += 1
        del prefix[i + 1:]


class _RecordingCoins:
    def __init__(self, inner: Coins):
        self.inner = inner
        self.draws: list[tuple[int, int]] = []

    def randbelow(self, n: int) -> int:
        k = self.inner.randbelow(n)
        self.draws.append((n, k))
        return k


class _TeeCoins:
    """Replays another run's draws where the requested range matches."""

    def __init__(self, draws: list[tuple[int, int]], fresh: Coins):
        self.draws = draws
        self.fresh = fresh
        self.pos = 0

    def randbelow(self, n: int) -> int:
        i = self.pos
        self.pos += 1
        if i < len(self.draws) and self.draws[i][0] == n:
            return self.draws[i][1]
        return self.fresh.randbelow(n)


def coupled(first: Callable[[Coins], Any], second: Callable[[Coins], Any]) -> Callable[[Coins], tuple[Any, Any]]:
    """Program running ``first`` and ``second`` on shared draws.

    Call ``i`` of ``second`` receives the ``i``-th draw of ``first`` when both
    requested the same range, and a fresh draw otherwise.  Each marginal keeps
    its own law, so this is a valid coupling, and it can be enumerated.
    """

    def program(coins: Coins) -> tuple[Any, Any]:
        rec = _RecordingCoins(coins)
        a = first(rec)
        b = second(_TeeCoins(rec.draws, coins))
        return a, b

    return program
