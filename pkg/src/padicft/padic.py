"""Exact arithmetic on the finite group G_l = p^{-l}Z_p^N / p^l Z_p^N.

Every coordinate of a lattice point is stored as one integer ``u`` in
``[0, p^{2l})`` standing for the p-adic number ``u * p^{-l}``; the digits of
``u`` in base p are the p-adic digits at positions ``-l .. l-1``. With this
encoding G_l is the additive group (Z/p^{2l}Z)^N and all group operations
are plain modular arithmetic on integers.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering

import numpy as np

from .errors import CapacityError

DEFAULT_MAX_POINTS = 10**6


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    for d in range(3, math.isqrt(n) + 1, 2):
        if n % d == 0:
            return False
    return True


@dataclass(frozen=True)
class PrimeConfig:
    """Prime ``p`` (odd), spatial dimension ``N`` and level ``l``."""

    p: int
    N: int
    l: int

    def __post_init__(self):
        if not isinstance(self.p, int) or not is_prime(self.p) or self.p < 3:
            raise ValueError(f"p must be an odd prime >= 3, got {self.p!r}")
        if not isinstance(self.N, int) or self.N < 1:
            raise ValueError(f"N must be an integer >= 1, got {self.N!r}")
        if not isinstance(self.l, int) or self.l < 1:
            raise ValueError(f"l must be an integer >= 1, got {self.l!r}")

    @property
    def modulus(self) -> int:
        """p^{2l}, the size of one coordinate group."""
        return self.p ** (2 * self.l)

    @property
    def size(self) -> int:
        """#G_l = p^{2lN}."""
        return self.modulus**self.N

    @property
    def cell_volume(self) -> float:
        """Haar volume p^{-lN} of one lattice cell."""
        return float(self.p) ** (-self.l * self.N)

    def at_level(self, l: int) -> "PrimeConfig":
        return PrimeConfig(self.p, self.N, l)


@dataclass(frozen=True)
class GridPoint:
    coords: tuple[int, ...]

    @classmethod
    def zero(cls, cfg: PrimeConfig) -> "GridPoint":
        return cls((0,) * cfg.N)

    def is_zero(self) -> bool:
        return not any(self.coords)


@total_ordering
@dataclass(frozen=True)
class ExactNorm:
    """A norm value p^exponent, or exact zero when ``exponent`` is None."""

    exponent: int | None

    @classmethod
    def zero(cls) -> "ExactNorm":
        return cls(None)

    @property
    def is_zero(self) -> bool:
        return self.exponent is None

    def value(self, p: int) -> float:
        return 0.0 if self.exponent is None else float(p) ** self.exponent

    def exact(self, p: int) -> Fraction:
        if self.exponent is None:
            return Fraction(0)
        return Fraction(p) ** self.exponent

    def __lt__(self, other: "ExactNorm") -> bool:
        if self.exponent is None:
            return other.exponent is not None
        if other.exponent is None:
            return False
        return self.exponent < other.exponent


def valuation(n: int, p: int) -> int:
    """v_p(n) for a nonzero integer n."""
    if n == 0:
        raise ValueError("valuation of 0 is infinite")
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def scalar_ord(u: int, cfg: PrimeConfig) -> int | float:
    """p-adic order of the coordinate value u * p^{-l}; ``math.inf`` for u = 0."""
    if not 0 <= u < cfg.modulus:
        raise ValueError(f"coordinate {u} outside [0, {cfg.modulus})")
    if u == 0:
        return math.inf
    return valuation(u, cfg.p) - cfg.l


def point_norm(x: GridPoint, cfg: PrimeConfig) -> ExactNorm:
    """max_c |x_c|_p, as an exact power of p."""
    orders = [scalar_ord(u, cfg) for u in x.coords]
    least = min(orders)
    if least == math.inf:
        return ExactNorm.zero()
    return ExactNorm(-int(least))


def sub_mod(x: GridPoint, y: GridPoint, cfg: PrimeConfig) -> GridPoint:
    m = cfg.modulus
    return GridPoint(tuple((a - b) % m for a, b in zip(x.coords, y.coords)))


def add_mod(x: GridPoint, y: GridPoint, cfg: PrimeConfig) -> GridPoint:
    m = cfg.modulus
    return GridPoint(tuple((a + b) % m for a, b in zip(x.coords, y.coords)))


def negate(x: GridPoint, cfg: PrimeConfig) -> GridPoint:
    m = cfg.modulus
    return GridPoint(tuple((-a) % m for a in x.coords))


def phase_index(x: GridPoint, y: GridPoint, cfg: PrimeConfig) -> int:
    """Integer t with {x . y}_p = t / p^{2l}."""
    return sum(a * b for a, b in zip(x.coords, y.coords)) % cfg.modulus


def frac_part_pairing(x: GridPoint, y: GridPoint, cfg: PrimeConfig) -> Fraction:
    """Fractional part {x . y}_p as an exact rational in [0, 1)."""
    return Fraction(phase_index(x, y, cfg), cfg.modulus)


def character(x: GridPoint, y: GridPoint, cfg: PrimeConfig) -> complex:
    """chi_p(x . y) = exp(2 pi i {x . y}_p)."""
    t = phase_index(x, y, cfg)
    if t == 0:
        return 1.0 + 0.0j
    return cmath.exp(2j * math.pi * t / cfg.modulus)


def _check_capacity(cfg: PrimeConfig, max_points: int) -> None:
    if cfg.size > max_points:
        raise CapacityError(
            f"#G_l = {cfg.p}^{2 * cfg.l * cfg.N} = {cfg.size} exceeds the "
            f"capacity limit of {max_points} points"
        )


def enumerate_grid(cfg: PrimeConfig, max_points: int = DEFAULT_MAX_POINTS) -> list[GridPoint]:
    """All p^{2lN} points, lexicographic in the coordinate tuple (first coordinate slowest)."""
    _check_capacity(cfg, max_points)
    return [GridPoint(c) for c in itertools.product(range(cfg.modulus), repeat=cfg.N)]


def grid_array(cfg: PrimeConfig, max_points: int = DEFAULT_MAX_POINTS) -> np.ndarray:
    """``enumerate_grid`` as an int64 array of shape (#G_l, N), same order."""
    _check_capacity(cfg, max_points)
    m = cfg.modulus
    idx = np.arange(cfg.size, dtype=np.int64)
    cols = []
    for c in range(cfg.N):
        cols.append((idx // m ** (cfg.N - 1 - c)) % m)
    return np.stack(cols, axis=1)


def point_index(x: GridPoint, cfg: PrimeConfig) -> int:
    """Position of ``x`` in ``enumerate_grid`` order."""
    idx = 0
    for u in x.coords:
        idx = idx * cfg.modulus + u
    return idx


def valuation_table(cfg: PrimeConfig) -> np.ndarray:
    """v_p(u) for u in [0, p^{2l}); the entry for u = 0 is the sentinel 2l."""
    m = cfg.modulus
    table = np.zeros(m, dtype=np.int64)
    table[0] = 2 * cfg.l
    for k in range(1, 2 * cfg.l):
        table[:: cfg.p**k] = k
    table[0] = 2 * cfg.l
    return table


def split_plus_minus(cfg: PrimeConfig, rule: str = "lex") -> tuple[list[GridPoint], list[GridPoint]]:
    """Partition G_l minus zero into G_plus and its negation G_minus.

    ``rule="lex"`` puts x in G_plus when its coordinate tuple is
    lexicographically smaller than that of -x; ``rule="revlex"`` uses the
    opposite choice. Both are valid splits.
    """
    if rule not in ("lex", "revlex"):
        raise ValueError(f"unknown split rule {rule!r}")
    plus, minus = [], []
    for x in enumerate_grid(cfg):
        if x.is_zero():
            continue
        neg = negate(x, cfg)
        smaller = x.coords < neg.coords
        if (rule == "lex") == smaller:
            plus.append(x)
        else:
            minus.append(x)
    return plus, minus
