"""Slow reference implementations used to certify the fast code paths.

None of these reuse the closed forms they check: shell sums are truncated
explicitly, characters are summed point by point, and covariances come from
a pseudo-inverse of the coordinate-space quadratic form.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

from .padic import PrimeConfig
from .radial import KernelSpec


def _ball_character_integral(k: int, m: int | None, p: int, N: int) -> Fraction:
    """integral over ||y|| <= p^k of chi(y . kappa), ||kappa|| = p^m."""
    if m is None or m <= -k:
        return Fraction(p) ** (k * N)
    return Fraction(0)


def symbol_brute(kernel: KernelSpec, m: int | None, cfg: PrimeConfig, K: int = 80) -> float:
    """Truncated shell-by-shell integration of (1 - chi(y . kappa)) / w(||y||)."""
    p, N = cfg.p, cfg.N
    total = 0.0
    for k in range(-K, K + 1):
        vol = Fraction(p) ** (k * N) * (1 - Fraction(1, p**N))
        chi = _ball_character_integral(k, m, p, N) - _ball_character_integral(k - 1, m, p, N)
        # (vol - chi) / w evaluated as (vol - chi) p^{-kN} * p^{kN} / w to stay in range
        rel = float((vol - chi) / Fraction(p) ** (k * N))
        if rel:
            total += rel * _inv_weight(kernel, k, p)
    return total


def _inv_weight(kernel: KernelSpec, k: int, p: int) -> float:
    """p^{kN} / w(p^k) without forming either factor separately."""
    v = kernel._lookup.get(k)
    if v is not None:
        return float(p) ** (k * kernel.N) / v
    return float(p) ** (k * (kernel.N - kernel.delta)) / kernel.scale


def d_brute(l: int, kernel: KernelSpec, cfg: PrimeConfig, K: int = 200) -> float:
    p, N = cfg.p, cfg.N
    return sum((1 - float(p) ** (-N)) * _inv_weight(kernel, k, p) for k in range(1 - l, K))


def shell_character_sum(k: int, kappa: tuple[int, ...], cfg: PrimeConfig) -> complex:
    """integral over S_k of chi(y . kappa) by summing over G_l cells.

    kappa is a lattice point of ``cfg``; valid while the shell is resolved by
    the lattice (-l < k <= l).
    """
    p, N, l = cfg.p, cfg.N, cfg.l
    m = cfg.modulus
    total = 0.0 + 0.0j
    for y in itertools.product(range(m), repeat=N):
        if not any(y):
            continue
        v = min(_val(u, p) for u in y if u)
        if l - v != k:
            continue
        t = sum(a * b for a, b in zip(y, kappa)) % m
        total += complex(math.cos(2 * math.pi * t / m), math.sin(2 * math.pi * t / m))
    return total * float(p) ** (-l * N)


def _val(u: int, p: int) -> int:
    v = 0
    while u % p == 0:
        u //= p
        v += 1
    return v


def ord_brute(u: int, cfg: PrimeConfig) -> Fraction | float:
    """Order of u * p^{-l} by exact rational arithmetic."""
    if u == 0:
        return math.inf
    x = Fraction(u, cfg.p**cfg.l)
    k = 0
    while x.numerator % cfg.p == 0:
        x /= cfg.p
        k += 1
    while x.denominator % cfg.p == 0:
        x *= cfg.p
        k -= 1
    return k


def covariance_pinv(U: np.ndarray, weight: float) -> np.ndarray:
    """Covariance of exp(-weight phi^T U phi) restricted to sum(phi) = 0."""
    n = U.shape[0]
    P = np.eye(n) - np.full((n, n), 1.0 / n)
    return P @ np.linalg.inv(2.0 * weight * U) @ P


def matchings_by_permutation(two_n: int) -> set[frozenset]:
    """Perfect matchings read off every permutation; a second, independent enumerator."""
    out = set()
    for perm in itertools.permutations(range(two_n)):
        out.add(frozenset(frozenset(perm[i : i + 2]) for i in range(0, two_n, 2)))
    return out


def isserlis_brute(cov: np.ndarray, indices) -> float:
    indices = list(indices)
    if len(indices) % 2:
        return 0.0
    total = 0.0
    for matching in matchings_by_permutation(len(indices)):
        prod = 1.0
        for pair in matching:
            a, b = tuple(pair)
            prod *= cov[indices[a], indices[b]]
        total += prod
    return total


def truncated_propagator(kernel: KernelSpec, gamma: float, alpha2: float, s: int | None, cfg: PrimeConfig, K: int = 40) -> float:
    """Inverse Fourier transform of 1/(gamma/2 A + alpha2/2) over shells |k| <= K."""
    from .radial import symbol

    p, N = cfg.p, cfg.N
    total = 0.0
    for k in range(-K, K + 1):
        vol = float(p) ** (k * N) * (1 - float(p) ** (-N))
        f = 1.0 / (0.5 * gamma * symbol(kernel, k, cfg) + 0.5 * alpha2)
        if s is None or k <= -s:
            total += vol * f
        elif k == 1 - s:
            total -= float(p) ** ((k - 1) * N) * f
    return total


def finite_difference_gradient(fun, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    g = np.zeros_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2 * h)
    return g
