"""Polynomial interactions over the free measure.

E_int(phi) = (alpha4 / 4) p^{-lN} sum_i P(phi(i)). Monte Carlo estimators
reweight free draws by exp(-E_int); the perturbative expansion in alpha4
is evaluated exactly with Isserlis sums over the lattice covariance.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidSpec, NotLizorkin, TooLarge
from .gibbs import (
    DEFAULT_BATCHES,
    EstimatorResult,
    FreeMeasure,
    as_indices,
    exact_covariance,
    pairing,
    result_from_batches,
)
from .lattice import assemble_U, is_lizorkin
from .wick import MAX_WICK_POINTS, isserlis_from_counts

MAX_ORDER = 2
# n^M lattice sums allowed in a perturbative correlation
MAX_SITE_SUMS = 10_000
SIGN_PROBLEM = "SignProblem"


@dataclass(frozen=True)
class InteractionSpec:
    """P(X) = sum_d coeffs[d - 3] X^d for d = 3..2D, with coupling alpha4.

    The constructor checks that P is bounded below by zero: the leading
    coefficient must be positive and P must be non-negative at every real
    critical point.
    """

    coeffs: tuple[float, ...]
    alpha4: float

    def __post_init__(self):
        c = tuple(float(a) for a in self.coeffs)
        object.__setattr__(self, "coeffs", c)
        if self.alpha4 < 0:
            raise InvalidSpec(f"alpha4 must be non-negative, got {self.alpha4}")
        while c and c[-1] == 0.0:
            c = c[:-1]
        if not c:
            raise InvalidSpec("interaction polynomial is identically zero")
        degree = len(c) + 2
        if degree < 4 or degree % 2:
            raise InvalidSpec(f"P must have even degree 2D >= 4, got degree {degree}")
        if c[-1] <= 0:
            raise InvalidSpec("leading coefficient of P must be positive")
        poly = self.polynomial()
        crit = poly.deriv().roots()
        real = crit[np.abs(crit.imag) <= 1e-9 * (1 + np.abs(crit))].real
        low = min((poly(x) for x in real), default=0.0)
        if low < -1e-12:
            raise InvalidSpec(f"P takes negative values (minimum {low:.3e})")

    @classmethod
    def phi4(cls, alpha4: float) -> "InteractionSpec":
        return cls(coeffs=(0.0, 1.0), alpha4=alpha4)

    @property
    def degree(self) -> int:
        return len(self.coeffs) + 2

    def terms(self) -> list[tuple[int, float]]:
        return [(d + 3, a) for d, a in enumerate(self.coeffs) if a != 0.0]

    def polynomial(self) -> np.polynomial.Polynomial:
        return np.polynomial.Polynomial((0.0, 0.0, 0.0) + self.coeffs)

    def P(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for d, a in self.terms():
            out = out + a * _ipow(x, d)
        return out

    def is_even(self) -> bool:
        return all(d % 2 == 0 for d, _ in self.terms())


def _ipow(x: np.ndarray, d: int) -> np.ndarray:
    """x^d by repeated squaring, so even powers are bit-symmetric in the sign of x."""
    if d == 1:
        return x
    half = _ipow(x * x, d // 2)
    return half * x if d % 2 else half


def e_int(f: np.ndarray, spec: InteractionSpec, lat) -> np.ndarray | float:
    """(alpha4/4) p^{-lN} sum_i P(phi(i)); rows of a 2-D array are separate fields."""
    f = np.asarray(f, dtype=float)
    val = 0.25 * spec.alpha4 * lat.weight * spec.P(f).sum(axis=-1)
    return float(val) if np.ndim(val) == 0 else val


def _weights(fields: np.ndarray, spec: InteractionSpec, lat) -> np.ndarray:
    e = e_int(fields, spec, lat)
    if np.any(e < -1e-12):
        raise AssertionError("interaction energy went negative; exp(-E_int) <= 1 violated")
    return np.exp(-np.maximum(e, 0.0))


def _check_source(J: np.ndarray, n: int) -> np.ndarray:
    J = np.asarray(J, dtype=float)
    if J.shape != (n,):
        raise ValueError(f"source must have shape ({n},), got {J.shape}")
    if not is_lizorkin(J, tol=1e-10):
        raise NotLizorkin("source field J must have zero mean")
    return J


def partition_interacting(
    measure: FreeMeasure, spec: InteractionSpec, n: int, seed: int, batches: int = DEFAULT_BATCHES
) -> EstimatorResult:
    """Z = E[exp(-E_int)] under P_l."""
    if spec.alpha4 == 0:
        return EstimatorResult(1.0, 0.0, n, seed, batches)
    lat = measure.lat
    means = measure.batch_means(seed, n, batches, lambda F, X, Y: _weights(F, spec, lat))
    return result_from_batches(means, n, seed)


def generating_functional(
    J: np.ndarray,
    measure: FreeMeasure,
    spec: InteractionSpec,
    n: int,
    seed: int,
    batches: int = DEFAULT_BATCHES,
) -> EstimatorResult:
    """Z(J) = E[exp(-E_int + <phi, J>)] under P_l."""
    lat = measure.lat
    J = _check_source(J, lat.n)
    means = measure.batch_means(
        seed, n, batches, lambda F, X, Y: _weights(F, spec, lat) * np.exp(pairing(F, J, lat))
    )
    return result_from_batches(means, n, seed)


def _ratio(num: np.ndarray, den: np.ndarray, n: int, seed: int, flags=()) -> EstimatorResult:
    """Ratio of batch means with a delta-method standard error."""
    b = len(num)
    r = num.mean() / den.mean()
    resid = num - r * den
    if np.iscomplexobj(resid):
        var = np.var(resid.real, ddof=1) + np.var(resid.imag, ddof=1)
        return EstimatorResult(complex(r), float(math.sqrt(var / b) / abs(den.mean())), n, seed, b, tuple(flags))
    return EstimatorResult(float(r), float(np.std(resid, ddof=1) / math.sqrt(b) / abs(den.mean())), n, seed, b, tuple(flags))


def correlation(
    points: Sequence,
    measure: FreeMeasure,
    spec: InteractionSpec,
    n: int,
    seed: int,
    batches: int = DEFAULT_BATCHES,
) -> EstimatorResult:
    """E[prod phi(x_k) exp(-E_int)] / E[exp(-E_int)] from shared draws."""
    lat = measure.lat
    idx = as_indices(points, lat)

    def stat(F, X, Y):
        w = _weights(F, spec, lat)
        return np.stack([np.prod(F[:, idx], axis=1) * w, w], axis=1)

    means = measure.batch_means(seed, n, batches, stat)
    return _ratio(means[:, 0], means[:, 1], n, seed)


def _moment_with_polys(cov: np.ndarray, ext: list[int], zs: Sequence[int], spec: InteractionSpec) -> float:
    """E[prod_k phi(ext_k) * prod_m P(phi(zs_m))] by monomial expansion of P."""
    labels = sorted(set(ext) | set(zs))
    pos = {v: k for k, v in enumerate(labels)}
    sub = cov[np.ix_(labels, labels)]
    base = [0] * len(labels)
    for v in ext:
        base[pos[v]] += 1
    total = 0.0
    for choice in itertools.product(spec.terms(), repeat=len(zs)):
        counts = base.copy()
        coef = 1.0
        for (d, a), z in zip(choice, zs):
            counts[pos[z]] += d
            coef *= a
        if sum(counts) % 2:
            continue
        if sum(counts) > MAX_WICK_POINTS:
            raise TooLarge(
                f"perturbative term needs a {sum(counts)}-point moment; the cap is {MAX_WICK_POINTS}"
            )
        total += coef * isserlis_from_counts(sub, tuple(counts))
    return total


def _check_order(M: int) -> None:
    if not 0 <= M <= MAX_ORDER:
        raise TooLarge(f"perturbative order {M} outside 0..{MAX_ORDER}")


def perturbative_terms(measure: FreeMeasure, spec: InteractionSpec, M: int, cov=None) -> list[float]:
    """[Z_0, Z_1, ..., Z_M] with Z_m = (1/m!)(-alpha4/4)^m p^{-lNm} sum_z E[prod_k P(phi(z_k))].

    Translation invariance fixes z_1 = 0 (a factor #G_l). At order 2 the
    remaining sum only sees ||z_2||, so one representative per norm shell
    suffices.
    """
    _check_order(M)
    lat = measure.lat
    if cov is None:
        cov = exact_covariance(measure)
    terms = [1.0]
    pref = -0.25 * spec.alpha4 * lat.weight
    if M >= 1:
        terms.append(pref * lat.n * _moment_with_polys(cov, [], [0], spec))
    if M >= 2:
        exps = lat.norm_exponent
        inner = 0.0
        for e in np.unique(exps):
            members = np.flatnonzero(exps == e)
            inner += len(members) * _moment_with_polys(cov, [], [0, int(members[0])], spec)
        terms.append(pref**2 / 2.0 * lat.n * inner)
    return terms


def perturbative_Z(measure: FreeMeasure, spec: InteractionSpec, M: int) -> float:
    return float(sum(perturbative_terms(measure, spec, M)))


def perturbative_correlation(points: Sequence, measure: FreeMeasure, spec: InteractionSpec, M: int) -> float:
    """(1/Z_M) [G_0^{(n)} + sum_{m<=M} G_m^{(n)}], every term an exact Isserlis sum."""
    _check_order(M)
    lat = measure.lat
    ext = as_indices(points, lat)
    if len(ext) + spec.degree * M > MAX_WICK_POINTS:
        raise TooLarge(f"{len(ext)} points at order {M} exceed the {MAX_WICK_POINTS}-point cap")
    if lat.n**M > MAX_SITE_SUMS:
        raise TooLarge(f"order {M} needs {lat.n}^{M} lattice sums (cap {MAX_SITE_SUMS})")
    cov = exact_covariance(measure)
    pref = -0.25 * spec.alpha4 * lat.weight
    num = _moment_with_polys(cov, ext, [], spec)
    sites = range(lat.n)
    for m in range(1, M + 1):
        acc = 0.0
        for zs in itertools.combinations_with_replacement(sites, m):
            # ordered tuples per multiset
            mult = math.factorial(m)
            for v in set(zs):
                mult //= math.factorial(zs.count(v))
            acc += mult * _moment_with_polys(cov, ext, list(zs), spec)
        num += pref**m / math.factorial(m) * acc
    return num / perturbative_Z(measure, spec, M)


@dataclass(frozen=True)
class DerivativeRow:
    eps: float
    finite_difference: float
    direct: float
    stderr: float
    bias_bound: float

    @property
    def ok(self) -> bool:
        return abs(self.finite_difference - self.direct) <= 5.0 * self.stderr + self.bias_bound


@dataclass(frozen=True)
class DerivativeReport:
    rows: tuple[DerivativeRow, ...]

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rows)


def functional_derivative_check(
    J: np.ndarray,
    thetas: Sequence[np.ndarray],
    measure: FreeMeasure,
    spec: InteractionSpec,
    n: int,
    seed: int,
    eps: Sequence[float] = (1e-2, 1e-3, 1e-4),
    batches: int = DEFAULT_BATCHES,
) -> DerivativeReport:
    """Central differences of Z(J) along thetas against E[prod <phi,theta_i> e^{-E_int + <phi,J>}].

    Both sides use the same draws, so their difference carries only the
    O(eps^2) truncation error plus a small MC term. The truncation bound is
    estimated from the next Taylor coefficient on the same draws.
    """
    k = len(thetas)
    if k not in (1, 2):
        raise ValueError("between one and two directions are supported")
    lat = measure.lat
    J = _check_source(J, lat.n)
    thetas = [_check_source(t, lat.n) for t in thetas]
    eps = list(eps)

    def stat(F, X, Y):
        base = _weights(F, spec, lat) * np.exp(pairing(F, J, lat))
        s = [pairing(F, t, lat) for t in thetas]
        cols = []
        if k == 1:
            direct = s[0] * base
            third = np.abs(s[0]) ** 3 * base / 6.0
            for e in eps:
                fd = (np.exp(e * s[0]) - np.exp(-e * s[0])) / (2 * e) * base
                cols += [fd, fd - direct, e * e * third * np.cosh(e * s[0])]
        else:
            direct = s[0] * s[1] * base
            fourth = (np.abs(s[0]) ** 3 * np.abs(s[1]) + np.abs(s[0]) * np.abs(s[1]) ** 3) * base / 6.0
            for e in eps:
                fd = (
                    np.exp(e * (s[0] + s[1]))
                    - np.exp(e * (s[0] - s[1]))
                    - np.exp(e * (s[1] - s[0]))
                    + np.exp(-e * (s[0] + s[1]))
                ) / (4 * e * e) * base
                cols += [fd, fd - direct, e * e * fourth * np.cosh(e * (np.abs(s[0]) + np.abs(s[1])))]
        return np.stack([direct] + cols, axis=1)

    means = measure.batch_means(seed, n, batches, stat)
    direct = means[:, 0].mean()
    rows = []
    for q, e in enumerate(eps):
        fd_b, diff_b, bias_b = means[:, 1 + 3 * q], means[:, 2 + 3 * q], means[:, 3 + 3 * q]
        se = float(np.std(diff_b, ddof=1) / math.sqrt(batches))
        rows.append(DerivativeRow(e, float(fd_b.mean()), float(direct), se, float(bias_b.mean())))
    return DerivativeReport(tuple(rows))


@dataclass(frozen=True)
class WickRotatedResult:
    ratio: EstimatorResult
    numerator: EstimatorResult
    denominator: EstimatorResult

    @property
    def sign_problem(self) -> bool:
        return SIGN_PROBLEM in self.ratio.flags


def wick_rotated_Z(
    J: np.ndarray,
    measure: FreeMeasure,
    spec: InteractionSpec,
    n: int,
    seed: int,
    batches: int = DEFAULT_BATCHES,
) -> WickRotatedResult:
    """E[exp(i(E_int + E_source))] / E[exp(i(E_0 + E_int))] with E_source = -<phi, J>.

    The estimate is flagged with SignProblem when the denominator is within
    five standard errors of zero.
    """
    lat = measure.lat
    J = _check_source(J, lat.n)
    U = assemble_U(lat, measure.params)

    def stat(F, X, Y):
        ei = e_int(F, spec, lat)
        e0 = lat.weight * np.einsum("ki,ki->k", F @ U, F)
        num = np.exp(1j * (ei - pairing(F, J, lat)))
        den = np.exp(1j * (e0 + ei))
        return np.stack([num, den], axis=1)

    means = measure.batch_means(seed, n, batches, stat)
    num = result_from_batches(means[:, 0], n, seed)
    den = result_from_batches(means[:, 1], n, seed)
    flags = (SIGN_PROBLEM,) if abs(den.value) < 5.0 * den.stderr else ()
    ratio = _ratio(means[:, 0], means[:, 1], n, seed, flags)
    return WickRotatedResult(ratio, num, den)
