"""The level-l free Gaussian measure P_l with density exp(-E_0).

In momentum space E_0 is diagonal. Writing phi_hat(j) = X_j + i Y_j for j in
G_plus (and the conjugate at -j), E_0 = sum_{j in G_plus} 2 p^{-lN} B_j
(X_j^2 + Y_j^2) with B_j = gamma/2 A(||j||) + alpha2/2, so X_j, Y_j are
independent N(0, p^{lN} / (4 B_j)) and the zero mode is absent.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidSpec, NotLizorkin
from .lattice import Lattice, ModelParams, dft, embed_field, is_lizorkin
from .padic import GridPoint
from .wick import isserlis

GENERATOR_ID = "numpy.PCG64"
THREADS_ENV = "PADICFT_THREADS"
DEFAULT_BATCHES = 32
_CHUNK_ELEMENTS = 4_000_000

# Above this many sites fields are assembled with an FFT instead of the
# dense cosine/sine basis; both give the same field from the same modes.
FFT_THRESHOLD = 128


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


@dataclass(frozen=True)
class EstimatorResult:
    value: float | complex
    stderr: float
    n: int
    seed: int
    batches: int
    flags: tuple[str, ...] = ()

    def within(self, target: float | complex, sigmas: float = 5.0, floor: float = 0.0) -> bool:
        return abs(self.value - target) <= max(sigmas * self.stderr, floor)


def _split_counts(n: int, batches: int) -> list[int]:
    base, extra = divmod(n, batches)
    return [base + (1 if b < extra else 0) for b in range(batches)]


class FreeMeasure:
    """Level-l free measure: per-mode variances, samplers and exact oracles.

    ``rule`` picks the G_plus / G_minus split used for the real mode basis;
    every law-level quantity is independent of it.
    """

    def __init__(self, lat: Lattice, params: ModelParams, rule: str = "lex", method: str = "auto"):
        if not params.alpha2 > 0:
            raise InvalidSpec(f"the free measure needs alpha2 > 0, got {params.alpha2}")
        if method not in ("auto", "dense", "fft"):
            raise ValueError(f"unknown assembly method {method!r}")
        self.lat = lat
        self.params = params
        self.rule = rule
        self.plus, self.minus = lat.split(rule)
        A = lat.symbol_values(params.kernel)
        self.B = 0.5 * params.gamma * A + 0.5 * params.alpha2
        self.mode_var = 1.0 / (4.0 * lat.weight * self.B[self.plus])
        if method == "auto":
            method = "fft" if lat.n > FFT_THRESHOLD else "dense"
        self.method = method

    @property
    def n_modes(self) -> int:
        return len(self.plus)

    @cached_property
    def basis(self) -> tuple[np.ndarray, np.ndarray]:
        """(cos, sin) rows: phi = X @ cos + Y @ sin."""
        cos, sin = self.lat._cos_sin
        t = self.lat.phase_table[self.plus]
        w = 2.0 * self.lat.weight
        return w * cos[t], w * sin[t]

    def fields_from_modes(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        if self.method == "dense":
            c, s = self.basis
            return X @ c + Y @ s
        lat = self.lat
        k = X.shape[0]
        hat = np.zeros((k, lat.n), dtype=complex)
        hat[:, self.plus] = X + 1j * Y
        hat[:, self.minus] = X - 1j * Y
        shape = (k,) + (lat.cfg.modulus,) * lat.cfg.N
        axes = tuple(range(1, lat.cfg.N + 1))
        out = np.fft.fftn(hat.reshape(shape), axes=axes).real.reshape(k, lat.n)
        return lat.weight * out

    def draw(self, rng: np.random.Generator, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        sd = np.sqrt(self.mode_var)
        X = rng.standard_normal((k, self.n_modes)) * sd
        Y = rng.standard_normal((k, self.n_modes)) * sd
        return self.fields_from_modes(X, Y), X, Y

    def _chunk(self) -> int:
        return max(1, _CHUNK_ELEMENTS // max(self.lat.n, 2 * self.n_modes))

    def batch_means(
        self,
        seed: int,
        n: int,
        batches: int,
        stat: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray],
    ) -> np.ndarray:
        """Per-batch means of ``stat(fields, X, Y)`` (one row per draw).

        Batch b draws from its own stream spawned from ``seed``, so results
        do not depend on the thread count.
        """
        if n < batches:
            raise ValueError(f"need at least one draw per batch ({n} < {batches})")
        streams = np.random.SeedSequence(seed).spawn(batches)
        sizes = _split_counts(n, batches)
        chunk = self._chunk()

        def run(b: int) -> np.ndarray:
            rng = np.random.Generator(np.random.PCG64(streams[b]))
            acc = None
            left = sizes[b]
            while left:
                k = min(chunk, left)
                vals = np.asarray(stat(*self.draw(rng, k)))
                s = vals.sum(axis=0)
                acc = s if acc is None else acc + s
                left -= k
            return acc / sizes[b]

        threads = min(thread_count(), batches)
        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                rows = list(pool.map(run, range(batches)))
        else:
            rows = [run(b) for b in range(batches)]
        return np.array(rows)


@dataclass(frozen=True)
class SampleBatch:
    fields: np.ndarray
    mode_re: np.ndarray
    mode_im: np.ndarray
    seed: int
    n: int
    generator: str = GENERATOR_ID
    plus: np.ndarray = field(default=None, repr=False)


def sample_free(spec: FreeMeasure, seed: int, n: int) -> SampleBatch:
    """n independent draws from P_l on one PCG64 stream seeded by ``seed``."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    fields, X, Y = spec.draw(rng, n)
    return SampleBatch(fields=fields, mode_re=X, mode_im=Y, seed=seed, n=n, plus=spec.plus)


def result_from_batches(means: np.ndarray, n: int, seed: int, flags=()) -> EstimatorResult:
    b = len(means)
    value = means.mean()
    stderr = float(np.std(means, ddof=1) / math.sqrt(b)) if b > 1 else math.nan
    if np.iscomplexobj(means):
        stderr = float(
            math.sqrt(np.var(means.real, ddof=1) + np.var(means.imag, ddof=1)) / math.sqrt(b)
        )
        return EstimatorResult(complex(value), stderr, n, seed, b, tuple(flags))
    return EstimatorResult(float(value), stderr, n, seed, b, tuple(flags))


def exact_covariance(spec: FreeMeasure) -> np.ndarray:
    """C_ab = Cov(phi(a), phi(b)), assembled from the real mode basis."""
    c, s = spec.basis
    v = spec.mode_var[:, None]
    return c.T @ (v * c) + s.T @ (v * s)


def propagator_values(spec: FreeMeasure) -> np.ndarray:
    """G_l(x) for every lattice point x, from the momentum sum over all j != 0."""
    lat = spec.lat
    cos, _ = lat._cos_sin
    inv = np.zeros(lat.n)
    inv[1:] = 1.0 / (2.0 * spec.B[1:])
    return lat.weight * (cos[lat.phase_table] @ inv)


def as_indices(points: Sequence, lat: Lattice) -> list[int]:
    out = []
    for x in points:
        if isinstance(x, (int, np.integer)):
            if not 0 <= x < lat.n:
                raise IndexError(f"lattice index {x} out of range")
            out.append(int(x))
        else:
            out.append(lat.index_of(x))
    return out


def _check_lizorkin(f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if not is_lizorkin(f, tol=1e-10):
        raise NotLizorkin(f"test function has nonzero sum {float(np.sum(f)):.3e}")
    return f


def pairing_variance(spec: FreeMeasure, f: np.ndarray) -> float:
    """Var <phi, f> = p^{-lN} sum_{j != 0} |f_hat(j)|^2 / (gamma A + alpha2)."""
    f = _check_lizorkin(f)
    fh = dft(f, spec.lat)
    return float(spec.lat.weight * np.sum(np.abs(fh[1:]) ** 2 / (2.0 * spec.B[1:])))


def pairing(fields: np.ndarray, f: np.ndarray, lat: Lattice) -> np.ndarray:
    """<phi, f> = p^{-lN} sum_i phi(i) f(i), one value per row of ``fields``."""
    return lat.weight * (fields @ f)


@dataclass(frozen=True)
class ConsistencyReport:
    v_l: float
    v_m: float
    empirical_l: EstimatorResult | None = None
    empirical_m: EstimatorResult | None = None
    cosine_l: EstimatorResult | None = None
    cosine_m: EstimatorResult | None = None

    @property
    def analytic_rel_diff(self) -> float:
        return abs(self.v_l - self.v_m) / max(abs(self.v_l), 1e-300)


def consistency_check(
    f: np.ndarray,
    l: int,
    m: int,
    params: ModelParams,
    lat_l: Lattice,
    lat_m: Lattice | None = None,
    n: int = 0,
    seed: int = 0,
    batches: int = DEFAULT_BATCHES,
) -> ConsistencyReport:
    """Compare the law of <phi, f> under P_l and P_m for a level-l test function.

    With ``n > 0`` both levels are also sampled (independent streams) and the
    empirical variance and E[cos <phi, f>] are reported at each level.
    """
    if lat_l.cfg.l != l:
        raise ValueError("lat_l does not match level l")
    if m < l:
        raise ValueError("m must be >= l")
    if lat_m is None:
        lat_m = lat_l if m == l else Lattice(lat_l.cfg.at_level(m))
    f = _check_lizorkin(f)
    g = embed_field(f, lat_l, lat_m)
    spec_l = FreeMeasure(lat_l, params)
    spec_m = FreeMeasure(lat_m, params)
    v_l = pairing_variance(spec_l, f)
    v_m = pairing_variance(spec_m, g)
    if n <= 0:
        return ConsistencyReport(v_l, v_m)

    def stats(spec, h):
        def stat(fields, X, Y):
            s = pairing(fields, h, spec.lat)
            return np.stack([s * s, np.cos(s)], axis=1)

        return stat

    seeds = np.random.SeedSequence(seed).generate_state(2)
    out = []
    for spec, h, s in ((spec_l, f, int(seeds[0])), (spec_m, g, int(seeds[1]))):
        means = spec.batch_means(s, n, batches, stats(spec, h))
        out.append((result_from_batches(means[:, 0], n, s), result_from_batches(means[:, 1], n, s)))
    return ConsistencyReport(v_l, v_m, out[0][0], out[1][0], out[0][1], out[1][1])


def characteristic_functional(
    spec: FreeMeasure, f: np.ndarray, n: int, seed: int, batches: int = DEFAULT_BATCHES
) -> tuple[float, EstimatorResult]:
    """(exp(-Var<phi,f>/2), MC mean of exp(i <phi, f>))."""
    f = _check_lizorkin(f)
    analytic = math.exp(-0.5 * pairing_variance(spec, f))
    means = spec.batch_means(seed, n, batches, lambda F, X, Y: np.exp(1j * pairing(F, f, spec.lat)))
    return analytic, result_from_batches(means, n, seed)


def gaussian_moment(spec: FreeMeasure, points: Sequence, cov: np.ndarray | None = None) -> float:
    """E[prod_k phi(x_k)] by Isserlis over the exact covariance; 0 for odd length."""
    idx = as_indices(points, spec.lat)
    if len(idx) % 2:
        return 0.0
    if cov is None:
        cov = exact_covariance(spec)
    return isserlis(cov, idx)


def mc_moment(
    spec: FreeMeasure, points: Sequence, n: int, seed: int, batches: int = DEFAULT_BATCHES
) -> EstimatorResult:
    idx = as_indices(points, spec.lat)
    means = spec.batch_means(seed, n, batches, lambda F, X, Y: np.prod(F[:, idx], axis=1))
    return result_from_batches(means, n, seed)
