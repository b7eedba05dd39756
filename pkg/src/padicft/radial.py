"""Radial integrals over Q_p^N evaluated as exact shell series.

Q_p^N splits into spheres S_k = {||y||_p = p^k} of Haar volume
p^{kN}(1 - p^{-N}). A radial integrand that is a power of ||y||_p on all
but finitely many spheres turns every integral here into a finite sum plus
geometric tails, which are summed in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DivergentIntegral
from .padic import ExactNorm, PrimeConfig

# Stop expanding a convergent alternating tail once terms drop below this
# fraction of the running total.
_SERIES_RTOL = 1e-18


@dataclass(frozen=True)
class KernelSpec:
    """Radial kernel w(||y||) = scale * ||y||^delta, optionally tabulated.

    ``table`` overrides the power law on a contiguous block of shells:
    pairs ``(k, w(p^k))``. Outside the block the power law holds, so all
    series keep geometric tails.
    """

    delta: float
    N: int
    scale: float = 1.0
    table: tuple[tuple[int, float], ...] = ()
    name: str = "power"
    _lookup: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        if not self.delta > self.N:
            raise ValueError(
                f"kernel exponent delta={self.delta} must exceed N={self.N} "
                "(two-sided bound C0 ||y||^delta <= w <= C1 ||y||^delta with delta > N)"
            )
        if not self.scale > 0:
            raise ValueError(f"kernel scale must be positive, got {self.scale}")
        if self.table:
            ks = [k for k, _ in self.table]
            if ks != list(range(ks[0], ks[0] + len(ks))):
                raise ValueError("tabulated shells must be contiguous and increasing")
            if any(v <= 0 for _, v in self.table):
                raise ValueError("tabulated kernel values must be positive")
            self._lookup.update(dict(self.table))

    @classmethod
    def taibleson(cls, beta: float, N: int, p: int) -> "KernelSpec":
        """Kernel whose symbol is exactly ||kappa||_p^beta (Taibleson-Vladimirov)."""
        if beta <= 0:
            raise ValueError("beta must be positive")
        scale = (1.0 - float(p) ** (-beta - N)) / (float(p) ** beta - 1.0)
        return cls(delta=beta + N, N=N, scale=scale, name="taibleson")

    @property
    def k_lo(self) -> int | None:
        return self.table[0][0] if self.table else None

    @property
    def k_hi(self) -> int | None:
        return self.table[-1][0] if self.table else None

    def w(self, k: int, p: int) -> float:
        """Kernel value on the sphere of radius p^k."""
        v = self._lookup.get(k)
        if v is not None:
            return v
        return self.scale * float(p) ** (k * self.delta)

    def power_part(self) -> "KernelSpec":
        return KernelSpec(delta=self.delta, N=self.N, scale=self.scale, name=self.name)

    def check(self, cfg: PrimeConfig) -> None:
        if cfg.N != self.N:
            raise ValueError(f"kernel built for N={self.N} used with N={cfg.N}")
        if self.table:
            p = cfg.p
            ks = range(self.k_lo - 1, self.k_hi + 2)
            vals = [self.w(k, p) for k in ks]
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ValueError("kernel must be increasing in ||y||")


def _norm_exponent(norm: ExactNorm | int) -> int | None:
    if isinstance(norm, ExactNorm):
        return norm.exponent
    return None if norm is None else int(norm)


def shell_volume(k: int, cfg: PrimeConfig) -> Fraction:
    """Haar volume of S_k^N = p^{kN}(1 - p^{-N})."""
    return Fraction(cfg.p) ** (k * cfg.N) * (1 - Fraction(1, cfg.p**cfg.N))


def ball_volume(k: int, cfg: PrimeConfig) -> Fraction:
    """Haar volume of B_k^N = p^{kN}."""
    return Fraction(cfg.p) ** (k * cfg.N)


def _vol(k: int, p: int, N: int) -> float:
    return float(p) ** (k * N) * (1.0 - float(p) ** (-N))


def upper_shell_sum(kernel: KernelSpec, k_start: int, cfg: PrimeConfig) -> float:
    """sum_{k >= k_start} vol(S_k) / w(p^k), summed in closed form."""
    p, N = cfg.p, cfg.N
    r = float(p) ** (N - kernel.delta)
    lead = (1.0 - float(p) ** (-N)) / kernel.scale
    if not kernel.table or kernel.k_hi < k_start:
        return lead * r**k_start / (1.0 - r)
    # power shells below the table, the table itself, then the power tail
    total = 0.0
    if k_start < kernel.k_lo:
        total += lead * (r**k_start - r**kernel.k_lo) / (1.0 - r)
    for k in range(max(kernel.k_lo, k_start), kernel.k_hi + 1):
        total += _vol(k, p, N) / kernel.w(k, p)
    return total + lead * r ** (kernel.k_hi + 1) / (1.0 - r)


def d_const(l: int, kernel: KernelSpec, cfg: PrimeConfig) -> float:
    """d(l, w) = integral of 1/w over ||y|| > p^{-l}."""
    return upper_shell_sum(kernel, 1 - l, cfg)


def outer_tail(l: int, kernel: KernelSpec, cfg: PrimeConfig) -> float:
    """tau_l = integral of 1/w over ||y|| > p^l (the boundary term of W on B_l)."""
    return upper_shell_sum(kernel, l + 1, cfg)


def symbol(kernel: KernelSpec, norm_kappa: ExactNorm | int, cfg: PrimeConfig) -> float:
    """A_w(||kappa||) = integral of (1 - chi(y . kappa)) / w(||y||) dy.

    Shells with p^k <= 1/||kappa|| contribute nothing. The shell at
    p^k = p/||kappa|| sees the full ball volume p^{kN}, and every larger
    shell contributes its own volume.
    """
    m = _norm_exponent(norm_kappa)
    if m is None:
        return 0.0
    k0 = 1 - m
    if k0 in kernel._lookup:
        edge = float(cfg.p) ** (k0 * cfg.N) / kernel._lookup[k0]
    else:
        edge = float(cfg.p) ** (k0 * (cfg.N - kernel.delta)) / kernel.scale
    return edge + upper_shell_sum(kernel, k0 + 1, cfg)


def symbol_bounds(kernel: KernelSpec, cfg: PrimeConfig, m_range=range(-20, 21)) -> tuple[float, float]:
    """Constants C0', C1' with C0' r^{delta-N} <= A(r) <= C1' r^{delta-N} over ``m_range``."""
    ratios = [
        symbol(kernel, m, cfg) / float(cfg.p) ** (m * (kernel.delta - cfg.N)) for m in m_range
    ]
    return min(ratios), max(ratios)


def _small_norm_coefficient(kernel: KernelSpec, cfg: PrimeConfig) -> tuple[float, int]:
    """(a, m_max) with A(p^m) = a p^{m(delta-N)} exactly for every m <= m_max."""
    a = symbol(kernel.power_part(), 0, cfg)
    m_max = -kernel.k_hi if kernel.table else 10**9
    return a, m_max


def _large_norm_coefficients(kernel: KernelSpec, cfg: PrimeConfig) -> tuple[float, float, int]:
    """(a, D, m_min) with A(p^m) = a p^{m(delta-N)} + D exactly for every m >= m_min."""
    a = symbol(kernel.power_part(), 0, cfg)
    if not kernel.table:
        return a, 0.0, -(10**9)
    m_min = 2 - kernel.k_lo
    D = symbol(kernel, m_min, cfg) - a * float(cfg.p) ** (m_min * (kernel.delta - cfg.N))
    return a, D, m_min


def ball_symbol_integral(K: int, kernel: KernelSpec, cfg: PrimeConfig) -> float:
    """sum_{k <= K} vol(S_k) A(p^k), the integral of A over the ball B_K."""
    p, N, delta = cfg.p, cfg.N, kernel.delta
    a, m_max = _small_norm_coefficient(kernel, cfg)
    total = 0.0
    k_top = min(K, m_max)
    for k in range(k_top + 1, K + 1):
        total += _vol(k, p, N) * symbol(kernel, k, cfg)
    total += (1.0 - float(p) ** (-N)) * a * float(p) ** (k_top * delta) / (1.0 - float(p) ** (-delta))
    return total


def mass_ball_integral(
    l: int, kernel: KernelSpec, gamma: float, alpha2: float, cfg: PrimeConfig
) -> float:
    """c_0 = integral over p^l Z_p^N of (gamma/2 A(||z||) + alpha2/2)."""
    return 0.5 * gamma * ball_symbol_integral(-l, kernel, cfg) + 0.5 * alpha2 * float(cfg.p) ** (-l * cfg.N)


def _lower_propagator_sum(K: int, kernel: KernelSpec, gamma: float, alpha2: float, cfg: PrimeConfig) -> float:
    """sum_{k <= K} vol(S_k) / (gamma/2 A(p^k) + alpha2/2).

    Shells are summed explicitly down to a level where gamma A / alpha2 <= 1/2;
    below it 1/(1 + q) is expanded in powers of q and each power summed as an
    exact geometric series over shells.
    """
    p, N, delta = cfg.p, cfg.N, kernel.delta
    a, m_max = _small_norm_coefficient(kernel, cfg)
    total = 0.0
    k = K
    while k > m_max or gamma * a * float(p) ** (k * (delta - N)) / alpha2 > 0.5:
        total += _vol(k, p, N) / (0.5 * gamma * symbol(kernel, k, cfg) + 0.5 * alpha2)
        k -= 1
    ratio = -gamma * a / alpha2
    tail = 0.0
    n = 0
    while True:
        e = N + n * (delta - N)
        term = ratio**n * float(p) ** (k * e) / (1.0 - float(p) ** (-e))
        tail += term
        if abs(term) <= _SERIES_RTOL * abs(tail):
            break
        n += 1
    return total + (2.0 / alpha2) * (1.0 - float(p) ** (-N)) * tail


def _upper_propagator_sum(K: int, kernel: KernelSpec, gamma: float, alpha2: float, cfg: PrimeConfig) -> float:
    """sum_{k >= K} vol(S_k) / (gamma/2 A(p^k) + alpha2/2); requires delta > 2N."""
    p, N, delta = cfg.p, cfg.N, kernel.delta
    a, D, m_min = _large_norm_coefficients(kernel, cfg)
    beta = gamma * D + alpha2
    total = 0.0
    k = K
    while k < m_min or abs(beta) / (gamma * a * float(p) ** (k * (delta - N))) > 0.5:
        total += _vol(k, p, N) / (0.5 * gamma * symbol(kernel, k, cfg) + 0.5 * alpha2)
        k += 1
    ratio = -beta / (gamma * a)
    tail = 0.0
    n = 0
    while True:
        e = (delta - 2 * N) + n * (delta - N)
        term = ratio**n * float(p) ** (-k * e) / (1.0 - float(p) ** (-e))
        tail += term
        if abs(term) <= _SERIES_RTOL * abs(tail):
            break
        n += 1
    return total + (2.0 / (gamma * a)) * (1.0 - float(p) ** (-N)) * tail


def continuum_propagator(
    kernel: KernelSpec, gamma: float, alpha2: float, x_norm: ExactNorm | int, cfg: PrimeConfig
) -> float:
    """G(x), the inverse Fourier transform of 1/(gamma/2 A(||kappa||) + alpha2/2).

    For ||x|| = p^s the character integrates to the sphere volume on shells
    p^k <= p^{-s}, to -p^{-sN} on the shell p^{1-s}, and to zero above.
    """
    if not alpha2 > 0:
        raise ValueError("continuum propagator requires alpha2 > 0")
    s = _norm_exponent(x_norm)
    p, N = cfg.p, cfg.N
    if s is None:
        if not kernel.delta > 2 * N:
            raise DivergentIntegral(
                f"G(0) diverges for delta={kernel.delta} <= 2N={2 * N}"
            )
        return _lower_propagator_sum(0, kernel, gamma, alpha2, cfg) + _upper_propagator_sum(
            1, kernel, gamma, alpha2, cfg
        )
    inner = _lower_propagator_sum(-s, kernel, gamma, alpha2, cfg)
    edge = float(p) ** (-s * N) / (0.5 * gamma * symbol(kernel, 1 - s, cfg) + 0.5 * alpha2)
    return inner - edge
