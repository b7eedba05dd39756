"""Level-l fields, the discrete Fourier transform on G_l and the free energy.

Fields are plain float arrays of length #G_l indexed in ``enumerate_grid``
order; momentum vectors are complex arrays in the same order. Matrices are
dense numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import CapacityError, NotHermitian, SingularSystem
from .padic import GridPoint, PrimeConfig, grid_array, point_index, valuation_table
from .radial import KernelSpec, d_const, mass_ball_integral, outer_tail, symbol

# Dense n x n matrices above this size would not fit a desk-scale budget.
DENSE_MAX_POINTS = 4096

LIZORKIN_TOL = 1e-12
IMAG_DISCARD_TOL = 1e-12
IMAG_ERROR_TOL = 1e-9


@dataclass(frozen=True)
class ModelParams:
    """Couplings of the free energy and the kernel of the nonlocal term."""

    gamma: float
    alpha2: float
    kernel: KernelSpec
    alpha4: float = 0.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.alpha4 < 0:
            raise ValueError(f"alpha4 must be non-negative, got {self.alpha4}")


class Lattice:
    """The finite group G_l with its index maps and pairwise tables.

    Tables are built lazily and cached; a Lattice is never mutated after
    construction, so sharing one between threads is safe once warmed up.
    """

    def __init__(self, cfg: PrimeConfig, max_points: int = DENSE_MAX_POINTS):
        if cfg.size > max_points:
            raise CapacityError(
                f"#G_l = {cfg.size} exceeds the dense-matrix limit of {max_points} points"
            )
        self.cfg = cfg
        self.points = grid_array(cfg)
        self.points.setflags(write=False)

    @property
    def p(self) -> int:
        return self.cfg.p

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def weight(self) -> float:
        """p^{-lN}: the Haar volume of one cell."""
        return self.cfg.cell_volume

    def index_of(self, x: GridPoint | tuple[int, ...]) -> int:
        coords = x.coords if isinstance(x, GridPoint) else tuple(x)
        return point_index(GridPoint(coords), self.cfg)

    def point(self, i: int) -> GridPoint:
        return GridPoint(tuple(int(u) for u in self.points[i]))

    def _index_array(self, coords: np.ndarray) -> np.ndarray:
        m = self.cfg.modulus
        idx = np.zeros(coords.shape[:-1], dtype=np.int64)
        for c in range(self.cfg.N):
            idx = idx * m + coords[..., c]
        return idx

    @cached_property
    def neg_index(self) -> np.ndarray:
        """Index of -x for every x."""
        return self._index_array((-self.points) % self.cfg.modulus)

    @cached_property
    def norm_exponent(self) -> np.ndarray:
        """log_p ||x||_p per point; the zero point gets the sentinel -2l - 1."""
        vt = valuation_table(self.cfg)
        least = vt[self.points].min(axis=1)
        out = self.cfg.l - least
        out[0] = -2 * self.cfg.l - 1
        return out

    @cached_property
    def pair_norm_exponent(self) -> np.ndarray:
        """log_p ||i - j||_p for all pairs; sentinel -2l - 1 on the diagonal."""
        cfg = self.cfg
        vt = valuation_table(cfg)
        least = None
        for c in range(cfg.N):
            col = self.points[:, c]
            v = vt[(col[:, None] - col[None, :]) % cfg.modulus]
            least = v if least is None else np.minimum(least, v)
        out = (cfg.l - least).astype(np.int16)
        np.fill_diagonal(out, -2 * cfg.l - 1)
        return out

    @cached_property
    def phase_table(self) -> np.ndarray:
        """Integer phases t_ij with {i . j}_p = t_ij / p^{2l}."""
        m = self.cfg.modulus
        t = np.zeros((self.n, self.n), dtype=np.int64)
        for c in range(self.cfg.N):
            col = self.points[:, c]
            t = (t + np.outer(col, col) % m) % m
        return t

    @cached_property
    def _cos_sin(self) -> tuple[np.ndarray, np.ndarray]:
        m = self.cfg.modulus
        angles = 2.0 * np.pi * np.arange(m) / m
        cos, sin = np.cos(angles), np.sin(angles)
        # exact values on the quarter turns keep orthogonality sums clean
        cos[0], sin[0] = 1.0, 0.0
        return cos, sin

    @cached_property
    def dft_matrix(self) -> np.ndarray:
        """M_{j,i} = p^{-lN} chi(i . j); unitary."""
        cos, sin = self._cos_sin
        t = self.phase_table
        return self.weight * (cos[t] + 1j * sin[t])

    @cached_property
    def plus_minus(self) -> tuple[np.ndarray, np.ndarray]:
        """Indices of G_plus and G_minus under the lexicographic rule."""
        neg = self.neg_index
        idx = np.arange(1, self.n)
        # index order is lexicographic order of coordinate tuples
        plus = idx[idx < neg[idx]]
        return plus, neg[plus]

    def split(self, rule: str = "lex") -> tuple[np.ndarray, np.ndarray]:
        plus, minus = self.plus_minus
        if rule == "lex":
            return plus, minus
        if rule == "revlex":
            return minus, plus
        raise ValueError(f"unknown split rule {rule!r}")

    def symbol_values(self, kernel: KernelSpec) -> np.ndarray:
        """A(||j||_p) for every point j; 0 at j = 0."""
        out = np.zeros(self.n)
        exps = self.norm_exponent
        for e in np.unique(exps[1:]):
            out[exps == e] = symbol(kernel, int(e), self.cfg)
        return out

    def shift_permutation(self, a: GridPoint | tuple[int, ...]) -> np.ndarray:
        """perm with (phi(. - a))[i] = phi[perm[i]]."""
        coords = np.asarray(a.coords if isinstance(a, GridPoint) else a, dtype=np.int64)
        return self._index_array((self.points - coords) % self.cfg.modulus)


def is_lizorkin(f: np.ndarray, tol: float = LIZORKIN_TOL) -> bool:
    return abs(float(np.sum(f))) <= tol * max(1.0, float(np.sum(np.abs(f))))


def dft(f: np.ndarray, lat: Lattice) -> np.ndarray:
    """phi_hat(j) = p^{-lN} sum_i phi(i) chi(i . j)."""
    return lat.dft_matrix @ np.asarray(f)


def idft(g: np.ndarray, lat: Lattice, real: bool = True) -> np.ndarray:
    """phi(i) = p^{-lN} sum_j phi_hat(j) chi(-i . j).

    With ``real=True`` the imaginary residue is dropped when tiny and
    rejected with NotHermitian when it exceeds 1e-9.
    """
    out = lat.dft_matrix.conj() @ np.asarray(g, dtype=complex)
    if not real:
        return out
    scale = max(1.0, float(np.max(np.abs(out.real), initial=0.0)))
    resid = float(np.max(np.abs(out.imag), initial=0.0))
    if resid > IMAG_ERROR_TOL * scale:
        raise NotHermitian(f"imaginary residue {resid:.3e} after inverse transform")
    return out.real.copy()


def assemble_A(lat: Lattice, kernel: KernelSpec) -> np.ndarray:
    """A_ij = p^{-lN} / w(||i - j||_p) off the diagonal, 0 on it."""
    kernel.check(lat.cfg)
    exps = lat.pair_norm_exponent
    out = np.zeros((lat.n, lat.n))
    for e in np.unique(exps):
        if e < -lat.cfg.l + 1:
            continue
        out[exps == e] = lat.weight / kernel.w(int(e), lat.p)
    return out


def assemble_W(lat: Lattice, kernel: KernelSpec) -> np.ndarray:
    """W = A - d(l, w) I."""
    A = assemble_A(lat, kernel)
    A[np.diag_indices_from(A)] -= d_const(lat.cfg.l, kernel, lat.cfg)
    return A


def assemble_U(lat: Lattice, params: ModelParams) -> np.ndarray:
    """U = (gamma/2 d + alpha2/2) I - gamma/2 A."""
    U = -0.5 * params.gamma * assemble_A(lat, params.kernel)
    d = d_const(lat.cfg.l, params.kernel, lat.cfg)
    U[np.diag_indices_from(U)] += 0.5 * params.gamma * d + 0.5 * params.alpha2
    return U


def momentum_diagonal(lat: Lattice, params: ModelParams) -> np.ndarray:
    """D~_j: p^{-lN}(gamma/2 A(||j||) + alpha2/2) for j != 0 and c_0 at j = 0."""
    D = lat.weight * (0.5 * params.gamma * lat.symbol_values(params.kernel) + 0.5 * params.alpha2)
    D[0] = mass_ball_integral(lat.cfg.l, params.kernel, params.gamma, params.alpha2, lat.cfg)
    return D


def u_row_sum(lat: Lattice, params: ModelParams) -> float:
    """Common row sum of U: gamma/2 tau_l + alpha2/2."""
    return 0.5 * params.gamma * outer_tail(lat.cfg.l, params.kernel, lat.cfg) + 0.5 * params.alpha2


def energy_free_coord(f: np.ndarray, lat: Lattice, params: ModelParams, U: np.ndarray | None = None) -> float:
    """E_0(phi) = p^{-lN} phi^T U phi."""
    if U is None:
        U = assemble_U(lat, params)
    f = np.asarray(f, dtype=float)
    return float(lat.weight * (f @ (U @ f)))


def energy_free_momentum(g: np.ndarray, lat: Lattice, params: ModelParams) -> float:
    """E_0 = sum_j D~_j |phi_hat(j)|^2."""
    return float(np.sum(momentum_diagonal(lat, params) * np.abs(np.asarray(g)) ** 2))


def free_gradient(f: np.ndarray, J: np.ndarray, lat: Lattice, U: np.ndarray) -> np.ndarray:
    """Gradient of E_0(phi) - p^{-lN} sum J phi, i.e. p^{-lN}(2 U phi - J)."""
    return lat.weight * (2.0 * (U @ f) - J)


def solve_free_source(J: np.ndarray, lat: Lattice, params: ModelParams) -> np.ndarray:
    """Stationary point of E_0(phi) - p^{-lN} sum_i J(i) phi(i), from 2 U phi = J."""
    J = np.asarray(J, dtype=float)
    if params.alpha2 <= 0 and not is_lizorkin(J):
        raise SingularSystem(
            "alpha2 = 0 leaves the zero mode without a level-independent mass; "
            "J must have zero mean"
        )
    U = assemble_U(lat, params)
    return np.linalg.solve(2.0 * U, J)


def lizorkin_project(f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    return f - f.mean()


def embed_field(f: np.ndarray, lat_from: Lattice, lat_to: Lattice) -> np.ndarray:
    """Re-express a level-l field on the level-m lattice (m >= l).

    The level-l field lives on B_l; each level-m point in B_l takes the value
    of the level-l cell that contains it, and points outside B_l get 0.
    """
    l, m = lat_from.cfg.l, lat_to.cfg.l
    if lat_from.cfg.p != lat_to.cfg.p or lat_from.cfg.N != lat_to.cfg.N:
        raise ValueError("lattices must share p and N")
    if m < l:
        raise ValueError(f"cannot embed level {l} into coarser level {m}")
    step = lat_to.p ** (m - l)
    v = lat_to.points
    inside = np.all(v % step == 0, axis=1)
    cell = lat_from._index_array((v[inside] // step) % lat_from.cfg.modulus)
    out = np.zeros(lat_to.n)
    out[inside] = np.asarray(f, dtype=float)[cell]
    return out
