"""Ginzburg-Landau energy on G_l and its minimization.

E(phi, J) = p^{-lN} [phi^T U phi + (alpha4/4) sum phi^4 - sum J phi], with
alpha2 = T - Tc allowed to be negative. Only the quadratic form of the
lattice module is reused; no measure is involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .lattice import Lattice, ModelParams, assemble_U
from .radial import KernelSpec, outer_tail


@dataclass(frozen=True)
class GLParams:
    """Leading-order temperature dependence: gamma = gamma0, alpha2 = T - Tc, alpha4 = alpha4_0."""

    T: float
    Tc: float
    gamma0: float
    alpha4_0: float
    kernel: KernelSpec

    def __post_init__(self):
        if not self.gamma0 > 0:
            raise ValueError(f"gamma0 must be positive, got {self.gamma0}")
        if self.alpha4_0 < 0:
            raise ValueError(f"alpha4_0 must be non-negative, got {self.alpha4_0}")

    @classmethod
    def from_couplings(cls, gamma: float, alpha2: float, alpha4: float, kernel: KernelSpec) -> "GLParams":
        return cls(T=alpha2, Tc=0.0, gamma0=gamma, alpha4_0=alpha4, kernel=kernel)

    @property
    def gamma(self) -> float:
        return self.gamma0

    @property
    def alpha2(self) -> float:
        return self.T - self.Tc

    @property
    def alpha4(self) -> float:
        return self.alpha4_0

    def model(self) -> ModelParams:
        return ModelParams(gamma=self.gamma, alpha2=self.alpha2, kernel=self.kernel)


class GLProblem:
    """Energy, gradient and Hessian for fixed (lattice, parameters, source)."""

    def __init__(self, lat: Lattice, glp: GLParams, J: np.ndarray | None = None):
        self.lat = lat
        self.glp = glp
        self.U = assemble_U(lat, glp.model())
        self.J = np.zeros(lat.n) if J is None else np.asarray(J, dtype=float)

    def energy(self, f: np.ndarray) -> float:
        w, a4 = self.lat.weight, self.glp.alpha4
        quad = f @ (self.U @ f)
        f2 = f * f  # squaring keeps E(-phi) == E(phi) bit for bit; pow() does not
        quart = 0.25 * a4 * np.sum(f2 * f2)
        return float(w * (quad + quart - self.J @ f))

    def gradient(self, f: np.ndarray) -> np.ndarray:
        return self.lat.weight * (2.0 * (self.U @ f) + self.glp.alpha4 * (f * f) * f - self.J)

    def hessian(self, f: np.ndarray) -> np.ndarray:
        H = 2.0 * self.U.copy()
        H[np.diag_indices_from(H)] += 3.0 * self.glp.alpha4 * f * f
        return self.lat.weight * H


def gl_energy(f: np.ndarray, J: np.ndarray | None, glp: GLParams, lat: Lattice) -> float:
    return GLProblem(lat, glp, J).energy(np.asarray(f, dtype=float))


def gl_gradient(f: np.ndarray, J: np.ndarray | None, glp: GLParams, lat: Lattice) -> np.ndarray:
    """p^{-lN} [2 U phi + alpha4 phi^3 - J]."""
    return GLProblem(lat, glp, J).gradient(np.asarray(f, dtype=float))


@dataclass
class MinimizeConfig:
    """Options for ``minimize``.

    ``constraint`` fixes the integral p^{-lN} sum_i phi(i); iterates then stay
    on that hyperplane. ``newton`` enables projected Newton steps whenever
    they are descent directions; otherwise Barzilai-Borwein gradient steps
    are used. Every step passes an Armijo backtracking test.
    """

    initial: np.ndarray | None = None
    max_iter: int = 5000
    tol: float = 1e-10
    armijo: float = 1e-4
    shrink: float = 0.5
    max_backtracks: int = 60
    constraint: float | None = None
    newton: bool = True

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")


@dataclass(frozen=True)
class MinimizeResult:
    field: np.ndarray
    energy: float
    grad_norm: float
    iterations: int
    spread: float
    converged: bool
    energies: tuple[float, ...] = field(default=(), repr=False)

    @property
    def mean(self) -> float:
        return float(np.mean(self.field))


def _project(v: np.ndarray, constrained: bool) -> np.ndarray:
    return v - v.mean() if constrained else v


def _newton_direction(prob: GLProblem, f: np.ndarray, g: np.ndarray, constrained: bool) -> np.ndarray | None:
    H = prob.hessian(f)
    try:
        if constrained:
            n = len(f)
            K = np.zeros((n + 1, n + 1))
            K[:n, :n] = H
            K[:n, n] = K[n, :n] = 1.0
            d = np.linalg.solve(K, np.concatenate([-g, [0.0]]))[:n]
        else:
            d = np.linalg.solve(H, -g)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(d)):
        return None
    # Newton is only trusted when the reduced Hessian is positive along d
    if d @ (H @ d) <= 0 or g @ d >= 0:
        return None
    return d


def minimize(J: np.ndarray | None, glp: GLParams, cfg: MinimizeConfig, lat: Lattice) -> MinimizeResult:
    """Minimize E(., J) from ``cfg.initial`` (zero field by default)."""
    prob = GLProblem(lat, glp, J)
    constrained = cfg.constraint is not None
    f = np.zeros(lat.n) if cfg.initial is None else np.array(cfg.initial, dtype=float)
    if constrained:
        target = cfg.constraint / lat.weight
        f = f + (target - f.sum()) / lat.n
    E = prob.energy(f)
    g = _project(prob.gradient(f), constrained)
    history = [E]
    step = 1.0 / max(np.abs(np.diag(prob.hessian(f))).max(), 1e-300)
    prev = None
    it = 0
    gnorm = float(np.max(np.abs(g)))
    while gnorm > cfg.tol and it < cfg.max_iter:
        it += 1
        d = _newton_direction(prob, f, g, constrained) if cfg.newton else None
        t = 1.0
        if d is None:
            if prev is not None:
                s, y = prev
                sy = s @ y
                if sy > 0:
                    step = (s @ s) / sy
            d = -step * g
        slope = g @ d
        accepted = False
        for _ in range(cfg.max_backtracks):
            trial = f + t * d
            Et = prob.energy(trial)
            if Et <= E + cfg.armijo * t * slope:
                accepted = True
                break
            t *= cfg.shrink
        if not accepted:
            break
        g_new = _project(prob.gradient(trial), constrained)
        prev = (trial - f, g_new - g)
        f, E, g = trial, Et, g_new
        history.append(E)
        gnorm = float(np.max(np.abs(g)))
    return MinimizeResult(
        field=f,
        energy=E,
        grad_norm=gnorm,
        iterations=it,
        spread=float(f.max() - f.min()),
        converged=gnorm <= cfg.tol,
        energies=tuple(history),
    )


def boundary_term(glp: GLParams, lat: Lattice) -> float:
    """gamma * tau_l, the finite-level shift of the constant-mode mass."""
    return glp.gamma * outer_tail(lat.cfg.l, glp.kernel, lat.cfg)


def constant_gradient(t: float, glp: GLParams, lat: Lattice) -> float:
    """Gradient component of E at the constant field t: p^{-lN}[(alpha2 + gamma tau_l) t + alpha4 t^3]."""
    return lat.weight * ((glp.alpha2 + boundary_term(glp, lat)) * t + glp.alpha4 * t**3)


def constant_solution_residual(t: float, glp: GLParams, lat: Lattice) -> float:
    """|(alpha2 + gamma tau_l) t + alpha4 t^3| for the constant field t."""
    return abs((glp.alpha2 + boundary_term(glp, lat)) * t + glp.alpha4 * t**3)


def ordered_magnetization(glp: GLParams, lat: Lattice) -> float:
    """Non-negative constant root: sqrt(-(alpha2 + gamma tau_l) / alpha4), or 0."""
    a = glp.alpha2 + boundary_term(glp, lat)
    if a >= 0 or glp.alpha4 <= 0:
        return 0.0
    return math.sqrt(-a / glp.alpha4)


@dataclass(frozen=True)
class SSBRow:
    T: float
    alpha2: float
    m_plus: float
    m_minus: float
    energy: float
    iterations: int
    converged: bool
    spread: float


def ssb_scan(
    temperatures: Sequence[float],
    Tc: float,
    gamma0: float,
    alpha4_0: float,
    kernel: KernelSpec,
    lat: Lattice,
    cfg: MinimizeConfig | None = None,
    start: float = 0.1,
) -> list[SSBRow]:
    """Minimize from the constant fields +start and -start at each temperature."""
    base = cfg or MinimizeConfig()
    rows = []
    for T in temperatures:
        glp = GLParams(T=float(T), Tc=Tc, gamma0=gamma0, alpha4_0=alpha4_0, kernel=kernel)
        runs = []
        for sign in (1.0, -1.0):
            c = MinimizeConfig(
                initial=np.full(lat.n, sign * start),
                max_iter=base.max_iter,
                tol=base.tol,
                armijo=base.armijo,
                shrink=base.shrink,
                max_backtracks=base.max_backtracks,
                newton=base.newton,
            )
            runs.append(minimize(None, glp, c, lat))
        plus, minus = runs
        rows.append(
            SSBRow(
                T=float(T),
                alpha2=glp.alpha2,
                m_plus=plus.mean,
                m_minus=minus.mean,
                energy=plus.energy,
                iterations=max(plus.iterations, minus.iterations),
                converged=plus.converged and minus.converged,
                spread=max(plus.spread, minus.spread),
            )
        )
    return rows
