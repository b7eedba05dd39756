"""Built-in invariant suite behind the ``selftest`` subcommand."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import oracles
from .gibbs import FreeMeasure, exact_covariance, mc_moment
from .interacting import InteractionSpec, correlation, wick_rotated_Z
from .landau import GLParams, MinimizeConfig, boundary_term, gl_energy, minimize, ssb_scan
from .lattice import (
    Lattice,
    ModelParams,
    assemble_U,
    dft,
    energy_free_coord,
    energy_free_momentum,
    idft,
    momentum_diagonal,
)
from .padic import PrimeConfig
from .radial import KernelSpec, d_const, symbol
from .wick import pairing_count, wick_pairings


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str
    seconds: float


def _orthogonality() -> tuple[bool, str]:
    lat = Lattice(PrimeConfig(3, 1, 2))
    S = (lat.dft_matrix / lat.weight).sum(axis=1)
    expect = np.zeros(lat.n)
    expect[0] = lat.n
    err = float(np.abs(S - expect).max())
    return err <= 1e-12 * lat.n, f"max deviation {err:.2e}"


def _dft_roundtrip() -> tuple[bool, str]:
    lat = Lattice(PrimeConfig(3, 2, 1))
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(20):
        f, g = rng.normal(size=lat.n), rng.normal(size=lat.n)
        worst = max(worst, float(np.abs(idft(dft(f, lat), lat) - f).max()))
        lhs = lat.weight * (f @ g)
        rhs = lat.weight * float(np.real(dft(f, lat) @ np.conj(dft(g, lat))))
        worst = max(worst, abs(lhs - rhs))
    return worst <= 1e-12, f"max error {worst:.2e}"


def _symbol() -> tuple[bool, str]:
    cfg = PrimeConfig(3, 1, 1)
    worst = 0.0
    for delta in (1.5, 2.0, 3.0):
        k = KernelSpec(delta, 1)
        for m in range(-3, 4):
            a, b = symbol(k, m, cfg), oracles.symbol_brute(k, m, cfg)
            worst = max(worst, abs(a - b) / b)
    ok = abs(symbol(KernelSpec(2, 1), 1, cfg) - 4 / 3) < 1e-14 and abs(d_const(1, KernelSpec(2, 1), cfg) - 1) < 1e-14
    return ok and worst <= 1e-10, f"max relative error {worst:.2e}"


def _diagonalization() -> tuple[bool, str]:
    worst = 0.0
    low = math.inf
    for p, N, l in ((3, 1, 1), (3, 1, 2), (3, 2, 1), (5, 1, 1)):
        lat = Lattice(PrimeConfig(p, N, l))
        par = ModelParams(2.0, 2.0, KernelSpec(2.0 * N, N))
        U = assemble_U(lat, par)
        M = lat.dft_matrix
        R = M.conj().T @ (momentum_diagonal(lat, par)[:, None] * M)
        worst = max(worst, float(np.linalg.norm(lat.weight * U - R) / np.linalg.norm(lat.weight * U)))
        low = min(low, float(np.linalg.eigvalsh(U).min()) - 1.0)
    return worst <= 1e-10 and low >= -1e-10, f"Frobenius {worst:.2e}, min eig - alpha2/2 {low:.2e}"


def _energy() -> tuple[bool, str]:
    lat = Lattice(PrimeConfig(3, 1, 2))
    par = ModelParams(1.5, 0.7, KernelSpec(2.5, 1))
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(20):
        f = rng.normal(size=lat.n) + rng.normal()
        a, b = energy_free_coord(f, lat, par), energy_free_momentum(dft(f, lat), lat, par)
        worst = max(worst, abs(a - b) / a)
    return worst <= 1e-10, f"max relative gap {worst:.2e}"


def _propagator_value() -> tuple[bool, str]:
    lat = Lattice(PrimeConfig(3, 1, 1))
    spec = FreeMeasure(lat, ModelParams(2.0, 2.0, KernelSpec(2.0, 1)))
    C = exact_covariance(spec)
    err = abs(C[0, 0] - 60 / 91)
    ref = oracles.covariance_pinv(assemble_U(lat, spec.params), lat.weight)
    err2 = float(np.abs(C - ref).max())
    return err <= 1e-12 and err2 <= 1e-12, f"|G(0) - 60/91| = {err:.2e}, pinv gap {err2:.2e}"


def _wick() -> tuple[bool, str]:
    counts = [len(wick_pairings(k)) for k in (2, 4, 6, 8)]
    ok = counts == [1, 3, 15, 105] and all(pairing_count(k) == c for k, c in zip((2, 4, 6, 8), counts))
    return ok, f"counts {counts}"


def _free_mc() -> tuple[bool, str]:
    lat = Lattice(PrimeConfig(3, 1, 1))
    spec = FreeMeasure(lat, ModelParams(2.0, 2.0, KernelSpec(2.0, 1)))
    C = exact_covariance(spec)
    r2 = mc_moment(spec, [0, 3], 40_000, seed=11)
    r4 = mc_moment(spec, [0, 0, 0, 0], 40_000, seed=12)
    ok = r2.within(C[0, 3]) and r4.within(3 * C[0, 0] ** 2)
    return ok, f"2pt z={(r2.value - C[0, 3]) / r2.stderr:+.2f}, 4pt z={(r4.value - 3 * C[0, 0] ** 2) / r4.stderr:+.2f}"


def _interacting() -> tuple[bool, str]:
    lat = Lattice(PrimeConfig(3, 1, 1))
    spec = FreeMeasure(lat, ModelParams(2.0, 2.0, KernelSpec(2.0, 1)))
    free = exact_covariance(spec)[0, 0]
    r = correlation([0, 0], spec, InteractionSpec.phi4(1.0), 40_000, seed=13)
    w = wick_rotated_Z(np.zeros(lat.n), spec, InteractionSpec.phi4(0.0), 2_000, seed=14)
    ok = r.value + 5 * r.stderr < free and w.numerator.value == 1.0
    return ok, f"<phi^2> = {r.value:.4f} +- {r.stderr:.4f} vs free {free:.4f}"


def _gradient_and_ssb() -> tuple[bool, str]:
    lat = Lattice(PrimeConfig(3, 1, 1))
    k = KernelSpec(2.0, 1)
    glp = GLParams(T=-1.0, Tc=0.0, gamma0=0.4, alpha4_0=1.0, kernel=k)
    rng = np.random.default_rng(3)
    f = rng.normal(size=lat.n)
    from .landau import gl_gradient

    g = gl_gradient(f, None, glp, lat)
    fd = oracles.finite_difference_gradient(lambda x: gl_energy(x, None, glp, lat), f)
    gerr = float(np.abs(g - fd).max() / np.abs(g).max())
    rows = ssb_scan([-1.0, 1.0], 0.0, 0.4, 1.0, k, lat)
    below, above = rows
    target = 1.0 - boundary_term(glp, lat)
    ok = (
        gerr <= 1e-6
        and below.converged
        and below.m_plus > 0 > below.m_minus
        and abs(below.m_plus**2 - target) <= 1e-6
        and abs(above.m_plus) <= 1e-6
    )
    return ok, f"gradient rel err {gerr:.1e}, m+ = {below.m_plus:.6f}"


def _symmetry() -> tuple[bool, str]:
    lat = Lattice(PrimeConfig(3, 2, 1))
    glp = GLParams(T=-0.5, Tc=0.0, gamma0=1.0, alpha4_0=1.0, kernel=KernelSpec(4.0, 2))
    f = np.random.default_rng(4).normal(size=lat.n)
    e = gl_energy(f, None, glp, lat)
    z2 = gl_energy(-f, None, glp, lat) == e
    worst = 0.0
    for a in range(lat.n):
        perm = lat.shift_permutation(lat.point(a))
        worst = max(worst, abs(gl_energy(f[perm], None, glp, lat) - e) / abs(e))
    return z2 and worst <= 1e-14, f"shift gap {worst:.1e}"


def _constrained() -> tuple[bool, str]:
    lat = Lattice(PrimeConfig(3, 1, 1))
    glp = GLParams.from_couplings(1.0, -1.0, 1.0, KernelSpec(2.0, 1))
    C = 0.5 * lat.weight * lat.n
    res = minimize(None, glp, MinimizeConfig(initial=np.random.default_rng(5).normal(size=lat.n), constraint=C), lat)
    ok = res.converged and res.spread <= 1e-8 and abs(res.mean - 0.5) <= 1e-12
    return ok, f"spread {res.spread:.1e}, iterations {res.iterations}"


CHECKS: list[tuple[str, Callable[[], tuple[bool, str]]]] = [
    ("character orthogonality", _orthogonality),
    ("dft round trip and Parseval", _dft_roundtrip),
    ("symbol closed form vs shell integration", _symbol),
    ("momentum diagonalization of U", _diagonalization),
    ("coordinate vs momentum energy", _energy),
    ("lattice propagator G_l(0) = 60/91", _propagator_value),
    ("Wick matching counts", _wick),
    ("free Monte Carlo moments", _free_mc),
    ("interacting estimators", _interacting),
    ("gradient certification and SSB", _gradient_and_ssb),
    ("Z2 and translation symmetry", _symmetry),
    ("constrained minimizer is constant", _constrained),
]


def run_selftest() -> list[CheckResult]:
    out = []
    for name, fn in CHECKS:
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failed check, not a crashed suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))
    return out
