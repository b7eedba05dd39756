import math

import numpy as np
import pytest

from padicft import KernelSpec, Lattice, PrimeConfig
from padicft.landau import (
    GLParams,
    MinimizeConfig,
    boundary_term,
    constant_gradient,
    constant_solution_residual,
    gl_energy,
    gl_gradient,
    minimize,
    ordered_magnetization,
    ssb_scan,
)
from padicft.lattice import solve_free_source
from padicft.oracles import finite_difference_gradient
from padicft.radial import outer_tail

K2 = KernelSpec(2.0, 1)


def glp(alpha2, gamma=1.0, alpha4=1.0, kernel=K2):
    return GLParams.from_couplings(gamma, alpha2, alpha4, kernel)


def test_params_validation():
    with pytest.raises(ValueError):
        GLParams(0.0, 0.0, 0.0, 1.0, K2)
    with pytest.raises(ValueError):
        GLParams(0.0, 0.0, 1.0, -1.0, K2)
    g = GLParams(T=2.0, Tc=3.0, gamma0=0.5, alpha4_0=1.0, kernel=K2)
    assert g.alpha2 == -1.0 and g.model().alpha2 == -1.0


def test_energy_examples(lattices, rng):
    lat = lattices(3, 1, 2)
    g = glp(-1.0)
    assert gl_energy(np.zeros(lat.n), None, g, lat) == 0.0
    for _ in range(10):
        f = rng.normal(size=lat.n)
        assert gl_energy(f, None, g, lat) == gl_energy(-f, None, g, lat)


@pytest.mark.parametrize("key", [(3, 1, 1), (3, 2, 1), (5, 1, 1)])
def test_translation(key, lattices, rng):
    lat = lattices(*key)
    g = glp(-0.5, kernel=KernelSpec(2.0 * key[1], key[1]))
    f = rng.normal(size=lat.n)
    e = gl_energy(f, None, g, lat)
    for a in range(lat.n):
        perm = lat.shift_permutation(lat.point(a))
        assert abs(gl_energy(f[perm], None, g, lat) - e) <= 1e-14 * abs(e)


def test_gradient(lattices, rng):
    lat = lattices(3, 1, 2)
    g = glp(-1.0, gamma=0.7)
    assert np.array_equal(gl_gradient(np.zeros(lat.n), None, g, lat), np.zeros(lat.n))
    t = 0.8
    gc = gl_gradient(np.full(lat.n, t), None, g, lat)
    assert np.allclose(gc, constant_gradient(t, g, lat), rtol=1e-12)
    tau = outer_tail(2, K2, lat.cfg)
    assert constant_gradient(t, g, lat) == pytest.approx(lat.weight * ((-1 + 0.7 * tau) * t + t**3), rel=1e-12)
    J = rng.normal(size=lat.n)
    for _ in range(10):
        f = rng.normal(size=lat.n)
        an = gl_gradient(f, J, g, lat)
        fd = finite_difference_gradient(lambda x: gl_energy(x, J, g, lat), f, h=1e-5)
        assert np.abs(an - fd).max() <= 1e-6 * np.abs(an).max()


def test_minimize_convex(lattices):
    lat = lattices(3, 1, 1)
    r = minimize(None, glp(1.0), MinimizeConfig(initial=np.linspace(-1, 1, lat.n)), lat)
    assert r.converged and np.abs(r.field).max() <= 1e-10 and abs(r.energy) <= 1e-18


def test_minimize_quadratic_matches_linear_solve(lattices, rng):
    lat = lattices(3, 1, 2)
    g = glp(0.5, gamma=1.2, alpha4=0.0)
    J = rng.normal(size=lat.n)
    for newton in (True, False):
        r = minimize(J, g, MinimizeConfig(tol=1e-12, newton=newton), lat)
        assert r.converged
        assert np.abs(r.field - solve_free_source(J, lat, g.model())).max() <= 1e-8


def test_minimize_descent_and_probes(lattices, rng):
    lat = lattices(3, 1, 2)
    g = glp(-1.0, gamma=0.4)
    J = rng.normal(size=lat.n) * 0.1
    r = minimize(J, g, MinimizeConfig(initial=rng.normal(size=lat.n), newton=False), lat)
    assert r.converged
    assert all(b <= a + 1e-15 for a, b in zip(r.energies, r.energies[1:]))
    for _ in range(20):
        eta = rng.normal(size=lat.n)
        eta *= 1e-3 / np.linalg.norm(eta)
        assert gl_energy(r.field, J, g, lat) <= gl_energy(r.field + eta, J, g, lat)


def test_minimize_reports_nonconvergence(lattices):
    lat = lattices(3, 1, 1)
    r = minimize(None, glp(-1.0), MinimizeConfig(initial=np.full(lat.n, 0.1), max_iter=1, newton=False), lat)
    assert not r.converged and r.iterations == 1


def test_constrained_minimizer(lattices, rng):
    lat = lattices(3, 1, 1)
    g = glp(-1.0)
    C = 0.5 * lat.weight * lat.n
    r = minimize(None, g, MinimizeConfig(initial=rng.normal(size=lat.n), constraint=C), lat)
    assert r.converged and r.spread <= 1e-8
    assert r.mean == pytest.approx(0.5, abs=1e-12)
    # stationarity: the gradient is parallel to the constraint normal
    grad = gl_gradient(r.field, None, g, lat)
    assert np.ptp(grad) <= 1e-8


def test_constant_solution_helpers(lattices):
    lat = lattices(3, 1, 1)
    g = glp(-1.0, gamma=0.4)
    assert constant_solution_residual(0.0, g, lat) == 0.0
    m = ordered_magnetization(g, lat)
    assert constant_solution_residual(m, g, lat) <= 1e-12
    assert ordered_magnetization(glp(1.0), lat) == 0.0


def test_boundary_term_rate():
    p, delta, N = 3, 2.0, 1
    g = glp(-1.0, gamma=0.4)
    t = [boundary_term(g, Lattice(PrimeConfig(p, N, l))) for l in (1, 2)]
    assert t[1] / t[0] == pytest.approx(p ** (-(delta - N)), rel=1e-12)
    m = [ordered_magnetization(g, Lattice(PrimeConfig(p, N, l))) for l in (1, 2)]
    assert m[0] < m[1] < 1.0


def test_ssb_scan(lattices):
    lat = lattices(3, 1, 1)
    rows = ssb_scan([-1.0, 1.0], 0.0, 0.4, 1.0, K2, lat)
    below, above = rows
    g = glp(-1.0, gamma=0.4)
    assert boundary_term(g, lat) <= 0.05
    assert below.converged and below.spread <= 1e-8
    assert below.m_plus > 0 > below.m_minus
    assert abs(below.m_plus + below.m_minus) <= 1e-8
    assert abs(below.m_plus**2 - (1 - boundary_term(g, lat))) <= 1e-6
    assert abs(above.m_plus) <= 1e-6 and abs(above.m_minus) <= 1e-6
    assert math.isclose(below.alpha2, -1.0)
