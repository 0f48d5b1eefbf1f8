import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import spence

from hypermt import bubble_profiles as bp
from hypermt.errors import DomainError, RangeError

# sup |w0 - eta0| is approached as r -> infinity
W0_ETA0_LIMIT = 2 + math.pi ** 2 / 6


def w0_oracle(r):
    # scipy's spence(z) is int_1^z ln t/(1 - t) dt, an independent route to the log integral
    r = np.asarray(r, dtype=float)
    e = -np.log1p(r * r)
    return e + 2 * r * r / (1 + r * r) - 0.5 * e * e + (1 - r * r) / (1 + r * r) * spence(1 + r * r)


def radial_laplacian_from_derivative(dfun, r, h):
    # f'' by a fourth-order stencil on the closed-form derivative, plus f'/r
    d2 = (dfun(r - 2 * h) - 8 * dfun(r - h) + 8 * dfun(r + h) - dfun(r + 2 * h)) / (12 * h)
    return d2 + dfun(r) / r


@pytest.fixture(scope="module")
def z0():
    return bp.default_z0()


# ---------------------------------------------------------------- eta0

def test_eta0_examples():
    assert bp.eta0(0.0) == 0.0
    assert bp.eta0(1.0) == pytest.approx(-math.log(2), abs=1e-15)
    assert abs(bp.eta0_residual(2.0)) < 1e-9


def test_eta0_residual_against_finite_differences():
    r = np.array([0.3, 1.0, 2.0, 7.0])
    lap = radial_laplacian_from_derivative(bp.eta0_prime, r, 1e-3)
    assert np.max(np.abs(-lap - 4 * np.exp(2 * bp.eta0(r)))) < 1e-9


def test_eta0_residual_on_log_grid():
    r = np.logspace(-3, 3, 241)
    assert np.max(np.abs(bp.eta0_residual(r))) < 1e-9


def test_bubble_mass():
    assert bp.bubble_mass() == pytest.approx(4 * math.pi, abs=1e-10)


# ---------------------------------------------------------------- w0

def test_w0_examples():
    assert bp.w0(0.0) == 0.0
    assert bp.w0(1.0) == pytest.approx(1 - math.log(2) - math.log(2) ** 2 / 2, abs=1e-14)
    assert bp.w0_prime(0.0) == 0.0


def test_w0_matches_spence_oracle():
    r = np.concatenate([np.logspace(-3, 4, 300), [1.0, 8.247340514]])
    got = bp.w0(r)
    want = w0_oracle(r)
    assert np.max(np.abs(got - want) / np.maximum(1.0, np.abs(want))) < 1e-12


def test_w0_small_radius_series():
    r = np.array([1e-6, 1e-4, 9e-4])
    assert np.max(np.abs(bp.w0(r) - (r ** 4 / 4 - 4 * r ** 6 / 9))) < 1e-18


def test_w0_series_and_closed_form_agree_at_switch():
    below, above = bp.w0(1e-3 * (1 - 1e-12)), bp.w0(1e-3 * (1 + 1e-12))
    assert abs(below - above) < 1e-15


@pytest.mark.parametrize("r", [0.5, 2.0, 10.0])
def test_w0_ode_residual(r):
    lap = radial_laplacian_from_derivative(bp.w0_prime, r, 1e-3 * r)
    assert abs(-lap - bp.w0_source(r)) < 1e-8


def test_w0_prime_matches_finite_difference():
    r, h = 2.0, 1e-5
    fd = (bp.w0(r + h) - bp.w0(r - h)) / (2 * h)
    assert bp.w0_prime(r) == pytest.approx(fd, abs=1e-8)


def test_w0_prime_far_field():
    assert abs(1e3 * bp.w0_prime(1e3) + 2) < 1e-3
    assert abs(bp.w0_prime(1e-5)) < 1e-12


def test_w0_rejects_negative_radius():
    with pytest.raises(DomainError):
        bp.w0(-1.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 1e4))
def test_w0_minus_eta0_bounded(r):
    d = bp.w0(r) - bp.eta0(r)
    assert 0 <= d < W0_ETA0_LIMIT + 1e-12


def test_w0_minus_eta0_supremum():
    r = np.logspace(-3, 8, 400)
    sup = float(np.max(np.abs(bp.w0(r) - bp.eta0(r))))
    assert sup < W0_ETA0_LIMIT + 1e-12
    assert sup == pytest.approx(W0_ETA0_LIMIT, abs=1e-6)


def test_r0_root_golden():
    r0 = bp.r0_root()
    assert r0 == pytest.approx(8.247340514, abs=1e-8)
    assert abs(bp.w0(r0) + 1) < 1e-12


def test_w0_below_minus_one_beyond_r0():
    r = np.geomspace(bp.r0_root() * (1 + 1e-9), 1e8, 400)
    assert np.all(bp.w0(r) <= -1)


def test_w0_offset_hook_is_scoped():
    base = bp.w0(1.0)
    with bp.w0_offset(1e-3):
        assert bp.w0(1.0) == pytest.approx(base + 1e-3, abs=1e-15)
    assert bp.w0(1.0) == base


# ---------------------------------------------------------------- z0

def test_z0_initial_conditions(z0):
    v, d = z0.evaluate(0.0)
    assert v == 0.0 and d == 0.0
    assert z0.kind == "z0"
    assert z0.radii[0] == 0.0


def test_z0_farfield_slope_default_window(z0):
    fit = bp.farfield_slope(z0)
    assert fit.window == (1e4, 1e8)
    assert abs(fit.slope - bp.BETA) < 1e-3


def test_z0_slope_bias_shrinks_with_window(z0):
    # the ln^q r / r^2 corrections still tilt the fit close to the core
    errs = [abs(bp.farfield_slope(z0, w).slope - bp.BETA)
            for w in ((1e2, 1e4), (1e3, 1e6), (1e4, 1e8), (1e6, 1e12))]
    assert errs == sorted(errs, reverse=True)
    assert bp.farfield_slope(z0, (1e2, 1e4)).slope == pytest.approx(-9.20431, abs=1e-4)


def test_w0_farfield_slope():
    g = bp.w0_grid(1e8)
    # ln^2 r / r^2 corrections leave a 1.3e-3 tilt on the innermost window
    assert bp.farfield_slope(g, (1e2, 1e4)).slope == pytest.approx(-1.9986778, abs=1e-6)
    for w in ((1e3, 1e6), (1e4, 1e8)):
        assert abs(bp.farfield_slope(g, w).slope + 2) < 1e-3


def test_farfield_slope_rejects_bad_windows(z0):
    with pytest.raises(DomainError):
        bp.farfield_slope(z0, (1.0, 1e4))
    with pytest.raises(DomainError):
        bp.farfield_slope(bp.w0_grid(1e4), (1e2, 1e6))
    with pytest.raises(DomainError):
        bp.farfield_slope(bp.w0_grid(1e4, samples_per_decade=2), (1e2, 1e4))


def test_constant_grid_has_zero_slope():
    r = np.geomspace(1, 1e6, 100)
    grid = bp.ProfileGrid(r, np.full_like(r, 3.0), np.zeros_like(r))
    fit = bp.farfield_slope(grid, (10, 1e6))
    assert abs(fit.slope) < 1e-12 and fit.intercept == pytest.approx(3.0)


@pytest.mark.parametrize("r", [1.0, 5.0, 50.0])
def test_z0_ode_residual(r):
    g = bp.solve_z0(r_max=1e4, tol=1e-10)
    dz = lambda x: g.evaluate(x)[1]
    lap = radial_laplacian_from_derivative(dz, r, 1e-3 * r)
    src = 4 * math.exp(2 * bp.eta0(r)) * (bp.z0_source_f(r) + 2 * g(r))
    assert abs(-lap - src) < 1e-6 * max(1.0, abs(src))


def test_z0_cointegrated_w0_matches_closed_form(z0):
    r = np.logspace(-2, 6, 60)
    assert np.max(np.abs(z0.w0_ode(r) - bp.w0(r))) < 1e-8


def test_z0_grid_refuses_extrapolation():
    g = bp.solve_z0(r_max=1e3)
    with pytest.raises(RangeError):
        g.evaluate(2e3)


def test_solve_z0_rejects_short_range():
    with pytest.raises(DomainError):
        bp.solve_z0(r_max=10.0)


def test_profile_grid_validation():
    with pytest.raises(DomainError):
        bp.ProfileGrid([0, 1], [0, 1], [0, 1], kind="nope")
    with pytest.raises(DomainError):
        bp.ProfileGrid([0, 0], [0, 1], [0, 1])
    with pytest.raises(DomainError):
        bp.ProfileGrid([0, 1, 2], [0, 1], [0, 1])


def test_spline_fallback_interpolates():
    r = np.linspace(0, 2, 41)
    grid = bp.ProfileGrid(r, r ** 2, 2 * r)
    v, d = grid.evaluate(1.03)
    assert v == pytest.approx(1.03 ** 2, abs=1e-12)
    assert d == pytest.approx(2.06, abs=1e-12)


# ---------------------------------------------------------------- phi0, psi0

def test_phi0_examples():
    assert bp.phi0(0.0) == 0.0
    assert abs(bp.phi0(30.0) + 30.0) < 5


def test_phi0_solves_linear_inner_problem():
    t = np.array([0.5, 1.0, 3.0, 6.0])
    rhs = t - t * t
    # e^t in L amplifies stencil noise, so compare relative to the source
    assert np.max(np.abs(bp.L_operator(bp.phi0, t) - rhs) / np.maximum(1.0, np.abs(rhs))) < 1e-6


def test_psi0_far_derivative(z0):
    assert abs(bp.psi0_prime(30.0, z0) - bp.BETA / 2) < 0.2


def test_psi0_beyond_grid_raises():
    g = bp.solve_z0(r_max=1e3)
    with pytest.raises(RangeError):
        bp.psi0(20.0, g)


def test_inner_variable_must_be_nonnegative():
    with pytest.raises(DomainError):
        bp.phi0(-0.1)


def test_representation_of_zero_source():
    g = bp.representation_solve(lambda s: 0.0, 5.0, n=11)
    assert np.all(g.values == 0.0)


def test_representation_reproduces_phi0():
    t = np.linspace(0.0, 10.0, 21)
    g = bp.representation_solve(lambda s: s - s * s, 10.0, n=21)
    assert np.max(np.abs(g.values - bp.phi0(t))) < 1e-6
    assert np.max(np.abs(g.derivs - bp.phi0_prime(t))) < 1e-5


def test_representation_reproduces_psi0(z0):
    t = np.linspace(0.0, 8.0, 17)
    g = bp.representation_solve(lambda s: float(bp.psi0_rhs(s)), 8.0, n=17)
    assert np.max(np.abs(g.values - bp.psi0(t, z0))) < 1e-5


def test_representation_rejects_nonpositive_range():
    with pytest.raises(DomainError):
        bp.representation_solve(lambda s: s, 0.0)


# ---------------------------------------------------------------- beta

def test_beta_examples():
    assert bp.beta_quadrature(lambda r: 0.0) == 0.0
    assert bp.beta_from_source() == pytest.approx(bp.BETA, abs=1e-7)
    assert bp.beta_quadrature(lambda r: bp.eta0(r) ** 3) == pytest.approx(10.5, abs=1e-9)


def test_beta_quadrature_rejects_growing_integrand():
    with pytest.raises(DomainError):
        bp.beta_quadrature(lambda r: r ** 3)


@pytest.mark.parametrize("name", sorted(bp.TABLE_CLOSED_FORMS))
def test_integral_table_entry(name):
    num, closed = bp.integral_table()[name]
    assert num == pytest.approx(closed, rel=1e-8)


def test_integral_table_w0_value():
    num, closed = bp.integral_table()["w0"]
    assert closed == pytest.approx(-0.1100248, abs=1e-7)
    assert num == pytest.approx(-0.1100248, abs=1e-7)


def test_beta_routes_agree():
    table = bp.integral_table()
    assert bp.beta_from_table(table) == pytest.approx(bp.BETA, abs=1e-7)
    assert bp.beta_from_table(table, use_closed_forms=True) == pytest.approx(bp.BETA, abs=1e-12)
    assert bp.beta_from_table(table) == pytest.approx(bp.beta_from_source(), abs=1e-9)


def test_beta_value():
    assert bp.BETA == pytest.approx(-9.289868133696453, abs=1e-15)


# ---------------------------------------------------------------- kernel

def test_kernel_examples():
    assert bp.kernel_z(0.0) == 1.0
    assert bp.kernel_z(1.0) == 0.0
    assert bp.kernel_residual(0.0) == 0.0


def test_kernel_residual_on_grid():
    r = np.linspace(0, 50, 1001)
    assert np.max(np.abs(bp.kernel_residual(r))) < 1e-10


def test_kernel_against_finite_differences():
    dk = lambda r: -4 * r / (1 + r * r) ** 2
    r = 0.7
    lap = radial_laplacian_from_derivative(dk, r, 1e-3)
    assert abs(-lap - 8 * math.exp(2 * bp.eta0(r)) * bp.kernel_z(r)) < 1e-10
