"""Energies and the Pohozaev quadratic form of radial solutions.

All integrals use the radial reduction dV = 2 pi sinh(s) ds.  The
numerical part is a composite Gauss-Legendre rule on the integrator's
steps (mapped in ln s); beyond s_join the fitted tail A exp(-nu s) is
integrated in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import hyperbolic_geometry as geo
from .errors import DomainError, RangeError
from .radial_solver import RadialSolution, decay_rates

_GL_CACHE: dict = {}


def _gl(n):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _segments(sol: RadialSolution, s_hi: float):
    bps = sol.breakpoints if sol.breakpoints is not None else sol.grid
    bps = np.asarray(bps, dtype=float)
    bps = bps[bps < s_hi]
    return np.concatenate([bps, [s_hi]])


def _nodes(edges, n):
    """Gauss nodes and weights (in ds) on each [edges[i], edges[i+1]]."""
    x, w = _gl(n)
    a, b = edges[:-1], edges[1:]
    S = []
    W = []
    lin = a <= 0
    if np.any(lin):
        aa, bb = a[lin], b[lin]
        S.append((0.5 * (bb - aa)[:, None] * x + 0.5 * (bb + aa)[:, None]).ravel())
        W.append((0.5 * (bb - aa)[:, None] * w).ravel())
    lg = ~lin
    if np.any(lg):
        la, lb = np.log(a[lg]), np.log(b[lg])
        X = 0.5 * (lb - la)[:, None] * x + 0.5 * (lb + la)[:, None]
        s = np.exp(X)
        S.append(s.ravel())
        W.append((0.5 * (lb - la)[:, None] * w * s).ravel())
    return np.concatenate(S), np.concatenate(W)


def radial_quadrature(sol: RadialSolution, integrand: Callable, s_hi: float | None = None, n: int = 10):
    """int_0^{s_hi} integrand(s, u, u') ds on the solver steps.

    Returns (value, error estimate from an n/2-point rule).
    """
    end = numeric_end(sol)
    s_hi = end if s_hi is None else float(s_hi)
    if s_hi > end * (1 + 1e-12):
        raise RangeError(f"quadrature up to s = {s_hi} beyond numerical coverage {end}")
    edges = _segments(sol, s_hi)
    edges = edges[np.concatenate([[True], np.diff(edges) > 0])]
    vals = []
    for m in (n, max(2, n // 2)):
        s, w = _nodes(edges, m)
        u, up = sol.evaluate(s)
        vals.append(float(np.sum(w * integrand(s, u, up))))
    return vals[0], abs(vals[0] - vals[1])


def numeric_end(sol: RadialSolution) -> float:
    return float(sol.s_join) if sol.s_join is not None else float(sol.grid[-1])


def _log_sinh(s):
    s = np.asarray(s, dtype=float)
    big = s > 20
    out = np.empty_like(s)
    out[big] = s[big] - math.log(2.0) + np.log1p(-np.exp(-2 * s[big]))
    sm = ~big
    out[sm] = np.log(np.sinh(np.maximum(s[sm], 1e-300)))
    return out


def _log_expm1(x):
    x = np.asarray(x, dtype=float)
    out = np.full_like(x, -np.inf)
    big = x > 1
    out[big] = x[big] + np.log1p(-np.exp(-x[big]))
    sm = (~big) & (x > 0)
    out[sm] = np.log(np.expm1(x[sm]))
    return out


def _sinh_tail(k, S):
    """int_S^inf sinh(s) exp(-k s) ds for k > 1."""
    return 0.5 * (math.exp((1 - k) * S) / (k - 1) - math.exp(-(1 + k) * S) / (1 + k))


@dataclass(frozen=True)
class EnergyBreakdown:
    dirichlet: float
    l2_hyp: float
    mt_functional: float
    nonlinear_mass: float
    errors: dict = field(default_factory=dict)

    def as_dict(self):
        return {"dirichlet": self.dirichlet, "l2_hyp": self.l2_hyp,
                "mt_functional": self.mt_functional, "nonlinear_mass": self.nonlinear_mass}


def energies(sol: RadialSolution, n: int = 10) -> EnergyBreakdown:
    """Dirichlet energy, hyperbolic L2 norm, F(u) and lam int u^2 e^{u^2} dV."""
    if sol.tail_amplitude is None:
        raise DomainError("energies need a fitted tail amplitude (solution is not admissible)")
    lam = sol.lam
    two_pi = 2 * math.pi

    def dir_f(s, u, up):
        return np.sinh(s) * up * up

    def l2_f(s, u, up):
        return np.sinh(s) * u * u

    def nl_f(s, u, up):
        u2 = u * u
        with np.errstate(divide="ignore"):
            return np.where(u2 > 0, np.exp(_log_sinh(s) + u2 + np.log(np.where(u2 > 0, u2, 1.0))), 0.0)

    def mt_f(s, u, up):
        return np.exp(_log_sinh(s) + _log_expm1(u * u))

    out = {}
    err = {}
    for name, f in (("dirichlet", dir_f), ("l2_hyp", l2_f), ("nonlinear_mass", nl_f), ("mt_functional", mt_f)):
        v, e = radial_quadrature(sol, f, n=n)
        out[name] = two_pi * v
        err[name] = two_pi * e
    out["nonlinear_mass"] *= lam
    err["nonlinear_mass"] *= lam

    A = sol.tail_amplitude
    if A and sol.s_join is not None:
        nu, _ = decay_rates(lam)
        S = sol.s_join
        out["dirichlet"] += two_pi * (A * nu) ** 2 * _sinh_tail(2 * nu, S)
        out["l2_hyp"] += two_pi * A * A * _sinh_tail(2 * nu, S)
        nl = mt = 0.0
        for m in range(6):
            # u^2 e^{u^2} = sum u^{2m+2}/m!,  e^{u^2} - 1 = sum_{m>=1} u^{2m}/m!
            nl += A ** (2 * m + 2) / math.factorial(m) * _sinh_tail((2 * m + 2) * nu, S)
            mt += A ** (2 * m + 2) / math.factorial(m + 1) * _sinh_tail((2 * m + 2) * nu, S)
        out["nonlinear_mass"] += two_pi * lam * nl
        out["mt_functional"] += two_pi * mt
    return EnergyBreakdown(errors=err, **out)


# ---------------------------------------------------------------- Pohozaev

@dataclass(frozen=True)
class RadialFunction:
    """A radial function of the Euclidean radius with its derivative."""
    value: Callable
    deriv: Callable


def _radial_derivative(f, d: float) -> float:
    if isinstance(f, RadialSolution):
        s = geo.geodesic_radius(d)
        if s > numeric_end(f) * (1 + 1e-12):
            raise RangeError(f"d = {d} lies outside the solution's numerical coverage")
        _, up = f.evaluate(s)
        return float(up) * geo.ds_dr(d)
    if isinstance(f, RadialFunction):
        return float(f.deriv(d))
    raise DomainError("expected a RadialSolution or RadialFunction")


@dataclass(frozen=True)
class PohozaevReport:
    d: float
    lhs: float
    rhs: float
    residual: float

    @property
    def relative(self) -> float:
        return self.residual / abs(self.lhs) if self.lhs else float("inf")


def quadratic_form_P(d: float, u, v) -> float:
    """P(d, u, v) for radial u, v: -2 pi d^2 u'(d) v'(d)."""
    if not (0 < d < 1):
        raise DomainError("d must lie in (0, 1)")
    return -2 * math.pi * d * d * _radial_derivative(u, d) * _radial_derivative(v, d)


def quadratic_form_P_circle(d: float, grad_u: Callable, grad_v: Callable, n: int = 64) -> float:
    """-2d int <grad u, nu><grad v, nu> + d int <grad u, grad v> on |x| = d.

    Trapezoidal rule with n points, exact for the low trigonometric
    content of radial data.
    """
    th = 2 * math.pi * np.arange(n) / n
    nrm = np.stack([np.cos(th), np.sin(th)], axis=-1)
    x = d * nrm
    gu = grad_u(x)
    gv = grad_v(x)
    w = 2 * math.pi * d / n
    un = np.sum(gu * nrm, axis=-1)
    vn = np.sum(gv * nrm, axis=-1)
    return float(-2 * d * np.sum(un * vn) * w + d * np.sum(np.sum(gu * gv, axis=-1)) * w)


def pohozaev_residual(sol: RadialSolution, d: float, n: int = 10) -> PohozaevReport:
    """Both sides of the Pohozaev identity on the Euclidean disk of radius d.

    rhs = 8 pi d^2 lam e^{u(d)^2}/(1-d^2)^2 - 16 pi lam int_0^d e^{u^2} (1+r^2) r/(1-r^2)^3 dr
    """
    if not (0 < d < 1):
        raise DomainError("d must lie in (0, 1)")
    s_d = geo.geodesic_radius(d)
    if s_d > numeric_end(sol) * (1 + 1e-12):
        raise RangeError(f"d = {d} lies outside the solution's numerical coverage")
    lam = sol.lam
    lnlam = math.log(lam)
    u_d, up_d = sol.evaluate(s_d)
    ur = up_d * 2 / (1 - d * d)
    lhs = -2 * math.pi * d * d * ur * ur
    boundary = 8 * math.pi * d * d * math.exp(lnlam + u_d * u_d) / (1 - d * d) ** 2

    def f(s, u, up):
        r = np.tanh(0.5 * s)
        # dr = (1 - r^2)/2 ds
        return np.exp(lnlam + u * u) * (1 + r * r) * r / (2 * (1 - r * r) ** 2)

    vol, _ = radial_quadrature(sol, f, s_hi=s_d, n=n)
    rhs = boundary - 16 * math.pi * vol
    return PohozaevReport(d=d, lhs=lhs, rhs=rhs, residual=abs(lhs - rhs))
