"""Confronting computed solutions with the small-lambda asymptotics.

Every check returns a small report object rather than raising on a
failed inequality: the verification driver decides what counts as a
pass.  Claims with o(.) error terms are probed as trends across lambda,
never against fixed numbers the theory does not provide.
"""
from __future__ import annotations

import contextvars
import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import bubble_profiles as bp
from . import functionals as fn
from .errors import DegeneracyError, DomainError, HyperMTError, RangeError
from .radial_solver import (RadialSolution, ShootingConfig, decay_rates, fitted_decay_rate,
                            shoot_lambda, solve_for_lambda)
from .serialize import dumps

FOUR_PI = 4.0 * math.pi

DEFAULT_SWEEP = (0.005, 0.01, 0.02, 0.05, 0.1)
POHOZAEV_D = 0.1
GREEN_DELTA = 0.3
INNER_DELTA = 0.1

CSV_HEADER = ("lambda", "c_lambda", "r_lambda", "dirichlet", "mt_functional", "lambda_c2",
              "deficit_ratio", "decay_rate", "pohozaev_residual", "a1_estimate", "status")


# ---------------------------------------------------------------- sweep

@dataclass(frozen=True)
class SweepRecord:
    """One row of the E(lambda) sweep; failed rows carry NaN and a reason."""
    lam: float
    c_lambda: float = math.nan
    r_lambda: float = math.nan
    dirichlet: float = math.nan
    mt_functional: float = math.nan
    lambda_c2: float = math.nan
    deficit_ratio: float = math.nan
    decay_rate: float = math.nan
    pohozaev_residual: float = math.nan
    a1_estimate: float = math.nan
    nonlinear_mass: float = math.nan
    status: str = "ok"

    def __post_init__(self):
        if not (0 < self.lam < 0.25):
            raise DomainError(f"lambda must lie in (0, 1/4), got {self.lam!r}")

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def invariant_violations(self) -> list:
        """Named expectations the row does not meet (reported, not enforced)."""
        out = []
        if self.ok:
            if not self.dirichlet > FOUR_PI:
                out.append("dirichlet <= 4pi")
            if not self.decay_rate < -0.5:
                out.append("decay_rate >= -1/2")
        return out

    def csv_row(self) -> tuple:
        return (self.lam, self.c_lambda, self.r_lambda, self.dirichlet, self.mt_functional,
                self.lambda_c2, self.deficit_ratio, self.decay_rate, self.pohozaev_residual,
                self.a1_estimate, self.status)


def _clean_reason(exc: Exception) -> str:
    msg = " ".join(str(exc).split()).replace(",", ";")
    return f"error:{type(exc).__name__}:{msg}"


def sweep_record(lam: float, config: ShootingConfig | None = None) -> SweepRecord:
    """Solve at lambda and collect the functionals; errors become a status."""
    try:
        sol = solve_for_lambda(lam, config)
        e = fn.energies(sol)
        c = sol.c
        poh = fn.pohozaev_residual(sol, POHOZAEV_D).relative
        # A1 is only defined well outside the bubble; NaN otherwise
        a1 = (check_farfield_green(sol, GREEN_DELTA).a1_estimate
              if 1e3 * sol.r_lambda < GREEN_DELTA else math.nan)
        return SweepRecord(
            lam=lam, c_lambda=c, r_lambda=sol.r_lambda, dirichlet=e.dirichlet,
            mt_functional=e.mt_functional, lambda_c2=lam * c * c,
            deficit_ratio=(e.dirichlet - FOUR_PI) * c ** 4 / FOUR_PI,
            decay_rate=fitted_decay_rate(sol), pohozaev_residual=poh,
            a1_estimate=a1, nonlinear_mass=e.nonlinear_mass)
    except HyperMTError as exc:
        return SweepRecord(lam=lam, status=_clean_reason(exc))


def sweep_threads(threads: int | None = None) -> int:
    """Worker count: explicit value, else HYPERMT_THREADS (0 = auto)."""
    if threads is None:
        raw = os.environ.get("HYPERMT_THREADS", "0").strip() or "0"
        try:
            threads = int(raw)
        except ValueError:
            raise DomainError(f"HYPERMT_THREADS must be an integer, got {raw!r}")
    if threads < 0:
        raise DomainError("thread count must be >= 0")
    if threads == 0:
        threads = os.cpu_count() or 1
    return threads


def _validate_grid(grid, what="lambda grid"):
    vals = [float(v) for v in grid]
    for v in vals:
        if not (0 < v < 0.25):
            raise DomainError(f"{what} value {v!r} outside (0, 1/4)")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise DomainError(f"{what} must be strictly increasing")
    return vals


def run_sweep(lambda_grid: Sequence[float], config: ShootingConfig | None = None,
              threads: int | None = None) -> list:
    """One SweepRecord per lambda, ordered by lambda whatever the parallelism."""
    vals = _validate_grid(lambda_grid)
    if not vals:
        return []
    n = min(sweep_threads(threads), len(vals))
    if n <= 1:
        return [sweep_record(v, config) for v in vals]
    # worker threads do not inherit context variables; copy one per row
    ctx = contextvars.copy_context()
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(lambda v: ctx.copy().run(sweep_record, v, config), vals))


# ---------------------------------------------------------------- inner expansion

@dataclass(frozen=True)
class ExpansionResidual:
    """max over the window of |u~ - expansion| * c^5.

    order_tag counts the correction terms kept after c: first keeps
    -tau/c, second adds phi0/c^3, third adds beta tau/(2c^5).
    ``companions`` holds the same c^5-scaled number for the other orders.
    """
    window: tuple
    max_scaled_residual: float
    order_tag: str
    c: float = math.nan
    T: float = math.nan
    delta: float = math.nan
    argmax_tau: float = math.nan
    companions: dict = field(default_factory=dict)


def inner_window(sol: RadialSolution, delta: float = INNER_DELTA, T: float | None = None) -> tuple:
    """[0, min(c^2 - T, ln(1 + delta^2/r^2))], T defaulting to sqrt(c).

    T = sqrt(c) is o(c) and c^k exp(-T) -> 0 for every k.
    """
    c = sol.c
    T = math.sqrt(c) if T is None else float(T)
    if not (0 < delta < 1):
        raise DomainError("delta must lie in (0, 1)")
    hi = min(c * c - T, math.log1p((delta / sol.r_lambda) ** 2))
    if not hi > 0:
        raise RangeError(f"inner window is empty at c = {c:.4g} (c^2 - T = {c * c - T:.3g}); "
                         "lambda too large")
    return 0.0, hi, T


def _inner_profile(sol: RadialSolution, tau):
    r = sol.r_lambda * np.sqrt(np.expm1(tau))
    s = 2.0 * np.arctanh(r)
    u, _ = sol.evaluate(s)
    return u


def check_inner_expansion(sol: RadialSolution, delta: float = INNER_DELTA, T: float | None = None,
                          n: int = 2001) -> ExpansionResidual:
    """c^5-scaled residual of u~ against c - tau/c + phi0/c^3 + beta tau/(2c^5)."""
    lo, hi, T = inner_window(sol, delta, T)
    c = sol.c
    tau = np.linspace(lo, hi, n)
    u = _inner_profile(sol, tau)
    c5 = c ** 5
    first = (u - c + tau / c) * c5
    second = first - bp.phi0(tau) * c * c
    third = second - bp.BETA * tau / 2.0
    vals = {"first": first, "second": second, "third": third}
    mx = {k: float(np.max(np.abs(v))) for k, v in vals.items()}
    j = int(np.argmax(np.abs(third)))
    return ExpansionResidual(window=(lo, hi), max_scaled_residual=mx["third"], order_tag="third",
                             c=c, T=T, delta=delta, argmax_tau=float(tau[j]),
                             companions={"first": mx["first"], "second": mx["second"]})


# ---------------------------------------------------------------- pointwise bounds

@dataclass(frozen=True)
class BoundReport:
    passed: bool
    margin: float
    n_points: int
    at_s: float = math.nan
    name: str = ""


def _bound_points(sol: RadialSolution, r_lo: float, n: int = 2000):
    s_lo = 2.0 * math.atanh(r_lo)
    s_hi = float(sol.s_max if sol.s_max is not None else sol.grid[-1])
    g = np.asarray(sol.grid)
    dense = np.geomspace(s_lo, s_hi, n)
    pts = np.union1d(g[(g >= s_lo) & (g <= s_hi)], dense)
    return pts


def monotone_slack(sol: RadialSolution, s):
    """c - ln(1 + r^2/r_lambda^2)/c - u at geodesic radius s."""
    s = np.asarray(s, dtype=float)
    r = np.tanh(0.5 * s)
    u, _ = sol.evaluate(s)
    return sol.c - np.log1p((r / sol.r_lambda) ** 2) / sol.c - u


def check_monotone_bound(sol: RadialSolution, r0: float | None = None) -> BoundReport:
    """u <= c - ln(1 + r^2/r_lambda^2)/c on [R0 r_lambda, 1)."""
    r0 = bp.r0_root() if r0 is None else r0
    s = _bound_points(sol, r0 * sol.r_lambda)
    slack = monotone_slack(sol, s)
    k = int(np.argmin(slack))
    return BoundReport(bool(np.all(slack > 0)), float(slack[k]), int(s.size), float(s[k]), "monotone")


def density_log_margin(sol: RadialSolution, s):
    """ln(bound) - ln(r^2 f); the metric factor (2/(1-r^2))^2 cancels."""
    s = np.asarray(s, dtype=float)
    r = np.tanh(0.5 * s)
    u, _ = sol.evaluate(s)
    with np.errstate(divide="ignore"):
        lhs = math.log(sol.lam) + 2 * np.log(np.abs(u)) + u * u + 2 * np.log(r)
        rhs = math.log(4.0) - 2 * np.log(np.log1p((r / sol.r_lambda) ** 2))
    return rhs - lhs


def check_density_bound(sol: RadialSolution, r0: float | None = None) -> BoundReport:
    """r^2 lam u^2 e^{u^2} <= 4/ln^2(1 + r^2/r_lambda^2), in log space."""
    r0 = bp.r0_root() if r0 is None else r0
    s = _bound_points(sol, r0 * sol.r_lambda)
    m = density_log_margin(sol, s)
    k = int(np.argmin(m))
    return BoundReport(bool(np.all(m > 0)), float(m[k]), int(s.size), float(s[k]), "density")


# ---------------------------------------------------------------- sweep-level fits

@dataclass(frozen=True)
class DeficitSummary:
    lambdas: tuple
    ratios: tuple
    all_positive: bool
    richardson_limit: float
    richardson_quadratic: float
    last_value: float


def _usable(records, max_lambda=None):
    rows = [r for r in records if r.ok and (max_lambda is None or r.lam <= max_lambda)]
    return sorted(rows, key=lambda r: r.lam)


def _neville_at_zero(h, y):
    """Value at h = 0 of the polynomial through (h_i, y_i)."""
    h = list(h)
    p = list(y)
    n = len(h)
    for k in range(1, n):
        for i in range(n - k):
            p[i] = (h[i + k] * p[i] - h[i] * p[i + 1]) / (h[i + k] - h[i])
    return p[0]


def check_energy_deficit(records: Sequence[SweepRecord]) -> DeficitSummary:
    """deficit_ratio sequence and its extrapolation in h = 1/c^2.

    richardson_limit uses the two smallest-lambda rows (first order),
    richardson_quadratic the three smallest; last_value is emitted for
    comparison.
    """
    rows = _usable(records, 0.05)
    if len(rows) < 3:
        raise DomainError(f"energy deficit check needs >= 3 rows with lambda <= 0.05, got {len(rows)}")
    h = [1.0 / r.c_lambda ** 2 for r in rows]
    y = [r.deficit_ratio for r in rows]
    return DeficitSummary(lambdas=tuple(r.lam for r in rows), ratios=tuple(y),
                          all_positive=all(v > 0 for v in y),
                          richardson_limit=_neville_at_zero(h[:2], y[:2]),
                          richardson_quadratic=_neville_at_zero(h[:3], y[:3]),
                          last_value=y[0])


@dataclass(frozen=True)
class LambdaCFit:
    """lambda c^2 = a0 + A lambda.

    A_estimate and linearity_residual come from the pinned fit a0 = 1;
    intercept/free_slope/free_residual from the unconstrained fit.
    """
    A_estimate: float
    linearity_residual: float
    intercept: float
    free_slope: float
    free_residual: float


def check_lambda_c_relation(records: Sequence[SweepRecord]) -> LambdaCFit:
    rows = _usable(records)
    if len(rows) < 3:
        raise DomainError(f"lambda-c fit needs >= 3 rows, got {len(rows)}")
    lam = np.array([r.lam for r in rows])
    y = np.array([r.lambda_c2 for r in rows])
    A = float(np.dot(lam, y - 1.0) / np.dot(lam, lam))
    res = float(np.max(np.abs(1.0 + A * lam - y)))
    M = np.vstack([np.ones_like(lam), lam]).T
    (a0, a1), *_ = np.linalg.lstsq(M, y, rcond=None)
    fres = float(np.max(np.abs(M @ np.array([a0, a1]) - y)))
    return LambdaCFit(A, res, float(a0), float(a1), fres)


# ---------------------------------------------------------------- far field

@dataclass(frozen=True)
class GreenReport:
    delta: float
    lead_match: float       # c u(delta) + 2 ln delta
    a1_estimate: float      # c^2 * lead_match (raw estimator)


def check_farfield_green(sol: RadialSolution, delta: float) -> GreenReport:
    """c u(delta) against -2 ln delta, and the raw A1 estimate."""
    if not (1e3 * sol.r_lambda < delta < 0.9):
        raise DomainError(f"delta = {delta} must lie in (1e3 r_lambda, 0.9) = "
                          f"({1e3 * sol.r_lambda:.3g}, 0.9)")
    u, _ = sol.evaluate(2.0 * math.atanh(delta))
    lead = sol.c * u + 2.0 * math.log(delta)
    return GreenReport(delta, lead, sol.c ** 2 * lead)


# ---------------------------------------------------------------- blow-up profiles

@dataclass(frozen=True)
class ProfileDistances:
    eta: float      # sup |eta_lam - eta0|
    w: float        # sup |c^2 (eta_lam - eta0) - w0|
    z: float        # sup |c^2 (c^2 (eta_lam - eta0) - w0) - z0|
    x_max: float


def check_profile_convergence(sol: RadialSolution, x_max: float = 10.0, n: int = 400,
                              z0_grid=None) -> ProfileDistances:
    """Sup distances on |x| <= x_max in the blow-up coordinate r = r_lambda x."""
    z0_grid = z0_grid if z0_grid is not None else bp.default_z0()
    x = np.concatenate([[0.0], np.geomspace(1e-3, x_max, n)])
    u, _ = sol.evaluate(2.0 * np.arctanh(sol.r_lambda * x))
    c2 = sol.c ** 2
    d_eta = sol.c * (u - sol.c) - bp.eta0(x)
    d_w = c2 * d_eta - bp.w0(x)
    d_z = c2 * d_w - z0_grid(x)
    return ProfileDistances(float(np.max(np.abs(d_eta))), float(np.max(np.abs(d_w))),
                            float(np.max(np.abs(d_z))), x_max)


# ---------------------------------------------------------------- decay envelope

@dataclass(frozen=True)
class EnvelopeReport:
    T: float
    A_T: float
    B_T: float
    mu_minus: float
    nu_minus: float
    C1: float
    C2: float
    C1_tilde: float
    C2_tilde: float
    lower_slack: float      # min u/(C1 e^{mu- t}) - 1
    upper_slack: float      # min C2 e^{nu- t}/u - 1
    dlower_slack: float     # same for -u'
    dupper_slack: float
    fitted_rate: float
    rate_between: bool

    @property
    def passed(self) -> bool:
        return min(self.lower_slack, self.upper_slack, self.dlower_slack, self.dupper_slack) > 0


def envelope_constants(lam: float, T: float, M0: float):
    """A_T, B_T, mu^-(T), nu^-(T); domain error if 4 lam B_T >= 1."""
    if not T > 0:
        raise DomainError("T must be positive")
    A = 1.0 / math.tanh(T)
    den = math.exp(T) + math.exp(-T) - 2.0
    lnB = (4.0 * M0 / math.pi) / den
    if math.log(4.0 * lam) + lnB >= 0:
        raise DomainError(f"4 lambda B_T >= 1 at T = {T}; choose T > {min_envelope_T(lam, M0):.6g}")
    B = math.exp(lnB)
    mu = (-A - math.sqrt(A * A - 4.0 * lam)) / 2.0
    nu = (-1.0 - math.sqrt(1.0 - 4.0 * lam * B)) / 2.0
    return A, B, mu, nu


def min_envelope_T(lam: float, M0: float) -> float:
    """Smallest T with 4 lam B_T < 1 (boundary value)."""
    if not (0 < lam < 0.25):
        raise DomainError("lambda must lie in (0, 1/4)")
    return math.acosh(1.0 + (2.0 * M0 / math.pi) / math.log(1.0 / (4.0 * lam)))


def decay_envelope(sol: RadialSolution, T: float, M0: float | None = None, n: int = 4000) -> EnvelopeReport:
    """Exponential sandwiches for u and -u' on (T, s_max]."""
    lam = sol.lam
    M0 = fn.energies(sol).dirichlet if M0 is None else M0
    A, B, mu, nu = envelope_constants(lam, T, M0)
    s_hi = float(sol.s_max if sol.s_max is not None else sol.grid[-1])
    if not T < s_hi:
        raise DomainError(f"T = {T} beyond the solution range {s_hi}")
    t = np.linspace(T, s_hi, n + 1)[1:]
    u, up = sol.evaluate(t)
    uT, _ = sol.evaluate(T)
    C1 = uT * math.exp(-mu * T)
    C2 = uT * math.exp(-nu * T)
    C1t, C2t = -nu * C1, -mu * C2
    lo = C1 * np.exp(mu * t)
    hi = C2 * np.exp(nu * t)
    rate = fitted_decay_rate(sol)
    return EnvelopeReport(
        T=T, A_T=A, B_T=B, mu_minus=mu, nu_minus=nu, C1=C1, C2=C2, C1_tilde=C1t, C2_tilde=C2t,
        lower_slack=float(np.min(u / lo - 1)), upper_slack=float(np.min(hi / u - 1)),
        dlower_slack=float(np.min(-up / (C1t * np.exp(mu * t)) - 1)),
        dupper_slack=float(np.min(C2t * np.exp(nu * t) / (-up) - 1)),
        fitted_rate=rate, rate_between=bool(mu < rate < nu))


# ---------------------------------------------------------------- uniqueness

@dataclass(frozen=True)
class UniquenessReport:
    c: tuple
    lambda_star: tuple
    status: tuple
    strictly_decreasing: bool
    lambda0_estimate: float


def _injective_level(c, lam):
    """Largest L such that {i: lam_i < L} is a suffix on which lam decreases."""
    ok = [(ci, li) for ci, li in zip(c, lam) if math.isfinite(li)]
    if not ok:
        return math.nan
    vals = [li for _, li in ok]
    best = min(vals)
    for L in sorted(set(vals)) + [math.inf]:
        idx = [i for i, v in enumerate(vals) if v < L]
        if not idx:
            continue
        suffix = idx == list(range(len(vals) - len(idx), len(vals)))
        dec = all(vals[i] > vals[i + 1] for i in idx[:-1])
        if suffix and dec:
            best = L
        else:
            break
    return best


def uniqueness_scan(c_grid: Sequence[float], config: ShootingConfig | None = None) -> UniquenessReport:
    """lambda*(c) over an ascending c grid and the injectivity level."""
    cs = [float(v) for v in c_grid]
    if len(set(cs)) != len(cs):
        raise DomainError("duplicate c values in uniqueness scan")
    if any(b <= a for a, b in zip(cs, cs[1:])):
        raise DomainError("c grid must be sorted ascending")
    if any(v < 1 for v in cs):
        raise DomainError("uniqueness scan needs c >= 1")
    lam, status = [], []
    for c in cs:
        try:
            lam.append(shoot_lambda(c, config)[0])
            status.append("ok")
        except HyperMTError as exc:
            lam.append(math.nan)
            status.append(_clean_reason(exc))
    fin = [v for v in lam if math.isfinite(v)]
    dec = len(fin) == len(lam) and all(a > b for a, b in zip(lam, lam[1:]))
    return UniquenessReport(tuple(cs), tuple(lam), tuple(status), dec, _injective_level(cs, lam))


# ---------------------------------------------------------------- verification driver

@dataclass(frozen=True)
class Check:
    name: str
    computed: object
    target: object
    tolerance: object
    passed: bool
    note: str


@dataclass
class VerificationReport:
    checks: list
    metadata: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list:
        return [c.name for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {"checks": [asdict(c) for c in self.checks], "metadata": self.metadata,
                "summary": {"total": len(self.checks), "failed": len(self.failures),
                            "passed": self.passed}}

    def to_json(self) -> str:
        return dumps(self.as_dict())


SUITES = ("profiles", "solver", "asymptotics", "all")


class _Collector:
    def __init__(self):
        self.checks = []

    def add(self, name, computed, target, tolerance, passed, note):
        self.checks.append(Check(name, computed, target, tolerance, bool(passed), note))

    def close(self, name, computed, target, tol, note, relative=False):
        try:
            computed = float(computed)
        except (TypeError, ValueError):
            self.add(name, None, target, tol, False, note)
            return
        err = abs(computed - target)
        if relative:
            err /= abs(target)
        self.add(name, computed, target, tol, math.isfinite(err) and err <= tol, note)

    def guard(self, name, note, fn_):
        """Run fn_; an exception becomes a failed check instead of aborting."""
        try:
            fn_()
        except (HyperMTError, ArithmeticError, ValueError) as exc:
            self.add(name, None, None, None, False, f"{note}; raised {type(exc).__name__}: {exc}")


def _profile_checks(col: _Collector):
    beta = bp.BETA
    z0g = bp.default_z0()
    col.guard("beta_farfield_slope", "closed form beta = -6 - pi^2/3; OLS on z0 over (1e4, 1e8)",
              lambda: col.close("beta_farfield_slope", bp.farfield_slope(z0g).slope, beta, 1e-3,
                                "closed form beta = -6 - pi^2/3; OLS on z0 over (1e4, 1e8)"))
    col.guard("beta_quadrature", "closed form beta; weighted quadrature of the z0 source",
              lambda: col.close("beta_quadrature", bp.beta_from_source(), beta, 1e-7,
                                "closed form beta; weighted quadrature of the z0 source"))
    table = {}

    def tab():
        table.update(bp.integral_table())
        for name, (num, closed) in table.items():
            col.close(f"integral[{name}]", num, closed, 1e-8,
                      "closed-form value of the weighted integral", relative=True)
        col.close("beta_table", bp.beta_from_table(table), beta, 1e-7,
                  "closed form beta; source coefficients times the six integrals")

    col.guard("integral_table", "closed-form weighted integrals", tab)
    rk = np.linspace(0.0, 50.0, 2001)
    col.close("kernel_residual", float(np.max(np.abs(bp.kernel_residual(rk)))), 0.0, 1e-10,
              "exact kernel of the linearized bubble operator")
    rl = np.logspace(-3, 3, 601)
    col.close("eta0_residual", float(np.max(np.abs(bp.eta0_residual(rl)))), 0.0, 1e-10,
              "Liouville equation for the standard bubble")
    col.close("bubble_mass", bp.bubble_mass(), FOUR_PI, 1e-10, "quantized bubble mass 4 pi")
    col.close("w0_at_0", float(bp.w0(0.0)), 0.0, 0.0, "normalization at the origin")
    col.close("w0_prime_at_0", float(bp.w0_prime(0.0)), 0.0, 0.0, "normalization at the origin")
    col.close("w0_mass", -2 * math.pi * 1e4 * float(bp.w0_prime(1e4)), FOUR_PI, 1e-3,
              "total mass 4 pi of -Lap w0 via the flux at r = 1e4", relative=True)
    ln2 = math.log(2.0)
    col.close("w0_at_1", float(bp.w0(1.0)), 1 - ln2 - ln2 * ln2 / 2, 1e-12,
              "closed-form value w0(1) = 1 - ln 2 - (ln 2)^2/2")
    rr = np.logspace(-2, 3, 201)
    col.close("w0_ode_vs_closed_form", float(np.max(np.abs(z0g.w0_ode(rr) - bp.w0(rr)))), 0.0, 1e-8,
              "independent route: w0 integrated from its ODE")
    rf = np.logspace(4, 6, 21)
    col.close("w0_minus_eta0_limit", float(np.max(bp.w0(rf) - bp.eta0(rf))), 2 + math.pi ** 2 / 6, 1e-6,
              "derived large-r limit 2 + pi^2/6 of w0 - eta0")


def _solver_checks(col: _Collector, config: ShootingConfig, lam: float = 0.05):
    def body():
        sol = solve_for_lambda(lam, config)
        e = fn.energies(sol)
        col.close("energy_identity", e.nonlinear_mass, e.dirichlet, 1e-6,
                  "weak form: Dirichlet energy equals lam int u^2 e^{u^2}", relative=True)
        for d in (0.5 * sol.r_lambda, POHOZAEV_D, 0.5):
            rep = fn.pohozaev_residual(sol, d)
            col.close(f"pohozaev[d={d:.6g}]", rep.relative, 0.0, 1e-6, "Pohozaev identity on |x| < d")
        nu, _ = decay_rates(lam)
        col.close("decay_rate", fitted_decay_rate(sol), -nu, 1e-3,
                  "fast decay rate -(1 + sqrt(1 - 4 lam))/2")
        env = decay_envelope(sol, 8.0, M0=e.dirichlet)
        col.add("decay_sandwich[T=8]", min(env.lower_slack, env.upper_slack, env.dlower_slack,
                                            env.dupper_slack), 0.0, "> 0", env.passed,
                "exponential sandwiches with the explicit A_T, B_T constants")
        col.add("decay_rate_between_envelopes", env.fitted_rate, [env.mu_minus, env.nu_minus], "open interval",
                env.rate_between, "fitted rate inside (mu^-(T), nu^-(T))")
        mono = check_monotone_bound(sol)
        col.add("monotone_bound", mono.margin, 0.0, "> 0", mono.passed,
                "u <= c - ln(1 + r^2/r_lam^2)/c on [R0 r_lam, 1)")
        dens = check_density_bound(sol)
        col.add("density_bound", dens.margin, 0.0, "> 0", dens.passed,
                "r^2 f <= 4/ln^2(1 + r^2/r_lam^2) (log margin)")
        up = np.asarray(sol.u_prime[1:])
        col.add("strictly_decreasing", float(np.max(up)), 0.0, "< 0", bool(np.all(up < 0)),
                "u' < 0 for s > 0 on admissible solutions")

    col.guard("solver_suite", f"admissible solution at lambda = {lam}", body)

    def nonexist():
        try:
            decay_rates(0.25)
            col.add("degeneracy_at_quarter", "no error", "DegeneracyError", None, False,
                    "both decay rates equal 1/2 at lambda = 1/4")
        except DegeneracyError:
            col.add("degeneracy_at_quarter", "DegeneracyError", "DegeneracyError", None, True,
                    "both decay rates equal 1/2 at lambda = 1/4")
        for c in (2.0, 4.0):
            ls = shoot_lambda(c, config)[0]
            col.add(f"lambda_star_below_quarter[c={c:g}]", ls, 0.25, "< 0.25", ls < 0.25,
                    "no positive solution at lambda = 1/4")

    col.guard("nonexistence_echo", "shooting below 1/4", nonexist)


def _asymptotic_checks(col: _Collector, config: ShootingConfig, grid=DEFAULT_SWEEP, threads=None):
    records = run_sweep(grid, config, threads)
    by = {r.lam: r for r in records}
    for r in records:
        if not r.ok:
            col.add(f"sweep_row[{r.lam:g}]", None, None, None, False, r.status)
    quant = [by[v] for v in (0.1, 0.05, 0.02, 0.01) if v in by and by[v].ok]
    if len(quant) == 4:
        d = [r.dirichlet for r in quant]
        col.add("dirichlet_decreasing", d, None, "strict", all(a > b for a, b in zip(d, d[1:])),
                "energy quantization: decreasing toward 4 pi")
        col.add("dirichlet_above_4pi", min(d), FOUR_PI, "> 4 pi", all(v > FOUR_PI for v in d),
                "energy lower bound 4 pi + 4 pi/c^4")
        col.close("dirichlet_near_4pi", d[-1], FOUR_PI, 0.05, "quantization at lambda = 0.01", relative=True)
        col.add("nonlinear_mass_tracks", max(abs(r.nonlinear_mass / r.dirichlet - 1) for r in quant), 0.0,
                1e-6, all(abs(r.nonlinear_mass / r.dirichlet - 1) <= 1e-6 for r in quant),
                "weak form along the sweep")
        x = [abs(r.lambda_c2 - 1) for r in quant]
        ok = all(x[i + 1] <= x[i] * quant[i + 1].lam / quant[i].lam for i in range(3))
        col.add("lambda_c2_approach", [r.lambda_c2 for r in quant], 1.0, "ratio-rate", ok,
                "lim lambda c^2 = 1 at rate O(lambda)")
    good = _usable(records)
    if len(good) >= 3:
        fit = check_lambda_c_relation(good)
        col.close("lambda_c2_intercept", fit.intercept, 1.0, 1e-2, "lim lambda c^2 = 1 (linear fit)")
    try:
        sub = [by[v] for v in (0.005, 0.01, 0.02) if v in by]
        ds = check_energy_deficit(sub)
        col.add("deficit_positive", list(ds.ratios), 0.0, "> 0", ds.all_positive, "deficit above 4 pi")
        col.close("deficit_limit", ds.richardson_limit, 1.0, 0.2,
                  "deficit ratio (E - 4pi) c^4/(4pi) -> 1; Richardson in 1/c^2")
    except DomainError as exc:
        col.add("deficit_limit", None, 1.0, 0.2, False, f"insufficient rows: {exc}")
    for r in good:
        nu, _ = decay_rates(r.lam)
        col.close(f"decay_rate[{r.lam:g}]", r.decay_rate, -nu, 1e-3, "fast decay rate")
        col.close(f"pohozaev[{r.lam:g}]", r.pohozaev_residual, 0.0, 1e-6, "Pohozaev identity at d = 0.1")

    def inner():
        res = {}
        for v in (0.02, 0.01):
            res[v] = check_inner_expansion(solve_for_lambda(v, config))
        a, b = res[0.02].max_scaled_residual, res[0.01].max_scaled_residual
        col.add("inner_expansion_stable", [a, b], "ratio <= 2", 2.0, max(a, b) <= 2 * min(a, b),
                "E0 c^-5 bound: scaled residual stable across lambda")
        abl = res[0.01].companions["second"] / b
        col.add("inner_expansion_ablation", abl, "> 3", 3.0, abl > 3, "dropping beta tau/(2c^5) inflates the residual")
        for v in (0.02, 0.01):
            sol = solve_for_lambda(v, config)
            for chk in (check_monotone_bound(sol), check_density_bound(sol)):
                col.add(f"{chk.name}_bound[{v:g}]", chk.margin, 0.0, "> 0", chk.passed, "pointwise bound")

    col.guard("inner_expansion", "inner expansion", inner)
    return records


def _config_hash(config: ShootingConfig, suite: str, offset: float) -> str:
    payload = json.dumps({"config": asdict(config), "suite": suite, "w0_offset": offset},
                         sort_keys=True, default=repr)
    return hashlib.sha256(payload.encode()).hexdigest()


def _timestamp() -> Optional[int]:
    raw = os.environ.get("SOURCE_DATE_EPOCH")
    return int(raw) if raw and raw.strip().isdigit() else None


def full_verify(config: ShootingConfig | None = None, suite: str = "all",
                inject_w0_offset: float = 0.0, threads: int | None = None) -> VerificationReport:
    """Run the selected suite; failed checks never abort the report."""
    if suite not in SUITES:
        raise DomainError(f"unknown suite {suite!r}; expected one of {', '.join(SUITES)}")
    config = config or ShootingConfig()
    col = _Collector()
    with bp.w0_offset(inject_w0_offset):
        if suite in ("profiles", "all"):
            _profile_checks(col)
        if suite in ("solver", "all"):
            _solver_checks(col, config)
        if suite in ("asymptotics", "all"):
            _asymptotic_checks(col, config, threads=threads)
    meta = {
        "config_hash": _config_hash(config, suite, inject_w0_offset),
        "suite": suite,
        "grid_sizes": {"sweep_lambdas": len(DEFAULT_SWEEP), "z0_samples": int(bp.default_z0().radii.size),
                       "inner_tau_samples": 2001},
        "timestamp": _timestamp(),
        "w0_offset": inject_w0_offset,
    }
    return VerificationReport(col.checks, meta)
