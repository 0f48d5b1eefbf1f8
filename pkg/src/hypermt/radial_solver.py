"""Shooting for radial solutions of -Lap_B u = lam u exp(u^2) on the disk.

In the geodesic coordinate s the equation reads

    u'' + coth(s) u' + lam u exp(u^2) = 0,   u(0) = c, u'(0) = 0.

It is integrated in x = ln s with state (u, q), q = sinh(s) u', so the
bubble at s ~ 2 r_lam and the exponential tail are both resolved with a
handful of steps.  Admissible solutions decay like A exp(-nu s) with
nu = (1 + sqrt(1 - 4 lam))/2; every other positive trajectory decays at
the slow rate mu = 1 - nu or crosses zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .errors import AmbiguityError, BracketError, DegeneracyError, DomainError, NumericalError, QualityError

C2_LIMIT = 700.0      # exp(c^2) overflows a double beyond ~709
TAIL_WINDOW = 5.0


def decay_rates(lam: float) -> tuple[float, float]:
    """(nu, mu): fast and slow exponential rates of the linearised tail."""
    if lam >= 0.25:
        raise DegeneracyError(f"lambda = {lam} >= 1/4: no pair of distinct real decay rates")
    d = math.sqrt(1.0 - 4.0 * lam)
    return 0.5 * (1.0 + d), 0.5 * (1.0 - d)


def blowup_scale(lam: float, c: float) -> float:
    """r_lam = (lam c^2 e^{c^2})^{-1/2}."""
    return math.exp(-0.5 * (math.log(lam) + 2.0 * math.log(c) + c * c))


def _log_s_sinh(x: float) -> float:
    # ln(s sinh s) with s = e^x, safe for tiny and large s
    s = math.exp(x)
    if s < 1e-4:
        return 2.0 * x + s * s / 6.0
    if s > 20.0:
        return x + s - math.log(2.0) + math.log1p(-math.exp(-2.0 * s))
    return x + math.log(math.sinh(s))


def _s_over_sinh(s: float) -> float:
    if s < 1e-4:
        return 1.0 - s * s / 6.0
    if s > 700:
        return 0.0
    return s / math.sinh(s)


@dataclass(frozen=True)
class ShootingConfig:
    s_max: float = 80.0
    ivp_tol: float = 1e-11
    bisect_tol: float = 1e-12
    classify_at: Optional[float] = None
    series_start: float = 1e-4

    def __post_init__(self):
        if self.classify_at is None:
            object.__setattr__(self, "classify_at", 0.8 * self.s_max)
        for name in ("s_max", "ivp_tol", "bisect_tol", "classify_at", "series_start"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
                raise DomainError(f"ShootingConfig.{name} must be positive, got {v!r}")
        if not self.classify_at < self.s_max:
            raise DomainError("classify_at must be smaller than s_max")

    def key(self) -> str:
        return (f"s_max={self.s_max!r};ivp_tol={self.ivp_tol!r};bisect_tol={self.bisect_tol!r};"
                f"classify_at={self.classify_at!r};series_start={self.series_start!r}")


# ---------------------------------------------------------------- outcomes

@dataclass(frozen=True)
class CrossedZero:
    s_cross: float
    tag: str = "CrossedZero"


@dataclass(frozen=True)
class SlowDecay:
    rate_estimate: float
    tag: str = "SlowDecay"


@dataclass(frozen=True)
class FastDecay:
    rate_estimate: float
    tail_amplitude: Optional[float] = None
    tag: str = "FastDecay"


ShotOutcome = CrossedZero | SlowDecay | FastDecay


# ---------------------------------------------------------------- solutions

@dataclass(frozen=True, eq=False)
class RadialSolution:
    """A radial profile u(s) with derivative, sampled on a geodesic grid.

    ``evaluator`` maps s (array) to (u, u'); for shooting results it
    combines the start series, the integrator's dense output and, past
    ``s_join``, the fitted tail A exp(-nu s).  ``breakpoints`` are the
    integrator's step boundaries, used by the composite quadratures.
    """
    lam: float
    c: float
    grid: np.ndarray
    u: np.ndarray
    u_prime: np.ndarray
    tail_amplitude: Optional[float] = None
    r_lambda: float = float("nan")
    evaluator: Optional[Callable] = field(default=None, repr=False)
    breakpoints: Optional[np.ndarray] = field(default=None, repr=False)
    s_join: Optional[float] = None
    s_max: Optional[float] = None
    outcome: Optional[object] = None
    admissible: bool = False

    def __post_init__(self):
        for name in ("grid", "u", "u_prime"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if np.any(np.diff(self.grid) <= 0):
            raise DomainError("solution grid must be strictly increasing")
        if self.evaluator is None:
            sp = CubicHermiteSpline(self.grid, self.u, self.u_prime)
            object.__setattr__(self, "evaluator", lambda s: (sp(s), sp(s, 1)))

    @classmethod
    def from_arrays(cls, lam, c, s, u, u_prime, **kw) -> "RadialSolution":
        return cls(lam=lam, c=c, grid=s, u=u, u_prime=u_prime, **kw)

    @property
    def nu(self) -> float:
        return decay_rates(self.lam)[0]

    def evaluate(self, s):
        s = np.asarray(s, dtype=float)
        u, up = self.evaluator(s)
        u = np.asarray(u, dtype=float).reshape(s.shape)
        up = np.asarray(up, dtype=float).reshape(s.shape)
        if s.ndim == 0:
            return float(u), float(up)
        return u, up

    def perturbed(self, du: Callable, du_prime: Callable) -> "RadialSolution":
        """Return u + du with derivative u' + du' (for power checks)."""
        base = self.evaluator

        def ev(s):
            u, up = base(s)
            return u + du(s), up + du_prime(s)

        return replace(self, u=self.u + du(self.grid), u_prime=self.u_prime + du_prime(self.grid),
                       evaluator=ev, admissible=False, tail_amplitude=self.tail_amplitude)

    def scaled(self, factor: float) -> "RadialSolution":
        base = self.evaluator

        def ev(s):
            u, up = base(s)
            return factor * u, factor * up

        return replace(self, u=factor * self.u, u_prime=factor * self.u_prime, evaluator=ev,
                       c=factor * self.c, admissible=False)

    def log_slope(self, s):
        u, up = self.evaluate(s)
        return up / u


# ---------------------------------------------------------------- integration

class _Trajectory:
    """Raw shooting run; keeps the dense output for later assembly."""

    def __init__(self, lam, c, s0, series, dense, x_steps, crossed, s_end):
        self.lam = lam
        self.c = c
        self.s0 = s0
        self.series = series
        self.dense = dense
        self.x_steps = x_steps
        self.crossed = crossed
        self.s_end = s_end

    def evaluate(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if self.dense is None:
            # lambda = 0: u stays at its peak value
            return np.full_like(s, self.c), np.zeros_like(s)
        u = np.empty_like(s)
        up = np.empty_like(s)
        lo = s <= self.s0
        if np.any(lo):
            # series in xi = s/s0, coefficients A2 = a2 s0^2, A4 = a4 s0^4
            A2, A4 = self.series
            xi = s[lo] / self.s0
            u[lo] = self.c + A2 * xi ** 2 + A4 * xi ** 4
            up[lo] = (2 * A2 * xi + 4 * A4 * xi ** 3) / self.s0
        hi = ~lo
        if np.any(hi):
            sh = s[hi]
            y = self.dense(np.log(sh))
            u[hi] = y[0]
            up[hi] = y[1] * np.array([_s_over_sinh(v) for v in sh]) / sh
        return u, up


def _series_start(lam, c, series_start):
    """Start point and the s^2, s^4 coefficients, computed in log space."""
    c2 = c * c
    lnlam = math.log(lam)
    rl = blowup_scale(lam, c)
    s0 = series_start * min(1.0, 2.0 * rl)
    ln_s0 = math.log(s0)
    A2 = -math.exp(lnlam + math.log(c) + c2 + 2 * ln_s0) / 4.0       # a2 s0^2
    G1 = math.exp(lnlam + c2 + 2 * ln_s0) * (1.0 + 2.0 * c2)          # g'(c) s0^2
    A4 = -A2 * (2.0 / 3.0 * s0 * s0 + G1) / 16.0                       # a4 s0^4
    return s0, (A2, A4), (c + A2 + A4, (2 * A2 + 4 * A4) / s0)


def _check_c(c):
    if not (c > 0 and math.isfinite(c)):
        raise DomainError(f"peak height c must be positive, got {c!r}")
    if c * c > C2_LIMIT:
        raise DomainError(f"c^2 = {c * c:.1f} exceeds {C2_LIMIT:.0f}: exp(c^2) overflows double "
                          "precision; a log-space formulation is required")


def _integrate(lam: float, c: float, config: ShootingConfig, s_end: float | None = None,
               fixed_step: float | None = None) -> _Trajectory:
    _check_c(c)
    if lam < 0 or not math.isfinite(lam):
        raise DomainError(f"lambda must be >= 0, got {lam!r}")
    s_end = config.s_max if s_end is None else s_end
    if lam == 0.0:
        return _Trajectory(lam, c, 0.0, (0.0, 0.0), None, np.array([]), None, s_end)
    lnlam = math.log(lam)
    s0, series, (u0, up0) = _series_start(lam, c, config.series_start)
    sh0 = math.sinh(s0)

    def rhs(x, y):
        s = math.exp(x)
        u, q = y
        e = u * u
        # ln-scaled source keeps exp(u^2) in range
        src = math.exp(_log_s_sinh(x) + lnlam + e) * u
        return [q * _s_over_sinh(s), -src]

    def crossing(x, y):
        return y[0]

    crossing.terminal = True
    crossing.direction = -1
    opts = dict(method="DOP853", events=crossing, dense_output=True)
    if fixed_step is None:
        opts.update(rtol=config.ivp_tol, atol=1e-300)
    else:
        # huge tolerances accept every step, so the step length is exactly h
        opts.update(rtol=1e3, atol=1e3, first_step=fixed_step, max_step=fixed_step)
    sol = solve_ivp(rhs, (math.log(s0), math.log(s_end)), [u0, sh0 * up0], **opts)
    if sol.status == -1:
        raise NumericalError(f"integration failed at lambda={lam}, c={c}: {sol.message}")
    crossed = float(math.exp(sol.t_events[0][0])) if sol.t_events[0].size else None
    return _Trajectory(lam, c, s0, series, sol.sol, sol.t, crossed, math.exp(sol.t[-1]))


def _trajectory_solution(tr: _Trajectory, outcome, admissible=False) -> RadialSolution:
    if tr.dense is None:
        grid = np.linspace(0.0, tr.s_end, 65)
    else:
        sx = np.exp(tr.x_steps)
        grid = np.concatenate([[0.0], sx])
    u, up = tr.evaluate(grid)
    u[0], up[0] = tr.c, 0.0
    rl = blowup_scale(tr.lam, tr.c) if tr.lam > 0 else float("inf")
    bps = None if tr.dense is None else np.concatenate([[0.0], np.exp(tr.x_steps)])
    return RadialSolution(lam=tr.lam, c=tr.c, grid=grid, u=u, u_prime=up, r_lambda=rl,
                          evaluator=lambda s: tr.evaluate(s), breakpoints=bps,
                          s_max=tr.s_end, outcome=outcome, admissible=admissible)


def classify_decay(sol: RadialSolution, lam: float, window: tuple) -> ShotOutcome:
    """Fast or slow decay from the mean of u'/u over the window."""
    decay_rates(lam)      # raises at lam >= 1/4
    s = np.linspace(float(window[0]), float(window[1]), 201)
    u, up = sol.evaluate(s)
    if np.any(u <= 0):
        raise DomainError("classify_decay needs u > 0 on the window")
    m = float(np.mean(up / u))
    if m < -0.5:
        return FastDecay(m)
    return SlowDecay(m)


def _classify_trajectory(tr: _Trajectory, config: ShootingConfig):
    """Outcome plus the side used by the bisections (+1: below, -1: above)."""
    if tr.crossed is not None:
        return CrossedZero(tr.crossed), -1
    sol = _trajectory_solution(tr, None)
    out = classify_decay(sol, tr.lam, (config.classify_at, config.s_max))
    # u' + nu u removes the fast mode, its sign is the slow-mode sign
    nu, _ = decay_rates(tr.lam)
    u, up = tr.evaluate(config.s_max)
    side = 1 if up[0] + nu * u[0] > 0 else -1
    return out, side


def integrate_ivp(lam: float, c: float, config: ShootingConfig | None = None):
    """Integrate one trajectory to s_max (or its first zero)."""
    config = config or ShootingConfig()
    tr = _integrate(lam, c, config)
    if lam == 0.0:
        out = SlowDecay(0.0)
    elif tr.crossed is not None:
        out = CrossedZero(tr.crossed)
    else:
        out, _ = _classify_trajectory(tr, config)
    return _trajectory_solution(tr, out), out


# ---------------------------------------------------------------- admissible assembly

def _assemble(lo: _Trajectory, hi: _Trajectory, config: ShootingConfig) -> RadialSolution:
    """Admissible solution from the two sides of a converged bracket.

    Far out the equation is linear, so the combination
    theta u_lo + (1 - theta) u_hi that cancels the slow mode at a far
    point s_f is the trajectory of an intermediate peak height.  It is
    kept up to s_join, where its slow-mode content is smallest, and
    continued by A exp(-nu s) afterwards.
    """
    lam, c = lo.lam, lo.c
    nu, mu = decay_rates(lam)
    s_stop = config.s_max if hi.crossed is None else hi.crossed
    s = np.arange(3.0, 0.98 * s_stop, 0.125)
    if s.size < 16:
        raise NumericalError(f"bracket trajectory crosses zero too early (s = {s_stop:.3g})")
    ul, upl = lo.evaluate(s)
    uh, uph = hi.evaluate(s)
    spread = np.abs(ul - uh) / np.abs(ul)
    ok = (ul > 0) & (uh > 0) & (spread < 0.1)
    kf = int(np.where(ok)[0][-1]) if np.any(ok) else 0
    g_lo = upl[kf] + nu * ul[kf]
    g_hi = uph[kf] + nu * uh[kf]
    theta = g_hi / (g_hi - g_lo) if g_lo * g_hi < 0 else 1.0

    def mix(s):
        a, ap = lo.evaluate(s)
        if theta == 1.0:
            return a, ap
        b, bp = hi.evaluate(s)
        return theta * a + (1 - theta) * b, theta * ap + (1 - theta) * bp

    u, up = mix(s[: kf + 1])
    kappa = np.abs(up + nu * u) / ((nu - mu) * np.abs(u))
    j = int(np.argmin(kappa))
    s_join = float(s[j])
    if s_join - TAIL_WINDOW < 1.0:
        raise NumericalError(f"fast-decay region too short (s_join = {s_join:.3g})")
    A = float(_fit_amplitude(mix, nu, (s_join - TAIL_WINDOW, s_join)))
    c_mix = float(theta * lo.c + (1 - theta) * hi.c)

    def ev(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        u = np.empty_like(s)
        up = np.empty_like(s)
        m = s <= s_join
        if np.any(m):
            u[m], up[m] = mix(s[m])
        if np.any(~m):
            t = A * np.exp(-nu * s[~m])
            u[~m] = t
            up[~m] = -nu * t
        return u, up

    steps = np.exp(lo.x_steps)
    steps = steps[steps < s_join]
    tail = np.linspace(s_join, config.s_max, int(math.ceil(config.s_max - s_join)) + 2)[1:]
    grid = np.concatenate([[0.0], steps, [s_join], tail])
    uu, uup = ev(grid)
    uu[0], uup[0] = c_mix, 0.0
    out = FastDecay(-nu, A)
    return RadialSolution(lam=lam, c=c_mix, grid=grid, u=uu, u_prime=uup, tail_amplitude=A,
                          r_lambda=blowup_scale(lam, c_mix), evaluator=ev,
                          breakpoints=np.concatenate([[0.0], steps, [s_join]]),
                          s_join=s_join, s_max=config.s_max, outcome=out, admissible=True)


def _fit_amplitude(evaluate, nu, window, n=101):
    s = np.linspace(window[0], window[1], n)
    u, _ = evaluate(s)
    if np.any(u <= 0):
        raise DomainError("tail window contains nonpositive u")
    y = np.log(u) + nu * s
    lnA = float(np.mean(y))
    res = float(np.max(np.abs(y - lnA)))
    if res > 1e-3:
        raise QualityError(f"tail fit residual {res:.3g} above 1e-3", achieved=res)
    return math.exp(lnA)


def tail_amplitude(sol: RadialSolution, lam: float, window: tuple | None = None) -> float:
    """A in u ~ A exp(-nu s), least squares in ln u with fixed slope -nu."""
    nu, _ = decay_rates(lam)
    if window is None:
        end = sol.s_join if sol.s_join is not None else float(sol.grid[-1])
        window = (end - TAIL_WINDOW, end)
    return _fit_amplitude(sol.evaluate, nu, window)


def fitted_decay_rate(sol: RadialSolution, window: tuple | None = None) -> float:
    """Slope of ln u over the clean fast-decay window."""
    if window is None:
        end = sol.s_join if sol.s_join is not None else float(sol.grid[-1])
        window = (end - TAIL_WINDOW, end)
    s = np.linspace(window[0], window[1], 101)
    u, _ = sol.evaluate(s)
    return float(np.polyfit(s, np.log(u), 1)[0])


# ---------------------------------------------------------------- bisection

def _bisect(side_of, lo, hi, tol, max_iter=200):
    """Bisection keeping side(lo) = +1 and side(hi) = -1."""
    rlo, rhi = side_of(lo), side_of(hi)
    for _ in range(max_iter):
        if hi - lo <= tol * max(1.0, abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        r = side_of(mid)
        if r[1] > 0:
            lo, rlo = mid, r
        else:
            hi, rhi = mid, r
    return lo, hi, rlo, rhi


def _prescan(side_of, points, what):
    sides = [side_of(p)[1] for p in points]
    switches = [i for i in range(len(points) - 1) if sides[i] != sides[i + 1]]
    if len(switches) == 0:
        raise BracketError(f"no sign change of the shooting outcome on [{points[0]:.6g}, {points[-1]:.6g}] in {what}",
                           lo_outcome=side_of(points[0])[0], hi_outcome=side_of(points[-1])[0])
    if len(switches) > 1 or sides[0] < 0:
        roots = [0.5 * (points[i] + points[i + 1]) for i in switches]
        raise AmbiguityError(f"shooting map not monotone in {what}; sign changes near {roots}", roots=roots)
    i = switches[0]
    return points[i], points[i + 1]


class _Shots:
    """Memoised trajectories for one bisection (determinism and speed)."""

    def __init__(self, make, config):
        self.make = make
        self.config = config
        self.cache = {}

    def __call__(self, p):
        if p not in self.cache:
            tr = self.make(p)
            out, side = _classify_trajectory(tr, self.config)
            self.cache[p] = (out, side, tr)
        return self.cache[p]


def shoot_lambda(c: float, config: ShootingConfig | None = None):
    """Bisect on lambda for the admissible solution with peak height c."""
    config = config or ShootingConfig()
    _check_c(c)
    shots = _Shots(lambda lam: _integrate(lam, c, config), config)
    eps = 1e-9
    pts = list(np.geomspace(eps, 0.25 - eps, 9))
    a, b = _prescan(shots, pts, f"lambda at c={c}")
    lo, hi, rlo, rhi = _bisect(shots, a, b, config.bisect_tol)
    sol = _assemble(rlo[2], rhi[2], config)
    return float(lo), sol


def solve_for_lambda(lam: float, config: ShootingConfig | None = None) -> RadialSolution:
    """Admissible solution at fixed lambda, by bisection on the peak height.

    At fixed lambda the outcome changes from slow decay to crossing as c
    grows, so bisecting on c directly finds the c with lambda*(c) = lambda.
    """
    config = config or ShootingConfig()
    if not (0 < lam < 0.25):
        raise DomainError(f"lambda must lie in (0, 1/4), got {lam!r}")
    shots = _Shots(lambda c: _integrate(lam, c, config), config)
    c_cap = math.sqrt(C2_LIMIT)
    c0 = min(lam ** -0.5, 0.9 * c_cap)
    hi = c0
    while shots(hi)[1] > 0:
        hi *= 1.5
        if hi > c_cap:
            raise BracketError(f"no crossing trajectory below c^2 = {C2_LIMIT} at lambda={lam}",
                               lo_outcome=shots(c0)[0])
    lo = c0
    while shots(lo)[1] < 0:
        lo /= 1.5
        if lo < 1e-3:
            raise BracketError(f"no slow-decay trajectory above c = 1e-3 at lambda={lam}",
                               hi_outcome=shots(hi)[0])
    a, b = _prescan(shots, list(np.linspace(lo, hi, 9)), f"c at lambda={lam}")
    lo, hi, rlo, rhi = _bisect(shots, a, b, config.bisect_tol)
    return _assemble(rlo[2], rhi[2], config)


def peak_height_for(lam: float, config: ShootingConfig | None = None) -> float:
    return solve_for_lambda(lam, config).c
