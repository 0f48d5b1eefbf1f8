"""Poincare disk primitives: distances, Mobius maps and metric weights.

Points are plain ``(x1, x2)`` pairs or arrays with a trailing axis of
length 2.  Radii may be scalars or arrays; scalars come back as floats.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# points closer than this to the unit circle are refused
BOUNDARY_MARGIN = 1e-12


@dataclass(frozen=True)
class DiskPoint:
    x1: float
    x2: float

    def __post_init__(self):
        _check_points(np.array([self.x1, self.x2], dtype=float))

    @property
    def coords(self) -> np.ndarray:
        return np.array([self.x1, self.x2])

    def norm(self) -> float:
        return float(np.hypot(self.x1, self.x2))


def _scalar_or_array(x, like):
    return float(x) if np.ndim(like) == 0 else x


def _check_radius(r) -> np.ndarray:
    a = np.asarray(r, dtype=float)
    if np.any(np.isnan(a)):
        raise DomainError("radius is NaN")
    if np.any(a < 0) or np.any(a >= 1.0 - BOUNDARY_MARGIN):
        raise DomainError(f"Euclidean radius must lie in [0, 1), got {r!r}")
    return a


def _check_points(p) -> np.ndarray:
    if isinstance(p, DiskPoint):
        p = p.coords
    a = np.asarray(p, dtype=float)
    if a.shape[-1:] != (2,):
        raise DomainError(f"disk points need a trailing axis of length 2, got shape {a.shape}")
    if np.any(np.isnan(a)):
        raise DomainError("point has NaN coordinates")
    if np.any(np.sum(a * a, axis=-1) >= 1.0 - BOUNDARY_MARGIN):
        raise DomainError("point is not inside the open unit disk")
    return a


def geodesic_radius(r):
    """Hyperbolic distance from the origin, ln((1+r)/(1-r))."""
    a = _check_radius(r)
    return _scalar_or_array(2.0 * np.arctanh(a), r)


def euclidean_radius(s):
    """Inverse of ``geodesic_radius``: r = tanh(s/2)."""
    a = np.asarray(s, dtype=float)
    if np.any(np.isnan(a)) or np.any(a < 0):
        raise DomainError(f"geodesic coordinate must be >= 0, got {s!r}")
    return _scalar_or_array(np.tanh(0.5 * a), s)


def mobius(a, x) -> np.ndarray:
    """T_a(x) = (|x-a|^2 a - (1-|a|^2)(x-a)) / (1 - 2 x.a + |x|^2 |a|^2).

    T_a swaps a and 0 and is its own inverse.
    """
    a = _check_points(a)
    x = _check_points(x)
    d = x - a
    aa = np.sum(a * a, axis=-1, keepdims=True)
    xx = np.sum(x * x, axis=-1, keepdims=True)
    dd = np.sum(d * d, axis=-1, keepdims=True)
    xa = np.sum(x * a, axis=-1, keepdims=True)
    return (dd * a - (1.0 - aa) * d) / (1.0 - 2.0 * xa + xx * aa)


def hyperbolic_distance(x, y):
    """rho(x, y) = rho(T_y(x)); symmetric and Mobius invariant."""
    x = _check_points(x)
    y = _check_points(y)
    # closed form of |T_y(x)|, avoids the cancellation in the map itself
    diff = np.sum((x - y) ** 2, axis=-1)
    den = 1.0 - 2.0 * np.sum(x * y, axis=-1) + np.sum(x * x, axis=-1) * np.sum(y * y, axis=-1)
    n = np.sqrt(diff / den)
    out = 2.0 * np.arctanh(np.minimum(n, 1.0))
    return float(out) if np.ndim(out) == 0 else out


def metric_weights(r):
    """Return (conformal factor (2/(1-r^2))^2, sinh(rho(r)))."""
    a = _check_radius(r)
    one_m = 1.0 - a * a
    conf = (2.0 / one_m) ** 2
    sh = 2.0 * a / one_m
    return _scalar_or_array(conf, r), _scalar_or_array(sh, r)


def ds_dr(r):
    """Derivative of the geodesic radius, 2/(1-r^2)."""
    a = _check_radius(r)
    return _scalar_or_array(2.0 / (1.0 - a * a), r)
