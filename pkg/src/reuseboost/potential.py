"""Piecewise-smooth boosting potential and the MadaBoost weighting.

The potential is ``2 - z`` for non-positive margins and ``(z + 2) exp(-z)``
for positive ones. It is convex, twice continuously differentiable,
non-negative, and 1-smooth, which is all the booster relies on.
"""

from enum import Enum

import numpy as np

# Past this margin every branch value underflows; the exact limit is 0.
_UNDERFLOW = 700.0


class PotentialKind(Enum):
    SMOOTH_PIECEWISE = "smooth"
    MADABOOST = "madaboost"


def _as_margin(z):
    arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("potential is only defined for finite margins")
    return arr


def _out(arr, scalar):
    return float(arr) if scalar else arr


def phi(z):
    """Potential value at margin ``z`` (scalar or array)."""
    scalar = np.ndim(z) == 0
    z = _as_margin(z)
    pos = np.clip(z, 0.0, _UNDERFLOW)
    out = np.where(z <= 0, 2.0 - z, (pos + 2.0) * np.exp(-pos))
    out = np.where(z > _UNDERFLOW, 0.0, out)
    return _out(out, scalar)


def phi_prime(z):
    """First derivative; lies in [-1, 0] and equals -1 for z <= 0."""
    scalar = np.ndim(z) == 0
    z = _as_margin(z)
    pos = np.clip(z, 0.0, _UNDERFLOW)
    out = np.where(z <= 0, -1.0, -(pos + 1.0) * np.exp(-pos))
    out = np.where(z > _UNDERFLOW, 0.0, out)
    return _out(out, scalar)


def phi_second(z):
    """Second derivative; zero for z <= 0, peaks at 1/e when z = 1."""
    scalar = np.ndim(z) == 0
    z = _as_margin(z)
    pos = np.clip(z, 0.0, _UNDERFLOW)
    out = np.where(z <= 0, 0.0, pos * np.exp(-pos))
    out = np.where(z > _UNDERFLOW, 0.0, out)
    return _out(out, scalar)


def madaboost_phi(z):
    """MadaBoost potential: ``1 - z`` for z <= 0, ``exp(-z)`` otherwise."""
    scalar = np.ndim(z) == 0
    z = _as_margin(z)
    pos = np.clip(z, 0.0, _UNDERFLOW)
    out = np.where(z <= 0, 1.0 - z, np.exp(-pos))
    return _out(out, scalar)


def madaboost_weight(z):
    """Example weight ``min(1, exp(-z))``, i.e. minus the MadaBoost derivative."""
    scalar = np.ndim(z) == 0
    z = _as_margin(z)
    out = np.exp(-np.clip(z, 0.0, _UNDERFLOW))
    out = np.where(z > _UNDERFLOW, 0.0, out)
    return _out(out, scalar)


def potential_derivative(kind, z):
    """Derivative of the requested potential family."""
    kind = PotentialKind(kind)
    if kind is PotentialKind.SMOOTH_PIECEWISE:
        return phi_prime(z)
    return -madaboost_weight(z) if np.ndim(z) == 0 else -np.asarray(madaboost_weight(z))
