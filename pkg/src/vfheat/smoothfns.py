"""Canonical smooth profiles used across the package.

Everything here is built from two classic C-infinity germs:

* ``exp_step`` -- the transition x |-> f(x)/(f(x)+f(1-x)) with f(x)=exp(-1/x),
  exactly 0 below 0 and exactly 1 above 1, flat to all orders at both ends.
* the standard even mollifier bump x |-> exp(-1/(1-x^2)) on [-1, 1],
  normalized to unit mass.

The bump's cumulative distribution and its antiderivative have no closed
form; they are materialized once at import time as Chebyshev interpolants
accurate to ~1e-14 and pinned so the endpoint values are exact.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial import chebyshev as _cheb

__all__ = [
    "exp_step",
    "exp_step_deriv",
    "bump",
    "bump_deriv",
    "bump_cdf",
    "bump_cdf_integral",
    "bump_sup",
    "chi_profile",
    "chi_profile_deriv",
    "chi_deriv_sup",
    "slope_profile",
    "slope_profile_deriv",
    "tail_profile",
    "tail_profile_deriv",
]


def _exp_germ(u):
    """exp(-1/u) for u > 0, zero otherwise (vectorized, no warnings)."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0
    with np.errstate(over="ignore", divide="ignore"):
        out[pos] = np.exp(-1.0 / u[pos])
    return out


def exp_step(u):
    """Smooth step: 0 for u <= 0, 1 for u >= 1, strictly increasing between."""
    u = np.asarray(u, dtype=float)
    f1 = _exp_germ(u)
    f2 = _exp_germ(1.0 - u)
    den = f1 + f2
    out = np.empty_like(u)
    mid = den > 0
    out[mid] = f1[mid] / den[mid]
    out[~mid] = np.where(u[~mid] >= 0.5, 1.0, 0.0)
    return out if out.ndim else float(out)


def exp_step_deriv(u):
    """Derivative of :func:`exp_step`; vanishes identically outside (0, 1)."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = (u > 0.0) & (u < 1.0)
    v = u[inside]
    f1 = np.exp(-1.0 / v)
    f2 = np.exp(-1.0 / (1.0 - v))
    d1 = f1 / v**2
    d2 = f2 / (1.0 - v) ** 2
    out[inside] = (d1 * f2 + f1 * d2) / (f1 + f2) ** 2
    return out if out.ndim else float(out)


def _raw_bump(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    v = u[inside]
    out[inside] = np.exp(-1.0 / (1.0 - v * v))
    return out


# One-time Chebyshev materialization of the bump's mass, CDF and the CDF's
# antiderivative.  Degree 360 leaves interpolation residuals near 1e-15;
# the endpoint identities (total mass 1, CDF(1) = 1, integral of CDF = 1)
# are enforced exactly by renormalization.
_BUMP_DEG = 360
_raw_coef = _cheb.chebinterpolate(_raw_bump, _BUMP_DEG)
_MASS = float(_cheb.chebval(1.0, _cheb.chebint(_raw_coef, lbnd=-1.0)))
_BUMP_COEF = _raw_coef / _MASS
_CDF_COEF = _cheb.chebint(_BUMP_COEF, lbnd=-1.0)
_CDF_COEF /= float(_cheb.chebval(1.0, _CDF_COEF))
_CDFINT_COEF = _cheb.chebint(_CDF_COEF, lbnd=-1.0)
_CDFINT_COEF /= float(_cheb.chebval(1.0, _CDFINT_COEF))


def bump(u):
    """Normalized even mollifier with support [-1, 1] and unit mass."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    v = u[inside]
    out[inside] = np.exp(-1.0 / (1.0 - v * v)) / _MASS
    return out if out.ndim else float(out)


def bump_deriv(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    v = u[inside]
    q = 1.0 - v * v
    out[inside] = np.exp(-1.0 / q) / _MASS * (-2.0 * v / q**2)
    return out if out.ndim else float(out)


def bump_sup() -> float:
    """Peak value of the normalized bump (attained at 0)."""
    return float(np.exp(-1.0) / _MASS)


def bump_cdf(v):
    """CDF of the normalized bump: 0 at -1, 1/2 at 0, 1 at +1."""
    v = np.asarray(v, dtype=float)
    clipped = np.clip(v, -1.0, 1.0)
    out = _cheb.chebval(clipped, _CDF_COEF)
    out = np.where(v <= -1.0, 0.0, np.where(v >= 1.0, 1.0, out))
    return out if out.ndim else float(out)


def bump_cdf_integral(v):
    """Antiderivative of :func:`bump_cdf` vanishing at -1; equals 1 at +1."""
    v = np.asarray(v, dtype=float)
    clipped = np.clip(v, -1.0, 1.0)
    out = _cheb.chebval(clipped, _CDFINT_COEF)
    # Above +1 the CDF is identically 1, so the antiderivative grows linearly.
    out = np.where(v <= -1.0, 0.0, np.where(v >= 1.0, 1.0 + (v - 1.0), out))
    return out if out.ndim else float(out)


def chi_profile(u):
    """Monotone C-infinity ramp: 0 below 0, u on [1, 2], 3 above 3.

    The joins at 1 and 2 are flat to all orders because the blend weight
    is :func:`exp_step`, so the middle piece is exactly the identity.
    """
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    out[u <= 0.0] = 0.0
    out[u >= 3.0] = 3.0
    lo = (u > 0.0) & (u < 1.0)
    out[lo] = u[lo] * exp_step(u[lo])
    mid = (u >= 1.0) & (u <= 2.0)
    out[mid] = u[mid]
    hi = (u > 2.0) & (u < 3.0)
    w = 3.0 - u[hi]
    out[hi] = 3.0 - w * exp_step(w)
    return out if out.ndim else float(out)


def chi_profile_deriv(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    lo = (u > 0.0) & (u < 1.0)
    out[lo] = exp_step(u[lo]) + u[lo] * exp_step_deriv(u[lo])
    mid = (u >= 1.0) & (u <= 2.0)
    out[mid] = 1.0
    hi = (u > 2.0) & (u < 3.0)
    w = 3.0 - u[hi]
    out[hi] = exp_step(w) + w * exp_step_deriv(w)
    return out if out.ndim else float(out)


def chi_deriv_sup() -> float:
    """Supremum of chi_profile' (attained inside (0, 1)), to ~1e-12."""
    grid = np.linspace(0.0, 1.0, 20001)
    k = int(np.argmax(chi_profile_deriv(grid)))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    for _ in range(60):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if chi_profile_deriv(m1) < chi_profile_deriv(m2):
            lo = m1
        else:
            hi = m2
    return float(chi_profile_deriv(0.5 * (lo + hi)))


def slope_profile(u):
    """Smooth trapezoid on [0, 3]: rises 0->1 on [0,1], flat 1, falls on [2,3]."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    lo = (u > 0.0) & (u < 1.0)
    out[lo] = exp_step(u[lo])
    mid = (u >= 1.0) & (u <= 2.0)
    out[mid] = 1.0
    hi = (u > 2.0) & (u < 3.0)
    out[hi] = exp_step(3.0 - u[hi])
    return out if out.ndim else float(out)


def slope_profile_deriv(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    lo = (u > 0.0) & (u < 1.0)
    out[lo] = exp_step_deriv(u[lo])
    hi = (u > 2.0) & (u < 3.0)
    out[hi] = -exp_step_deriv(3.0 - u[hi])
    return out if out.ndim else float(out)


def tail_profile(u):
    """Decreasing plateau: 1 for u <= 1, 0 for u >= 4, bump-CDF decay between."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    out[u <= 1.0] = 1.0
    out[u >= 4.0] = 0.0
    mid = (u > 1.0) & (u < 4.0)
    out[mid] = 1.0 - bump_cdf((2.0 * u[mid] - 5.0) / 3.0)
    return out if out.ndim else float(out)


def tail_profile_deriv(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    mid = (u > 1.0) & (u < 4.0)
    out[mid] = -(2.0 / 3.0) * bump((2.0 * u[mid] - 5.0) / 3.0)
    return out if out.ndim else float(out)
