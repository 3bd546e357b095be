"""Quadrature, monotone inversion and grid-function primitives.

The adaptive integrator refines panels carrying a fixed-order Gauss rule;
the error indicator per panel is the difference between the 8- and 16-point
estimates.  Integrands are expected to accept numpy arrays; plain scalar
callables are wrapped transparently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq

from . import smoothfns
from .errors import BracketInvalid, NonFinite, SubdivisionLimit

__all__ = [
    "QuadratureConfig",
    "GridFunction",
    "TestFunction",
    "integrate",
    "invert_monotone",
    "lp_norm",
    "bump_function",
    "plateau_function",
    "gaussian_function",
    "modulate",
    "DEFAULT_RESOLUTION",
]

#: default samples per unit length for grid functions; resolves ramps of
#: width 1/n in the bump-train coefficient up to n = 256.
DEFAULT_RESOLUTION = 4096

_GL_LO, _GL_HI = 8, 16
_NODES_LO, _WEIGHTS_LO = leggauss(_GL_LO)
_NODES_HI, _WEIGHTS_HI = leggauss(_GL_HI)


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be strictly positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_QUADRATURE = QuadratureConfig()


def _vectorized(f: Callable) -> Callable:
    """Return an array-capable version of ``f``."""
    probe = np.array([0.0, 1.0])
    try:
        out = np.asarray(f(probe))
        if out.shape == probe.shape:
            return f
    except Exception:
        pass

    def wrapped(x):
        x = np.asarray(x, dtype=float)
        flat = np.array([f(v) for v in x.ravel()])
        return flat.reshape(x.shape)

    return wrapped


def _panel_estimates(f, lo: np.ndarray, hi: np.ndarray):
    """Coarse/fine Gauss estimates and error indicators for a batch of panels."""
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x_lo = mid[:, None] + half[:, None] * _NODES_LO[None, :]
    x_hi = mid[:, None] + half[:, None] * _NODES_HI[None, :]
    y_lo = np.asarray(f(x_lo.ravel())).reshape(x_lo.shape)
    y_hi = np.asarray(f(x_hi.ravel())).reshape(x_hi.shape)
    if not (np.all(np.isfinite(y_lo)) and np.all(np.isfinite(y_hi))):
        raise NonFinite("integrand returned a non-finite value")
    coarse = half * (y_lo @ _WEIGHTS_LO)
    fine = half * (y_hi @ _WEIGHTS_HI)
    return fine, np.abs(fine - coarse)


def integrate(
    f: Callable,
    lo: float,
    hi: float,
    cfg: QuadratureConfig | None = None,
    *,
    breakpoints: Sequence[float] | None = None,
) -> float:
    """Adaptive-panel integral of ``f`` over [lo, hi].

    ``breakpoints`` seeds the initial panel edges; useful when the integrand
    is only piecewise smooth.  Raises :class:`SubdivisionLimit` when the
    panel budget is exhausted before reaching tolerance and
    :class:`NonFinite` when the integrand misbehaves.
    """
    cfg = cfg or DEFAULT_QUADRATURE
    lo = float(lo)
    hi = float(hi)
    if hi < lo:
        raise ValueError("integrate requires lo <= hi")
    if hi == lo:
        return 0.0
    f = _vectorized(f)

    edges = [lo, hi]
    if breakpoints is not None:
        inner = [float(b) for b in np.sort(np.asarray(breakpoints, dtype=float))
                 if lo < b < hi]
        edges = [lo] + inner + [hi]
    left = np.array(edges[:-1])
    right = np.array(edges[1:])
    vals, errs = _panel_estimates(f, left, right)
    n_splits = 0

    while True:
        total = float(np.sum(vals))
        tol = max(cfg.abs_tol, cfg.rel_tol * abs(total))
        err_sum = float(np.sum(errs))
        if err_sum <= tol:
            return total
        # split every panel contributing more than its proportional share
        share = tol * (right - left) / (hi - lo)
        split = errs > np.maximum(share, tol / (4 * len(left)))
        if not np.any(split):
            split = errs >= np.max(errs)
        n_splits += int(np.sum(split))
        if n_splits > cfg.max_subdivisions:
            raise SubdivisionLimit(
                f"needed more than {cfg.max_subdivisions} panel splits "
                f"(error {err_sum:.3e}, tolerance {tol:.3e})")
        mid = 0.5 * (left[split] + right[split])
        new_left = np.concatenate([left[~split], left[split], mid])
        new_right = np.concatenate([right[~split], mid, right[split]])
        keep_vals = vals[~split]
        keep_errs = errs[~split]
        child_vals, child_errs = _panel_estimates(
            f, new_left[len(keep_vals):], new_right[len(keep_vals):])
        left, right = new_left, new_right
        vals = np.concatenate([keep_vals, child_vals])
        errs = np.concatenate([keep_errs, child_errs])


def gauss_nodes(order: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Cached Gauss-Legendre nodes and weights on [-1, 1]."""
    cached = _GAUSS_CACHE.get(order)
    if cached is None:
        cached = leggauss(order)
        _GAUSS_CACHE[order] = cached
    return cached


_GAUSS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {
    _GL_LO: (_NODES_LO, _WEIGHTS_LO),
    _GL_HI: (_NODES_HI, _WEIGHTS_HI),
}


def composite_gauss(f: Callable, edges, order: int = 16,
                    max_width: float | None = None):
    """Fixed-order Gauss quadrature over consecutive panels.

    ``edges`` is an increasing sequence of panel boundaries; panels wider
    than ``max_width`` are subdivided evenly first.  ``f`` must accept
    arrays.  Intended for piecewise-smooth integrands whose kink locations
    are known exactly; adaptive refinement is then unnecessary.
    """
    edges = np.asarray(edges, dtype=float)
    if max_width is not None:
        refined = [edges[0]]
        for right in edges[1:]:
            left = refined[-1]
            n_cuts = max(int(np.ceil((right - left) / max_width)), 1)
            refined.extend(np.linspace(left, right, n_cuts + 1)[1:])
        edges = np.asarray(refined)
    nodes, weights = gauss_nodes(order)
    mids = 0.5 * (edges[:-1] + edges[1:])
    halves = 0.5 * np.diff(edges)
    x = (mids[:, None] + halves[:, None] * nodes[None, :]).ravel()
    y = np.asarray(f(x)).reshape(len(mids), order)
    return np.sum(halves * (y @ weights))


def invert_monotone(
    g: Callable[[float], float],
    target: float,
    bracket: tuple[float, float],
    tol: float = 1e-12,
) -> float:
    """Solve g(x) = target for strictly increasing ``g`` on ``bracket``.

    Uses Brent's method (bracketed, bisection-safe).  Raises
    :class:`BracketInvalid` when the target is not enclosed.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo <= hi:
        raise BracketInvalid("bracket is empty")
    g_lo, g_hi = float(g(lo)), float(g(hi))
    if not (g_lo <= target <= g_hi):
        raise BracketInvalid(
            f"target {target} outside [g(lo), g(hi)] = [{g_lo}, {g_hi}]")
    if g_lo == target:
        return lo
    if g_hi == target:
        return hi
    return float(brentq(lambda x: g(x) - target, lo, hi, xtol=tol))


@dataclass(frozen=True)
class GridFunction:
    """Samples of a function on a uniform grid, zero outside [x_lo, x_hi]."""

    x_lo: float
    x_hi: float
    values: np.ndarray
    spacing: float

    def __post_init__(self):
        values = np.asarray(self.values)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if not self.x_lo < self.x_hi:
            raise ValueError("x_lo must be < x_hi")
        if values.ndim != 1 or len(values) < 2:
            raise ValueError("values must be a 1-d array with >= 2 samples")
        expected = (self.x_hi - self.x_lo) / (len(values) - 1)
        if abs(self.spacing - expected) > 1e-12 * max(1.0, abs(expected)):
            raise ValueError("spacing inconsistent with range and sample count")
        if not np.all(np.isfinite(values)):
            raise NonFinite("grid values must be finite")

    @classmethod
    def from_samples(cls, x_lo: float, x_hi: float, values) -> "GridFunction":
        values = np.asarray(values)
        return cls(float(x_lo), float(x_hi), values,
                   (float(x_hi) - float(x_lo)) / (len(values) - 1))

    @classmethod
    def from_callable(cls, f: Callable, x_lo: float, x_hi: float,
                      resolution: int = DEFAULT_RESOLUTION) -> "GridFunction":
        n = max(int(round((x_hi - x_lo) * resolution)), 16) + 1
        x = np.linspace(x_lo, x_hi, n)
        return cls.from_samples(x_lo, x_hi, np.asarray(f(x)))

    def grid(self) -> np.ndarray:
        return np.linspace(self.x_lo, self.x_hi, len(self.values))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True)
class TestFunction:
    """Smooth compactly supported function with an explicit derivative.

    ``breakpoints`` optionally lists interior points where higher
    derivatives jump scale (piece joins); quadrature code aligns panels
    with them.
    """

    __test__ = False  # keep pytest from collecting this as a test class

    value: Callable
    derivative: Callable
    support: tuple[float, float]
    breakpoints: np.ndarray | None = None

    def __call__(self, x):
        return self.value(x)

    @property
    def width(self) -> float:
        return self.support[1] - self.support[0]


def lp_norm(phi: GridFunction, p: float, rho=None) -> float:
    """Weighted L_p norm of a grid function; ``rho`` defaults to 1.

    Composite trapezoid weights are used so that the discrete functional
    is itself a norm (triangle inequality holds exactly on a fixed grid).
    """
    if p != np.inf and not p >= 1:
        raise ValueError("p must lie in [1, inf]")
    if p == np.inf:
        return phi.sup_norm()
    w = np.full(len(phi.values), phi.spacing)
    w[0] *= 0.5
    w[-1] *= 0.5
    if rho is not None:
        w = w * np.asarray(rho.eval_rho(phi.grid()), dtype=float)
    return float(np.sum(w * np.abs(phi.values) ** p) ** (1.0 / p))


def bump_function(center: float, halfwidth: float, height: float = 1.0) -> TestFunction:
    """Classic mollifier bump scaled to peak ``height`` at ``center``."""
    peak = smoothfns.bump_sup()

    def value(x):
        return height / peak * smoothfns.bump((np.asarray(x, dtype=float) - center) / halfwidth)

    def derivative(x):
        return height / peak / halfwidth * smoothfns.bump_deriv(
            (np.asarray(x, dtype=float) - center) / halfwidth)

    return TestFunction(value, derivative, (center - halfwidth, center + halfwidth))


def plateau_function(lo: float, hi: float, rise: float = 1.0) -> TestFunction:
    """Height-1 plateau on [lo, hi] with smooth shoulders of width ``rise``."""

    def value(x):
        x = np.asarray(x, dtype=float)
        return smoothfns.exp_step((x - (lo - rise)) / rise) * \
            smoothfns.exp_step(((hi + rise) - x) / rise)

    def derivative(x):
        x = np.asarray(x, dtype=float)
        up = smoothfns.exp_step((x - (lo - rise)) / rise)
        dn = smoothfns.exp_step(((hi + rise) - x) / rise)
        d_up = smoothfns.exp_step_deriv((x - (lo - rise)) / rise) / rise
        d_dn = -smoothfns.exp_step_deriv(((hi + rise) - x) / rise) / rise
        return d_up * dn + up * d_dn

    return TestFunction(value, derivative, (lo - rise, hi + rise),
                        breakpoints=np.array([lo, hi]))


def gaussian_function(center: float = 0.0, sigma: float = 1.0,
                      cutoff: float = 12.0) -> TestFunction:
    """Gaussian truncated at ``cutoff`` sigmas (tail below 1e-31)."""

    def value(x):
        x = np.asarray(x, dtype=float)
        u = (x - center) / sigma
        out = np.exp(-0.5 * u * u)
        return np.where(np.abs(u) > cutoff, 0.0, out)

    def derivative(x):
        x = np.asarray(x, dtype=float)
        u = (x - center) / sigma
        out = -u / sigma * np.exp(-0.5 * u * u)
        return np.where(np.abs(u) > cutoff, 0.0, out)

    return TestFunction(value, derivative,
                        (center - cutoff * sigma, center + cutoff * sigma))


def modulate(tf: TestFunction, wavenumber: float) -> TestFunction:
    """Multiply a test function by exp(i * wavenumber * x)."""

    def value(x):
        x = np.asarray(x, dtype=float)
        return np.exp(1j * wavenumber * x) * tf.value(x)

    def derivative(x):
        x = np.asarray(x, dtype=float)
        return np.exp(1j * wavenumber * x) * (
            tf.derivative(x) + 1j * wavenumber * tf.value(x))

    return TestFunction(value, derivative, tf.support, breakpoints=tf.breakpoints)
