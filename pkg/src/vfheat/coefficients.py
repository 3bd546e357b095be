"""Coefficients a and densities rho, including the two counterexample families.

The factorial-plateau coefficient is assembled so that two identities hold
to rounding error rather than to quadrature tolerance:

* ``a(y) = 1/n!`` exactly on the inner eighth of every plateau, and
* the reciprocal integral between consecutive plateau centers is exactly 1.

Both follow from mollifying the piecewise-constant reciprocal with an even
bump: smoothing a step with an even kernel does not change its integral
over any interval containing the full transition.  The exact piecewise
antiderivative of 1/a is recorded and reused by the flow and metric code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from . import smoothfns
from .errors import (
    DerivativeMismatch,
    NotPositive,
    OutOfMaterializedRange,
)
from .numerics import TestFunction, integrate

__all__ = [
    "Coefficient",
    "Density",
    "PiecewiseReciprocal",
    "FactorialPlateauSpec",
    "BumpTrainSpec",
    "CompletenessReport",
    "make_closed_form",
    "make_factorial_plateau",
    "make_bump_train",
    "make_density",
    "constant_coefficient",
    "sqrt1px2_coefficient",
    "constant_density",
    "canonical_chi",
    "check_completeness",
]

_CONST, _RAMP_UP, _RAMP_DOWN = 0, 1, 2


@dataclass(frozen=True)
class PiecewiseReciprocal:
    """Exact piecewise representation of 1/a and its antiderivative.

    Pieces are either constant or mollified steps (``ramps``); outside the
    covered range the reciprocal continues with the outer constants.  The
    cumulative antiderivative at the edges is assembled from closed-form
    piece totals, so edge values carry no quadrature error.
    """

    edges: np.ndarray
    kinds: np.ndarray
    levels: np.ndarray
    centers: np.ndarray
    halfwidths: np.ndarray
    cum: np.ndarray
    outer_lo: float = 1.0
    outer_hi: float = 1.0

    def __post_init__(self):
        for name in ("edges", "kinds", "levels", "centers", "halfwidths", "cum"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    # -- evaluation ---------------------------------------------------------

    def recip(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.edges, x, side="right") - 1
        out = np.empty_like(x)
        out[idx < 0] = self.outer_lo
        out[idx >= len(self.kinds)] = self.outer_hi
        inside = (idx >= 0) & (idx < len(self.kinds))
        i = idx[inside]
        xi = x[inside]
        kinds = self.kinds[i]
        val = np.empty_like(xi)
        cm = kinds == _CONST
        val[cm] = self.levels[i[cm]]
        rm = ~cm
        if np.any(rm):
            ir = i[rm]
            v = (xi[rm] - self.centers[ir]) / self.halfwidths[ir]
            c = np.asarray(smoothfns.bump_cdf(v))
            w = np.where(kinds[rm] == _RAMP_UP, c, 1.0 - c)
            val[rm] = 1.0 + (self.levels[ir] - 1.0) * w
        out[inside] = val
        return out if out.ndim else float(out)

    def recip_deriv(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.edges, x, side="right") - 1
        out = np.zeros_like(x)
        inside = (idx >= 0) & (idx < len(self.kinds))
        i = idx[inside]
        xi = x[inside]
        rm = self.kinds[i] != _CONST
        if np.any(rm):
            ir = i[rm]
            v = (xi[rm] - self.centers[ir]) / self.halfwidths[ir]
            d = (self.levels[ir] - 1.0) / self.halfwidths[ir] * \
                np.asarray(smoothfns.bump(v))
            sign = np.where(self.kinds[ir] == _RAMP_UP, 1.0, -1.0)
            vals = np.zeros_like(xi)
            vals[rm] = sign * d
            out[inside] = vals
        return out if out.ndim else float(out)

    # -- antiderivative -----------------------------------------------------

    def antideriv(self, x):
        """Antiderivative of 1/a, zero at the first edge."""
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.edges, x, side="right") - 1
        out = np.empty_like(x)
        below = idx < 0
        above = idx >= len(self.kinds)
        out[below] = (x[below] - self.edges[0]) * self.outer_lo
        out[above] = self.cum[-1] + (x[above] - self.edges[-1]) * self.outer_hi
        inside = ~below & ~above
        i = idx[inside]
        xi = x[inside]
        off = xi - self.edges[i]
        kinds = self.kinds[i]
        val = np.empty_like(xi)
        cm = kinds == _CONST
        val[cm] = self.levels[i[cm]] * off[cm]
        rm = ~cm
        if np.any(rm):
            ir = i[rm]
            v = (xi[rm] - self.centers[ir]) / self.halfwidths[ir]
            psi = np.asarray(smoothfns.bump_cdf_integral(v))
            k = self.levels[ir]
            d = self.halfwidths[ir]
            up = kinds[rm] == _RAMP_UP
            val[rm] = np.where(up,
                               off[rm] + (k - 1.0) * d * psi,
                               k * off[rm] - (k - 1.0) * d * psi)
        out[inside] = self.cum[i] + val
        return out if out.ndim else float(out)

    def antideriv_inverse(self, tau, tol: float = 1e-13):
        """Invert the antiderivative (vectorized, bracketed Newton)."""
        tau = np.asarray(tau, dtype=float)
        scalar = tau.ndim == 0
        tau = np.atleast_1d(tau).astype(float)
        out = np.empty_like(tau)
        below = tau < self.cum[0]
        above = tau > self.cum[-1]
        out[below] = self.edges[0] + tau[below] / self.outer_lo
        out[above] = self.edges[-1] + (tau[above] - self.cum[-1]) / self.outer_hi
        inside = ~below & ~above
        if np.any(inside):
            t = tau[inside]
            j = np.clip(np.searchsorted(self.cum, t, side="right") - 1,
                        0, len(self.kinds) - 1)
            lo = self.edges[j].copy()
            hi = self.edges[j + 1].copy()
            x = lo + (hi - lo) * (t - self.cum[j]) / (self.cum[j + 1] - self.cum[j])
            cm = self.kinds[j] == _CONST
            x[cm] = lo[cm] + (t[cm] - self.cum[j][cm]) / self.levels[j][cm]
            active = ~cm
            for _ in range(90):
                if not np.any(active):
                    break
                res = self.antideriv(x[active]) - t[active]
                # a time residual below slope * ulp(x) is unreachable in
                # float64; stop once either criterion is met
                ulp_floor = self.recip(x[active]) * np.spacing(
                    np.maximum(np.abs(x[active]), 1.0))
                done = np.abs(res) <= np.maximum(
                    tol * (1.0 + np.abs(t[active])), 4.0 * ulp_floor)
                slope = self.recip(x[active])
                step = res / slope
                xn = x[active] - step
                la, ha = lo[active], hi[active]
                la = np.where(res < 0, x[active], la)
                ha = np.where(res > 0, x[active], ha)
                bad = (xn <= la) | (xn >= ha)
                xn = np.where(bad, 0.5 * (la + ha), xn)
                lo[active], hi[active] = la, ha
                x[active] = np.where(done, x[active], xn)
                idx_active = np.flatnonzero(active)
                active[idx_active[done]] = False
            out[inside] = x
        return float(out[0]) if scalar else out

    @property
    def total(self) -> float:
        return float(self.cum[-1])


@dataclass(frozen=True)
class Coefficient:
    """Strictly positive coefficient of the vector field, with derivative."""

    eval_a: Callable
    eval_da: Callable
    reciprocal_integral_hint: PiecewiseReciprocal | None = None
    breakpoints: np.ndarray | None = None
    window: tuple[float, float] = (-np.inf, np.inf)
    frozen_beyond: float | None = None
    label: str = "coefficient"

    def recip(self, x):
        """1/a, served from the exact hint when available."""
        if self.reciprocal_integral_hint is not None:
            return self.reciprocal_integral_hint.recip(x)
        return 1.0 / np.asarray(self.eval_a(x))

    def breakpoints_in(self, lo: float, hi: float) -> np.ndarray:
        if self.breakpoints is None:
            return np.empty(0)
        b = self.breakpoints
        return b[(b > lo) & (b < hi)]


@dataclass(frozen=True)
class Density:
    """Strictly positive weight of the underlying measure."""

    eval_rho: Callable
    eval_drho: Callable
    label: str = "density"


def _probe_positive(f, probes, what: str):
    vals = np.asarray(f(probes), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NotPositive(f"{what} is non-finite on the probe grid")
    if np.any(vals <= 0.0):
        bad = probes[np.argmin(vals)]
        raise NotPositive(f"{what} is not strictly positive (e.g. at x={bad})")


def _probe_derivative(f, df, probes, rel: float, what: str):
    h = 1e-6 * max(1.0, float(np.max(np.abs(probes))))
    fd = (np.asarray(f(probes + h), dtype=float)
          - np.asarray(f(probes - h), dtype=float)) / (2 * h)
    dv = np.asarray(df(probes), dtype=float)
    scale = np.max(np.abs(dv)) + np.max(np.abs(fd)) + 1e-12
    err = np.max(np.abs(fd - dv))
    if err > rel * scale:
        raise DerivativeMismatch(
            f"{what}: derivative disagrees with finite differences "
            f"(max error {err:.3e}, scale {scale:.3e})")


def make_closed_form(a_expr: Callable, da_expr: Callable,
                     probe_range: tuple[float, float] = (-10.0, 10.0),
                     n_probes: int = 2001,
                     label: str = "closed-form") -> Coefficient:
    """Wrap closed-form callables after positivity and derivative checks."""
    probes = np.linspace(probe_range[0], probe_range[1], n_probes)
    _probe_positive(a_expr, probes, "coefficient")
    _probe_derivative(a_expr, da_expr, probes, 1e-5, "coefficient")
    return Coefficient(eval_a=a_expr, eval_da=da_expr, label=label)


def make_density(rho_expr: Callable, drho_expr: Callable,
                 probe_range: tuple[float, float] = (-10.0, 10.0),
                 n_probes: int = 2001, label: str = "density") -> Density:
    probes = np.linspace(probe_range[0], probe_range[1], n_probes)
    _probe_positive(rho_expr, probes, "density")
    _probe_derivative(rho_expr, drho_expr, probes, 1e-5, "density")
    return Density(eval_rho=rho_expr, eval_drho=drho_expr, label=label)


def constant_coefficient(value: float = 1.0) -> Coefficient:
    if value <= 0:
        raise NotPositive("constant coefficient must be positive")
    return Coefficient(
        eval_a=lambda x: np.full_like(np.asarray(x, dtype=float), value),
        eval_da=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        label=f"constant {value:g}")


def sqrt1px2_coefficient() -> Coefficient:
    """a(x) = sqrt(1 + x^2); the flow is x -> sinh(asinh(x) + t)."""
    return Coefficient(
        eval_a=lambda x: np.sqrt(1.0 + np.asarray(x, dtype=float) ** 2),
        eval_da=lambda x: np.asarray(x, dtype=float)
        / np.sqrt(1.0 + np.asarray(x, dtype=float) ** 2),
        label="sqrt(1+x^2)")


def constant_density(value: float = 1.0) -> Density:
    if value <= 0:
        raise NotPositive("constant density must be positive")
    return Density(
        eval_rho=lambda x: np.full_like(np.asarray(x, dtype=float), value),
        eval_drho=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        label=f"constant {value:g}")


# -- factorial-plateau family ------------------------------------------------


@dataclass(frozen=True)
class FactorialPlateauSpec:
    """Plateau family: height 1/n! at center y_n, mollified with width h_n/8."""

    n_max: int

    def __post_init__(self):
        if self.n_max < 2:
            raise ValueError("n_max must be >= 2")
        if self.n_max > 15:
            raise ValueError(
                "n_max > 15 is not representable: plateau widths fall below "
                "the float spacing of the centers")

    @property
    def heights(self) -> np.ndarray:
        return np.array([1.0 / math.factorial(n) for n in range(self.n_max + 1)])

    @property
    def centers(self) -> np.ndarray:
        h = self.heights
        y = np.empty(self.n_max + 1)
        y[0] = 0.0
        for n in range(self.n_max):
            y[n + 1] = y[n] + 0.25 * (h[n] + h[n + 1]) + 0.5
        return y

    @property
    def mollifier_halfwidths(self) -> np.ndarray:
        return self.heights / 8.0

    def core_interval(self, n: int) -> tuple[float, float]:
        """Interval around y_n where a equals the plateau height exactly."""
        y = self.centers[n]
        d = self.heights[n] / 8.0
        return (y - d, y + d)


@lru_cache(maxsize=32)
def make_factorial_plateau(spec: FactorialPlateauSpec) -> Coefficient:
    """Mollified factorial-plateau coefficient with its exact antiderivative.

    The reciprocal equals 1/h_n on plateau n and 1 on the connectors; every
    step between the two levels is a mollified ramp of halfwidth h_n/8.
    Plateaus 0 and 1 have height 1 and merge into the flat region, so the
    first materialized ramp belongs to plateau 2.  Past the final ramp the
    coefficient is frozen at the connector value 1.
    """
    h = spec.heights
    y = spec.centers
    edges: list[float] = []
    kinds: list[int] = []
    levels: list[float] = []
    centers: list[float] = []
    halfwidths: list[float] = []

    first = 2  # plateaus 0 and 1 are level 1: no ramps to materialize
    pos = y[first] - h[first] / 4.0 - h[first] / 8.0
    edges.append(pos)
    for n in range(first, spec.n_max + 1):
        delta = h[n] / 8.0
        left_edge = y[n] - h[n] / 4.0
        right_edge = y[n] + h[n] / 4.0
        level = 1.0 / h[n]
        # rising ramp of 1/a at the left plateau edge
        kinds.append(_RAMP_UP)
        levels.append(level)
        centers.append(left_edge)
        halfwidths.append(delta)
        edges.append(left_edge + delta)
        # flat plateau core
        kinds.append(_CONST)
        levels.append(level)
        centers.append(0.0)
        halfwidths.append(0.0)
        edges.append(right_edge - delta)
        # falling ramp at the right plateau edge
        kinds.append(_RAMP_DOWN)
        levels.append(level)
        centers.append(right_edge)
        halfwidths.append(delta)
        edges.append(right_edge + delta)
        if n < spec.n_max:
            nxt = y[n + 1] - h[n + 1] / 4.0 - h[n + 1] / 8.0
            kinds.append(_CONST)
            levels.append(1.0)
            centers.append(0.0)
            halfwidths.append(0.0)
            edges.append(nxt)

    edges_arr = np.asarray(edges)
    kinds_arr = np.asarray(kinds)
    levels_arr = np.asarray(levels)
    centers_arr = np.asarray(centers)
    hw_arr = np.asarray(halfwidths)
    piece_len = np.diff(edges_arr)
    totals = np.where(kinds_arr == _CONST,
                      levels_arr * piece_len,
                      hw_arr * (levels_arr + 1.0))
    cum = np.concatenate([[0.0], np.cumsum(totals)])
    hint = PiecewiseReciprocal(edges_arr, kinds_arr, levels_arr,
                               centers_arr, hw_arr, cum)

    def eval_a(x):
        return 1.0 / hint.recip(x)

    def eval_da(x):
        r = np.asarray(hint.recip(x))
        return -np.asarray(hint.recip_deriv(x)) / (r * r)

    return Coefficient(
        eval_a=eval_a,
        eval_da=eval_da,
        reciprocal_integral_hint=hint,
        breakpoints=edges_arr,
        window=(-np.inf, np.inf),
        frozen_beyond=float(edges_arr[-1]),
        label=f"factorial-plateau (n_max={spec.n_max})")


# -- bump-train family --------------------------------------------------------


def canonical_chi() -> TestFunction:
    """Monotone ramp used by the bump train: 0 below 0, x on [1,2], 3 above 3."""
    return TestFunction(
        value=smoothfns.chi_profile,
        derivative=smoothfns.chi_profile_deriv,
        support=(0.0, 3.0),
        breakpoints=np.array([0.0, 1.0, 2.0, 3.0]))


def _validate_chi(chi: TestFunction):
    u = np.linspace(-1.0, 4.0, 4001)
    v = np.asarray(chi.value(u), dtype=float)
    if np.any(v < -1e-12) or np.any(v > 3.0 + 1e-12):
        raise ValueError("chi must take values in [0, 3]")
    if np.any(np.asarray(chi.derivative(u), dtype=float) < -1e-12):
        raise ValueError("chi must be nondecreasing")
    if np.any(np.abs(v[u <= 0.0]) > 1e-12):
        raise ValueError("chi must vanish for x <= 0")
    if np.any(np.abs(v[u >= 3.0] - 3.0) > 1e-12):
        raise ValueError("chi must equal 3 for x >= 3")
    mid = (u >= 1.0) & (u <= 2.0)
    if np.max(np.abs(v[mid] - u[mid])) > 1e-12:
        raise ValueError("chi must equal the identity on [1, 2]")


@dataclass(frozen=True)
class BumpTrainSpec:
    """Train of ramp pairs: a rises 1 -> 4 near 16n and falls back near 16n+8."""

    n_terms: int
    chi: TestFunction = field(default_factory=canonical_chi)

    def __post_init__(self):
        if self.n_terms < 1:
            raise ValueError("n_terms must be >= 1")

    @property
    def materialized_hi(self) -> float:
        return 16.0 * (self.n_terms + 1)


def make_bump_train(spec: BumpTrainSpec) -> Coefficient:
    """Bump-train coefficient with range [1, 4] and ramps steepening like n.

    Only one train term is active at any point, so the infinite sum is
    evaluated exactly for x below ``16 * (n_terms + 1)``; beyond that the
    next term would be needed and evaluation raises
    :class:`OutOfMaterializedRange`.
    """
    _validate_chi(spec.chi)
    chi_v = spec.chi.value
    chi_d = spec.chi.derivative
    hi = spec.materialized_hi

    def _terms(x):
        x = np.asarray(x, dtype=float)
        if np.any(x >= hi):
            raise OutOfMaterializedRange(
                f"bump train materialized for x < {hi:g}")
        n = np.floor(x / 16.0)
        n = np.clip(n, 0, spec.n_terms)
        active = n >= 1
        return x, n, active

    def eval_a(x):
        x, n, active = _terms(x)
        out = np.ones_like(x)
        if np.any(active):
            xa, na = x[active], n[active]
            out[active] = 1.0 + np.asarray(chi_v(na * (xa - 16.0 * na))) \
                - np.asarray(chi_v(na * (xa - (16.0 * na + 8.0))))
        return out if out.ndim else float(out)

    def eval_da(x):
        x, n, active = _terms(x)
        out = np.zeros_like(x)
        if np.any(active):
            xa, na = x[active], n[active]
            out[active] = na * (np.asarray(chi_d(na * (xa - 16.0 * na)))
                                - np.asarray(chi_d(na * (xa - (16.0 * na + 8.0)))))
        return out if out.ndim else float(out)

    bkpts = []
    for n in range(1, spec.n_terms + 1):
        for base in (16.0 * n, 16.0 * n + 8.0):
            bkpts.extend(base + np.arange(4) / n)
    return Coefficient(
        eval_a=eval_a,
        eval_da=eval_da,
        breakpoints=np.asarray(sorted(bkpts)),
        window=(-np.inf, hi),
        label=f"bump-train (n_terms={spec.n_terms})")


# -- completeness evidence -----------------------------------------------------


@dataclass(frozen=True)
class CompletenessReport:
    horizon: float
    threshold: float
    forward_integral: float
    backward_integral: float
    passed: bool
    notes: str = ""


def check_completeness(a: Coefficient, horizon: float,
                       threshold: float) -> CompletenessReport:
    """Numerical evidence that the reciprocal integral diverges both ways."""
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    hint = a.reciprocal_integral_hint
    if hint is not None:
        fwd = float(hint.antideriv(horizon) - hint.antideriv(0.0))
        bwd = float(hint.antideriv(0.0) - hint.antideriv(-horizon))
    else:
        fwd = integrate(lambda x: a.recip(x), 0.0, horizon,
                        breakpoints=a.breakpoints_in(0.0, horizon))
        bwd = integrate(lambda x: a.recip(x), -horizon, 0.0,
                        breakpoints=a.breakpoints_in(-horizon, 0.0))
    notes = ""
    if a.frozen_beyond is not None and horizon > a.frozen_beyond:
        notes = (f"range extends past x={a.frozen_beyond:g} where the "
                 "coefficient is frozen at its connector value")
    return CompletenessReport(
        horizon=float(horizon), threshold=float(threshold),
        forward_integral=fwd, backward_integral=bwd,
        passed=bool(fwd > threshold and bwd > threshold), notes=notes)
