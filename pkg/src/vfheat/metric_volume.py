"""Intrinsic distance, ball volumes and volume-doubling diagnostics.

The distance is the absolute reciprocal integral between the points, which
coincides with the variational definition through Lipschitz test functions.
Ball volumes are computed along the flow, ``V(x; r) = integral over
[-r, r] of (a rho)(e^{sX} x) ds``, with the direct density integral between
the ball endpoints kept as an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coefficients import Coefficient, Density
from .errors import WindowExceeded
from .flow import FlowMap
from .numerics import QuadratureConfig, integrate

__all__ = [
    "BallVolumeCurve",
    "UniformVolumeReport",
    "distance",
    "ball_volume",
    "ball_volume_direct",
    "doubling_scan",
    "uniform_volume_test",
]


def distance(a: Coefficient, x, y, *, fm: FlowMap | None = None,
             cfg: QuadratureConfig | None = None):
    """Intrinsic distance |integral of 1/a between x and y| (vectorized)."""
    hint = a.reciprocal_integral_hint
    if hint is not None:
        return np.abs(hint.antideriv(y) - hint.antideriv(x))
    if fm is not None:
        return np.abs(np.asarray(fm.time(y)) - np.asarray(fm.time(x)))
    lo, hi = (x, y) if x <= y else (y, x)
    if lo == hi:
        return 0.0
    return abs(integrate(a.recip, lo, hi, cfg,
                         breakpoints=a.breakpoints_in(lo, hi)))


def _flow_map_for(a: Coefficient, fm: FlowMap | None, anchor: float,
                  reach: float) -> FlowMap:
    if fm is not None:
        return fm
    c_lo, c_hi = a.window
    lo = max(c_lo, anchor - 8.0 * reach - 8.0)
    hi = min(c_hi * (1 - 1e-12) if np.isfinite(c_hi) else np.inf,
             anchor + 8.0 * reach + 8.0)
    return FlowMap(a, anchor=anchor, window=(lo, hi))


def ball_volume(a: Coefficient, rho: Density, x: float, r: float, *,
                fm: FlowMap | None = None) -> float:
    """Measure of the intrinsic ball of radius r at x, via the flow route."""
    if r <= 0:
        raise ValueError("radius must be positive")
    fm = _flow_map_for(a, fm, x, r)
    tau0 = float(fm.time(x))
    t_lo, t_hi = fm.time_bounds()
    if tau0 - r < t_lo or tau0 + r > t_hi:
        raise WindowExceeded("ball leaves the materialized window")
    crossings = fm.breakpoint_times(tau0 - r, tau0 + r) - tau0

    def integrand(s):
        y = fm.position(tau0 + s)
        return np.asarray(a.eval_a(y)) * np.asarray(rho.eval_rho(y))

    # a(flow(s, x)) develops steep layers in s inside mollifier ramps, so
    # the panels seeded at the piece crossings are refined adaptively
    cfg = QuadratureConfig(abs_tol=1e-12, rel_tol=1e-11, max_subdivisions=4000)
    return integrate(integrand, -r, r, cfg, breakpoints=crossings)


def ball_volume_direct(a: Coefficient, rho: Density, x: float, r: float, *,
                       fm: FlowMap | None = None,
                       cfg: QuadratureConfig | None = None) -> float:
    """Same ball volume as the density integral between the ball endpoints."""
    fm = _flow_map_for(a, fm, x, r)
    lo = float(fm.flow(-r, x))
    hi = float(fm.flow(r, x))
    return integrate(rho.eval_rho, lo, hi, cfg,
                     breakpoints=a.breakpoints_in(lo, hi))


@dataclass(frozen=True)
class BallVolumeCurve:
    """Volumes and doubling ratios V(x; 2r)/V(x; r) for one center."""

    center: float
    radii: np.ndarray
    volumes: np.ndarray
    doubled_volumes: np.ndarray
    doubling_ratios: np.ndarray

    def __post_init__(self):
        for name in ("radii", "volumes", "doubled_volumes", "doubling_ratios"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(np.diff(self.radii) <= 0):
            raise ValueError("radii must be strictly increasing")
        if np.any(np.diff(self.volumes) <= 0):
            raise ValueError("volumes must increase with the radius")
        if np.any(self.doubling_ratios < 1.0):
            raise ValueError("doubling ratios cannot fall below 1")


@dataclass(frozen=True)
class DoublingScan:
    curves: tuple[BallVolumeCurve, ...]
    bound: float | None
    violations: tuple[tuple[float, float, float], ...]

    @property
    def max_ratio(self) -> float:
        return max(float(np.max(c.doubling_ratios)) for c in self.curves)


def doubling_scan(a: Coefficient, rho: Density, centers, radii, *,
                  C: float | None = None, omega: float | None = None,
                  fm: FlowMap | None = None) -> DoublingScan:
    """Tabulate V(x; r), V(x; 2r) and flag ratios above 2 C^2 e^{3 omega}.

    The bound is only asserted for radii at most 1 unless omega = 0, in
    which case it covers every radius.
    """
    centers = np.atleast_1d(np.asarray(centers, dtype=float))
    radii = np.sort(np.atleast_1d(np.asarray(radii, dtype=float)))
    if len(centers) == 0 or len(radii) == 0:
        raise ValueError("centers and radii must be nonempty")
    bound = None
    if C is not None and omega is not None:
        bound = 2.0 * C**2 * np.exp(3.0 * omega)
    curves = []
    violations = []
    reach = 2.0 * float(radii[-1])
    for x in centers:
        local_fm = _flow_map_for(a, fm, float(x), reach)
        vols = np.array([ball_volume(a, rho, float(x), float(r), fm=local_fm)
                         for r in radii])
        dbl = np.array([ball_volume(a, rho, float(x), 2.0 * float(r), fm=local_fm)
                        for r in radii])
        ratios = dbl / vols
        curves.append(BallVolumeCurve(float(x), radii, vols, dbl, ratios))
        if bound is not None:
            applicable = radii <= 1.0 if omega > 0 else np.ones_like(radii, bool)
            for r, ratio in zip(radii[applicable], ratios[applicable]):
                if ratio > bound:
                    violations.append((float(x), float(r), float(ratio)))
    return DoublingScan(tuple(curves), bound, tuple(violations))


@dataclass(frozen=True)
class UniformVolumeReport:
    radii: np.ndarray
    spread: np.ndarray           # per-radius max/min of V across centers
    c_estimate: float            # smallest c with c^-2 <= V/v(r) <= c^2 ... 1
    v_of_r: np.ndarray           # geometric mean volume per radius
    c1_estimate: float           # comparability of v(r) with r
    verdict: bool
    density_product_range: tuple[float, float]
    implied_pinch: tuple[float, float]
    pinch_consistent: bool


def uniform_volume_test(a: Coefficient, rho: Density, centers, radii, *,
                        c_max: float = 10.0,
                        fm: FlowMap | None = None) -> UniformVolumeReport:
    """Test for center-independent volume growth on radii up to 1.

    Passing evidence (spread bounded by ``c_max**2``) forces the product
    a*rho into the reported pinch interval; the measured range of a*rho on
    the scanned region is reported alongside for comparison.
    """
    centers = np.atleast_1d(np.asarray(centers, dtype=float))
    radii = np.sort(np.atleast_1d(np.asarray(radii, dtype=float)))
    if np.any(radii > 1.0) or np.any(radii <= 0.0):
        raise ValueError("radii must lie in (0, 1]")
    vols = np.empty((len(centers), len(radii)))
    reach = float(radii[-1])
    lo_reach, hi_reach = np.inf, -np.inf
    for i, x in enumerate(centers):
        local_fm = _flow_map_for(a, fm, float(x), reach)
        for j, r in enumerate(radii):
            vols[i, j] = ball_volume(a, rho, float(x), float(r), fm=local_fm)
        lo_reach = min(lo_reach, float(local_fm.flow(-reach, float(x))))
        hi_reach = max(hi_reach, float(local_fm.flow(reach, float(x))))
    v_max = vols.max(axis=0)
    v_min = vols.min(axis=0)
    spread = v_max / v_min
    c_est = float(np.sqrt(np.max(spread)))
    v_of_r = np.sqrt(v_max * v_min)
    # comparability of v(r) with r itself: c1^-1 r <= v(r) <= c1 r
    c1_est = float(np.max(np.maximum(v_of_r / radii, radii / v_of_r)))
    grid = np.linspace(lo_reach, hi_reach, 4001)
    prod = np.asarray(a.eval_a(grid)) * np.asarray(rho.eval_rho(grid))
    prod_range = (float(prod.min()), float(prod.max()))
    pinch = (1.0 / (2.0 * c_est * c1_est), 0.5 * c_est * c1_est)
    slack = 1.0 + 1e-9
    consistent = (pinch[0] / slack <= prod_range[0]
                  and prod_range[1] <= pinch[1] * slack)
    return UniformVolumeReport(
        radii=radii, spread=spread, c_estimate=c_est, v_of_r=v_of_r,
        c1_estimate=c1_est, verdict=bool(c_est <= c_max),
        density_product_range=prod_range, implied_pinch=pinch,
        pinch_consistent=bool(consistent))
