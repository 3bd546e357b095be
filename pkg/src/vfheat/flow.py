"""Flow of the ODE x' = a(x) through its time coordinate.

Rather than stepping the ODE, the flow is realized as
``x -> A_inv(A(x) + t)`` where A is the antiderivative of 1/a anchored at a
reference point.  This makes the group law exact by construction.  When the
coefficient provides its exact piecewise antiderivative that is used
directly; otherwise A is materialized once over a window as per-panel
Chebyshev interpolants whose panel edges respect the coefficient's
breakpoints.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from numpy.polynomial import chebyshev as _cheb

from .coefficients import Coefficient
from .errors import SubdivisionLimit, WindowExceeded

__all__ = ["FlowMap", "time_coordinate", "flow", "flow_derivative"]

_PANEL_DEG = 24
_PANEL_FIT_TOL = 5e-13
_MAX_PANELS = 40000


class _ChebChart:
    """Panelized Chebyshev representation of A = integral of 1/a."""

    def __init__(self, coefficient: Coefficient, window: tuple[float, float]):
        lo, hi = float(window[0]), float(window[1])
        if not lo < hi:
            raise ValueError("window must be a nonempty interval")
        seed = [lo, hi]
        seed.extend(float(b) for b in coefficient.breakpoints_in(lo, hi))
        edges = list(np.unique(seed))
        # cap the seed panel width so smooth coefficients get resolved too
        widened = [edges[0]]
        for right in edges[1:]:
            left = widened[-1]
            n_cuts = int(np.ceil((right - left) / 16.0))
            widened.extend(np.linspace(left, right, n_cuts + 1)[1:])
        recip = coefficient.recip

        final_edges: list[float] = [widened[0]]
        coefs: list[np.ndarray] = []
        stack = [(widened[i], widened[i + 1]) for i in range(len(widened) - 1)]
        stack.reverse()
        while stack:
            a, b = stack.pop()
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            c = _cheb.chebinterpolate(lambda u: recip(mid + half * u), _PANEL_DEG)
            probe = np.linspace(-0.97, 0.97, _PANEL_DEG + 9)
            resid = np.max(np.abs(_cheb.chebval(probe, c)
                                  - recip(mid + half * probe)))
            scale = max(1.0, float(np.max(np.abs(c))))
            if resid > _PANEL_FIT_TOL * scale and half > 1e-13 * max(1.0, abs(mid)):
                stack.append((mid, b))
                stack.append((a, mid))
                continue
            if len(coefs) >= _MAX_PANELS:
                raise SubdivisionLimit("flow chart needs too many panels")
            final_edges.append(b)
            coefs.append(c)

        self.edges = np.asarray(final_edges)
        self.halves = 0.5 * np.diff(self.edges)
        self.mids = 0.5 * (self.edges[:-1] + self.edges[1:])
        self.icoefs = []
        totals = np.empty(len(coefs))
        for k, c in enumerate(coefs):
            ic = _cheb.chebint(c, lbnd=-1.0)
            self.icoefs.append(ic * self.halves[k])
            totals[k] = float(_cheb.chebval(1.0, ic)) * self.halves[k]
        if np.any(totals <= 0):
            raise ValueError("reciprocal coefficient must stay positive")
        self.cum = np.concatenate([[0.0], np.cumsum(totals)])
        self._recip = recip

    def time(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.edges, x, side="right") - 1,
                      0, len(self.icoefs) - 1)
        out = np.empty_like(x)
        for k in np.unique(idx):
            sel = idx == k
            u = (x[sel] - self.mids[k]) / self.halves[k]
            out[sel] = self.cum[k] + _cheb.chebval(u, self.icoefs[k])
        return out

    def position(self, tau: np.ndarray, tol: float = 1e-13) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        j = np.clip(np.searchsorted(self.cum, tau, side="right") - 1,
                    0, len(self.icoefs) - 1)
        lo = self.edges[j].copy()
        hi = self.edges[j + 1].copy()
        x = lo + (hi - lo) * np.clip(
            (tau - self.cum[j]) / (self.cum[j + 1] - self.cum[j]), 0.0, 1.0)
        active = np.ones(x.shape, dtype=bool)
        for _ in range(90):
            if not np.any(active):
                break
            xa = x[active]
            res = self.time(xa) - tau[active]
            ulp_floor = self._recip(xa) * np.spacing(np.maximum(np.abs(xa), 1.0))
            done = np.abs(res) <= np.maximum(
                tol * (1.0 + np.abs(tau[active])), 4.0 * ulp_floor)
            xn = xa - res / self._recip(xa)
            la, ha = lo[active], hi[active]
            la = np.where(res < 0, xa, la)
            ha = np.where(res > 0, xa, ha)
            bad = (xn <= la) | (xn >= ha)
            xn = np.where(bad, 0.5 * (la + ha), xn)
            lo[active], hi[active] = la, ha
            x[active] = np.where(done, xa, xn)
            idx_active = np.flatnonzero(active)
            active[idx_active[done]] = False
        return x


class FlowMap:
    """Flow of x' = a(x), anchored so the time coordinate vanishes at ``anchor``.

    ``window`` bounds the materialized chart for coefficients without an
    exact antiderivative; flow targets outside it raise
    :class:`WindowExceeded`.  Coefficients carrying an exact piecewise
    antiderivative get a global chart and ``window`` may stay None.
    """

    def __init__(self, coefficient: Coefficient, anchor: float = 0.0,
                 window: tuple[float, float] | None = None):
        self.coefficient = coefficient
        self.anchor = float(anchor)
        hint = coefficient.reciprocal_integral_hint
        if hint is not None:
            self._hint = hint
            self._chart = None
            self.window = (-np.inf, np.inf)
            self._offset = float(hint.antideriv(self.anchor))
            self._time_lo, self._time_hi = -np.inf, np.inf
            self.cached_table = np.stack([hint.edges,
                                          hint.cum - self._offset])
        else:
            if window is None:
                c_lo, c_hi = coefficient.window
                lo = max(c_lo, self.anchor - 64.0)
                hi = min(c_hi, self.anchor + 64.0)
                if np.isfinite(c_hi) and hi >= c_hi:
                    hi = c_hi * (1 - 1e-12) - 1e-12
                window = (lo, hi)
            self._hint = None
            self._chart = _ChebChart(coefficient, window)
            self.window = (float(window[0]), float(window[1]))
            self._offset = float(self._chart.time(np.array([self.anchor]))[0])
            self._time_lo = float(self._chart.cum[0]) - self._offset
            self._time_hi = float(self._chart.cum[-1]) - self._offset
            self.cached_table = np.stack([self._chart.edges,
                                          self._chart.cum - self._offset])
        if not np.all(np.diff(self.cached_table[1]) > 0):
            raise ValueError("time coordinate must be strictly increasing")

    # -- charts -------------------------------------------------------------

    def time(self, x):
        """A(x): time coordinate relative to the anchor."""
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        self._check_positions(x_arr)
        if self._hint is not None:
            out = np.asarray(self._hint.antideriv(x_arr)) - self._offset
        else:
            out = self._chart.time(x_arr) - self._offset
        return float(out[0]) if np.ndim(x) == 0 else out

    def position(self, tau):
        """Inverse time coordinate."""
        tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))
        self._check_times(tau_arr)
        if self._hint is not None:
            out = np.asarray(self._hint.antideriv_inverse(tau_arr + self._offset))
        else:
            out = self._chart.position(tau_arr + self._offset)
        return float(out[0]) if np.ndim(tau) == 0 else out

    def flow(self, t, x):
        """e^{tX} x, vectorized over x (and t if array-shaped alike)."""
        tau = self.time(np.asarray(x, dtype=float)) + np.asarray(t, dtype=float)
        return self.position(tau)

    def flow_derivative(self, t, y):
        """d/dy of the flow: a(e^{tX} y) / a(y)."""
        target = self.flow(t, y)
        return np.asarray(self.coefficient.eval_a(target)) \
            / np.asarray(self.coefficient.eval_a(np.asarray(y, dtype=float)))

    def time_bounds(self) -> tuple[float, float]:
        return (self._time_lo, self._time_hi)

    def breakpoint_times(self, tau_lo: float, tau_hi: float) -> np.ndarray:
        """Time coordinates of coefficient breakpoints inside a time range.

        Quadratures along the flow align their panels with these values so
        that every panel sees a smooth integrand.
        """
        b = self.coefficient.breakpoints
        if b is None or len(b) == 0:
            return np.empty(0)
        x_lo = self.position(float(tau_lo))
        x_hi = self.position(float(tau_hi))
        sel = b[(b > x_lo) & (b < x_hi)]
        if len(sel) == 0:
            return np.empty(0)
        return np.asarray(self.time(sel))

    # -- guards ---------------------------------------------------------------

    def _check_positions(self, x: np.ndarray):
        lo, hi = self.window
        if np.any(x < lo) or np.any(x > hi):
            raise WindowExceeded(
                f"position outside materialized window [{lo:g}, {hi:g}]")

    def _check_times(self, tau: np.ndarray):
        if np.any(tau < self._time_lo) or np.any(tau > self._time_hi):
            raise WindowExceeded(
                "target time coordinate outside the materialized window "
                f"[{self._time_lo:g}, {self._time_hi:g}]")


def time_coordinate(fm: FlowMap, x):
    return fm.time(x)


def flow(fm: FlowMap, t, x):
    return fm.flow(t, x)


def flow_derivative(fm: FlowMap, t, y):
    return fm.flow_derivative(t, y)
