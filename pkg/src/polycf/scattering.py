"""Form factors of piecewise correlation functions.

``I(q) = 4 pi int_0^{D_M} gamma(r) r^2 sinc(q r) dr``, so that ``I(0) = V``.

Each subinterval is split at its midpoint and the halves are mapped with
``r = a + t^2`` and ``r = b - t^2``; half-integer endpoint powers become
integer powers of ``t`` and composite Gauss-Legendre converges
geometrically.  The number of panels grows with ``q * width`` so the
oscillation is resolved at every ``q``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

FOUR_PI = 4.0 * math.pi
SMALL_QR = 1e-4


def sinc(x):
    """sin(x)/x with a series branch for |x| < 1e-4."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < SMALL_QR
    xs = np.where(small, 1.0, x)
    x2 = x * x
    return np.where(small, 1.0 - x2 / 6.0 + x2 * x2 / 120.0, np.sin(xs) / xs)


@dataclass(frozen=True)
class QuadratureConfig:
    nodes: int = 24               # Gauss nodes per panel
    panels_per_radian: float = 0.25   # panels per unit of q * half-width (in t^2 units)
    min_panels: int = 2


@dataclass
class IntensityCurve:
    q: np.ndarray
    intensity: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.intensity = np.asarray(self.intensity, dtype=float)
        if self.q.shape != self.intensity.shape:
            raise ValueError("q and I must have the same shape")
        if not np.all(np.isfinite(self.intensity)):
            raise ValueError("intensity must be finite")

    @property
    def porod(self) -> np.ndarray:
        return self.q ** 4 * self.intensity


def _half_nodes(length: float, q: float, cfg: QuadratureConfig, gx, gw):
    """Nodes t in [0, sqrt(length)] and weights for the substituted integral."""
    T = math.sqrt(length)
    panels = max(cfg.min_panels, int(math.ceil(cfg.panels_per_radian * q * length)) + cfg.min_panels)
    edges = T * np.sqrt(np.linspace(0.0, 1.0, panels + 1))  # uniform in r, graded in t
    a, b = edges[:-1], edges[1:]
    t = (0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * gx).ravel()
    w = (0.5 * (b - a)[:, None] * gw).ravel()
    return t, w


def transform(func: Callable, breakpoints: Sequence[float], q, cfg: QuadratureConfig = QuadratureConfig()):
    """``4 pi int func(r) r^2 sinc(q r) dr`` over the union of the subintervals."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    D = np.asarray(breakpoints, dtype=float)
    gx, gw = np.polynomial.legendre.leggauss(cfg.nodes)
    out = np.zeros(len(q))
    for k, qk in enumerate(q):
        total = []
        for a, b in zip(D[:-1], D[1:]):
            m = 0.5 * (a + b)
            t, w = _half_nodes(m - a, qk, cfg, gx, gw)
            for r in (a + t * t, b - t * t):
                vals = np.asarray(func(r), dtype=float)
                if not np.all(np.isfinite(vals)):
                    raise FloatingPointError(f"non-finite integrand on [{a:.6g}, {b:.6g}] at q={qk:.6g}")
                total.append(np.sum(w * 2.0 * t * vals * r * r * sinc(qk * r)))
        out[k] = FOUR_PI * math.fsum(total)
    return out


def quadrature_nodes(breakpoints: Sequence[float], qmax: float, cfg: QuadratureConfig = QuadratureConfig()):
    """Fixed nodes ``r`` and weights ``w`` resolving every ``q <= qmax``.

    ``4 pi sum(w * gamma(r) * r**2 * sinc(q r))`` then approximates I(q), so
    an expensive CF (an oracle, say) is sampled once for a whole q grid.
    """
    D = np.asarray(breakpoints, dtype=float)
    gx, gw = np.polynomial.legendre.leggauss(cfg.nodes)
    rs, ws = [], []
    for a, b in zip(D[:-1], D[1:]):
        m = 0.5 * (a + b)
        t, w = _half_nodes(m - a, qmax, cfg, gx, gw)
        rs += [a + t * t, b - t * t]
        ws += [2.0 * t * w, 2.0 * t * w]
    return np.concatenate(rs), np.concatenate(ws)


def transform_tabulated(r, w, values, q) -> np.ndarray:
    """I(q) from CF values tabulated on :func:`quadrature_nodes`."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    kern = np.asarray(w) * np.asarray(values, dtype=float) * np.asarray(r) ** 2
    return FOUR_PI * (sinc(q[:, None] * np.asarray(r)[None, :]) @ kern)


def intensity(cf, q_grid, cfg: QuadratureConfig = QuadratureConfig(), label: str = "") -> IntensityCurve:
    """Form factor of a piecewise CF (anything callable with a ``breakpoints`` attribute)."""
    vals = transform(cf, cf.breakpoints, q_grid, cfg)
    return IntensityCurve(np.asarray(q_grid, dtype=float), vals,
                          {"source": label or type(cf).__name__, "nodes": cfg.nodes,
                           "panels_per_radian": cfg.panels_per_radian,
                           "diameter": float(np.asarray(cf.breakpoints)[-1])})


class CfDifference:
    """Pointwise difference of two CFs on the union of their breakpoints.

    Transforming the difference directly keeps the quadrature error
    proportional to the (small) difference instead of to either CF.
    """

    def __init__(self, first, second):
        self.first, self.second = first, second
        pts = np.concatenate([np.asarray(first.breakpoints), np.asarray(second.breakpoints)])
        pts = np.unique(np.round(pts, 14))
        self.breakpoints = pts

    def __call__(self, r):
        return np.asarray(self.first(r)) - np.asarray(self.second(r))


def intensity_difference(reference, approx, q_grid, cfg: QuadratureConfig = QuadratureConfig()) -> IntensityCurve:
    return intensity(CfDifference(reference, approx), q_grid, cfg, label="difference")


def default_q_grid(diameter: float, n: int = 400, qmax_factor: float = 200.0) -> np.ndarray:
    """q = 0 plus a logarithmic grid from 0.1/D to qmax_factor/D."""
    return np.concatenate([[0.0], np.geomspace(0.1 / diameter, qmax_factor / diameter, n - 1)])


def sum_rule_integral(cf, cfg: QuadratureConfig = QuadratureConfig()) -> float:
    """4 pi int gamma r^2 dr, i.e. I(0)."""
    return float(transform(cf, cf.breakpoints, [0.0], cfg)[0])


@dataclass
class PorodData:
    q: np.ndarray
    porod: np.ndarray
    running_mean: np.ndarray

    def plateau(self, qmin: float, qmax: float) -> float:
        sel = (self.q >= qmin) & (self.q <= qmax)
        if not np.any(sel):
            raise ValueError("no grid points in the plateau window")
        # trapezoid mean over the window is insensitive to grid density
        return float(np.trapezoid(self.porod[sel], self.q[sel]) / (self.q[sel][-1] - self.q[sel][0]))


def porod_curve(curve: IntensityCurve, window: float | None = None) -> PorodData:
    """q^4 I(q) with a running mean over ``window`` (in q units, default ~ 2 pi / D)."""
    q, p = curve.q, curve.porod
    D = curve.meta.get("diameter")
    w = window if window is not None else (2 * math.pi / D if D else 0.1 * (q.max() - q.min()))
    run = np.empty_like(p)
    for i, qi in enumerate(q):
        sel = np.abs(q - qi) <= w / 2
        run[i] = p[sel].mean()
    return PorodData(q, p, run)


@dataclass
class OrderEstimate:
    exponent: float | None
    stderr: float | None
    exact: bool
    q_peaks: np.ndarray
    peaks: np.ndarray
    decades: float


def envelope(q, values, window: float):
    """Local maxima of |values| over consecutive windows of width ``window`` in q."""
    q = np.asarray(q)
    a = np.abs(np.asarray(values))
    edges = np.arange(q.min(), q.max() + window, window)
    qs, ps = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (q >= lo) & (q < hi)
        if np.count_nonzero(sel) < 3:
            continue
        j = np.argmax(a[sel])
        qs.append(q[sel][j])
        ps.append(a[sel][j])
    return np.array(qs), np.array(ps)


def asymptotic_order(reference: IntensityCurve, approx: IntensityCurve | None = None,
                     q_window=None, period: float | None = None) -> OrderEstimate:
    """Log-log slope of the oscillation envelope of ``|I_ref - I_approx|``.

    With ``approx=None`` the ``reference`` curve is taken to be the difference
    already.  ``period`` is the envelope window (default pi / D_M from the
    metadata).
    """
    if approx is None:
        q, diff = reference.q, reference.intensity
    else:
        if reference.q.shape != approx.q.shape or not np.allclose(reference.q, approx.q):
            raise ValueError("curves must share the same q grid")
        q, diff = reference.q, reference.intensity - approx.intensity
    lo, hi = (q_window if q_window is not None else (q[q > 0].min(), q.max()))
    sel = (q >= lo) & (q <= hi)
    if np.all(diff[sel] == 0):
        return OrderEstimate(None, None, True, np.array([]), np.array([]), 0.0)
    decades = math.log10(hi / lo)
    if decades < 1:
        warnings.warn(f"asymptotic window spans only {decades:.2f} decades")
    D = reference.meta.get("diameter")
    width = period if period is not None else (math.pi / D if D else (hi - lo) / 50)
    qp, pk = envelope(q[sel], diff[sel], width)
    keep = pk > 0
    qp, pk = qp[keep], pk[keep]
    X = np.column_stack([np.ones_like(qp), np.log(qp)])
    coef, res, *_ = np.linalg.lstsq(X, np.log(pk), rcond=None)
    resid = np.log(pk) - X @ coef
    dof = max(len(pk) - 2, 1)
    cov = np.linalg.inv(X.T @ X) * float(resid @ resid) / dof
    return OrderEstimate(float(coef[1]), float(math.sqrt(cov[1, 1])), False, qp, pk, decades)
