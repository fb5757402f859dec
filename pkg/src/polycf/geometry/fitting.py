"""Endpoint-expansion fits, shape constants and oracle-built CLD specs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..approximator import CldSpec, EndpointExpansion, IntervalExpansions, linear_first_interval
from .features import enumerate_breakpoints
from .oracle import DEFAULT_RULE, AngularRule, cf_oracle
from .polyhedron import ConvexPolyhedron

MAX_FIT_CONDITION = 1e12
MIN_SPREAD = 10.0


class FitError(ValueError):
    pass


@dataclass
class ExpansionFit:
    """Coefficients of ``sum a_j s^j + b_j s^(j+1/2)`` with their covariance."""

    a: np.ndarray
    b: np.ndarray
    cov: np.ndarray        # ordered a_0, b_0, a_1, b_1, ...
    condition: float
    residual: float        # max |fit - data|
    chi2: float

    @property
    def a_err(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov))[0::2]

    @property
    def b_err(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov))[1::2]

    def expansion(self) -> EndpointExpansion:
        return EndpointExpansion(tuple(float(x) for x in self.a), tuple(float(x) for x in self.b))


def fit_endpoint_expansion(offsets, values, K: int, sigma=None, extra_terms: int = 3) -> ExpansionFit:
    """Weighted least-squares fit of a half-power expansion in ``s = |r - D|``.

    ``extra_terms`` higher orders are fitted and discarded to absorb the
    truncation error; the returned arrays hold ``j = 0..K``.
    """
    s = np.asarray(offsets, dtype=float)
    y = np.asarray(values, dtype=float)
    if np.any(s <= 0):
        raise FitError("offsets must be strictly positive distances from the endpoint")
    J = K + extra_terms
    need = max(4 * (K + 1), 2 * (J + 1) + 2)
    if len(s) < need:
        raise FitError(f"{len(s)} samples are too few for K={K}; use at least {need}")
    spread = s.max() / s.min()
    if spread < MIN_SPREAD:
        raise FitError(f"offsets span only a factor {spread:.3g}; use a geometric cascade "
                       f"covering at least a factor {MIN_SPREAD:g}")
    w = np.ones_like(y) if sigma is None else 1.0 / np.asarray(sigma, dtype=float)
    smax = s.max()
    x = s / smax
    powers = np.array([p for j in range(J + 1) for p in (j, j + 0.5)])
    X = x[:, None] ** powers[None, :]
    Xw = X * w[:, None]
    cond = float(np.linalg.cond(Xw))
    if not np.isfinite(cond) or cond > MAX_FIT_CONDITION:
        raise FitError(f"design matrix condition {cond:.3g} exceeds {MAX_FIT_CONDITION:g}; "
                       "spread the offsets geometrically or lower extra_terms")
    coef, *_ = np.linalg.lstsq(Xw, y * w, rcond=None)
    resid = X @ coef - y
    dof = max(len(y) - len(coef), 1)
    chi2 = float(np.sum((resid * w) ** 2) / dof)
    cov = np.linalg.inv(Xw.T @ Xw) * (max(chi2, 1.0) if sigma is not None else chi2)
    scale = smax ** -powers
    coef = coef * scale
    cov = cov * np.outer(scale, scale)
    n = 2 * (K + 1)
    return ExpansionFit(coef[0:n:2], coef[1:n:2], cov[:n, :n], cond, float(np.max(np.abs(resid))), chi2)


def endpoint_offsets(length: float, n: int = 28, reach: float = 0.1, decades: float = 4.0) -> np.ndarray:
    return reach * length * np.geomspace(10.0 ** -decades, 1.0, n)


def sample_endpoint(p: ConvexPolyhedron, D: float, side: str, length: float,
                    rule: AngularRule = DEFAULT_RULE, n: int = 28):
    """Oracle CLD on a one-sided geometric cascade; ``side`` is where the samples lie."""
    s = endpoint_offsets(length, n)
    r = D + s if side == "right" else D - s
    out = cf_oracle(p, r, rule)
    sig = np.maximum(out.d2_err, 1e-13 * max(1.0, float(np.max(np.abs(out.d2)))))
    return s, out.d2, sig


@dataclass
class ShapeConstants:
    surface: float
    volume: float
    angularity: float
    sharpness: float
    angularity_err: float
    sharpness_err: float
    linearity_residual: float


def shape_constants(p: ConvexPolyhedron, d1: float, rule: AngularRule = DEFAULT_RULE,
                    window=(0.05, 0.95), n: int = 12) -> ShapeConstants:
    """S, V from the mesh; angularity and sharpness from a linear fit of the oracle CLD on (0, D_1)."""
    r = d1 * np.linspace(window[0], window[1], n)
    out = cf_oracle(p, r, rule)
    sig = np.maximum(out.d2_err, 1e-13 * max(1.0, float(np.max(np.abs(out.d2)))))
    X = np.column_stack([np.ones_like(r), r]) / sig[:, None]
    coef, *_ = np.linalg.lstsq(X, out.d2 / sig, rcond=None)
    resid = out.d2 - (coef[0] + coef[1] * r)
    cov = np.linalg.inv(X.T @ X) * max(1.0, float(np.sum((resid / sig) ** 2) / (n - 2)))
    if np.max(np.abs(resid) / sig) > 5.0:
        raise FitError(f"CLD on (0, {d1:.6g}) is not linear: residual "
                       f"{np.max(np.abs(resid)):.3g} exceeds 5 sigma")
    err = np.sqrt(np.diag(cov))
    return ShapeConstants(p.surface, p.volume, float(coef[0]), float(coef[1] / 2), float(err[0]),
                          float(err[1] / 2), float(np.max(np.abs(resid))))


def build_cld_spec(p: ConvexPolyhedron, depth: int = 3, breakpoints=None,
                   rule: AngularRule = DEFAULT_RULE, n: int = 28) -> CldSpec:
    """CldSpec with ``depth`` fitted (a_j, b_j) pairs at every interior endpoint."""
    D = np.asarray(enumerate_breakpoints(p, rule) if breakpoints is None else breakpoints, dtype=float)
    D = np.concatenate([[0.0], D[D > 0]])
    sc = shape_constants(p, float(D[1]), rule)
    intervals = [linear_first_interval(sc.angularity, sc.sharpness, float(D[1]))]
    for i in range(1, len(D) - 1):
        lo, hi = float(D[i]), float(D[i + 1])
        L = hi - lo
        fits = []
        for anchor, side in ((lo, "right"), (hi, "left")):
            s, y, sig = sample_endpoint(p, anchor, side, L, rule, n)
            fits.append(fit_endpoint_expansion(s, y, depth - 1, sig))
        intervals.append(IntervalExpansions(fits[0].expansion(), fits[1].expansion()))
    return CldSpec(p.name, tuple(float(x) for x in D), tuple(intervals), p.volume, p.surface,
                   sc.angularity, sc.sharpness)
