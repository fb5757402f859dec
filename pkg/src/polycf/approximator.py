"""Order-K algebraic approximation of a correlation function from its CLD.

Pipeline, per interval ``[D_{i-1}, D_i]`` of the distance range:

1. build a two-sided radical interpolant ``g`` of the chord-length
   distribution that reproduces both endpoint expansions up to
   ``(r - D)**K`` (``build_second_derivative_piece``);
2. integrate it twice in closed form (``integrate_piece_twice``);
3. fix the integration constants: the innermost interval is known exactly,
   the outermost one vanishes with its slope at ``D_M``, the rest are matched
   by value and slope in a forward and a backward sweep
   (``sweep_and_match``);
4. reconcile the two sweeps at the meeting breakpoint with a polynomial bump
   that leaves all matched expansion orders untouched (``fit_correction``).

Intervals are indexed from 0 in this module; breakpoints ``D_0 .. D_M`` keep
their natural indices, so interval ``j`` is ``[D_j, D_{j+1}]``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .series import (
    LEFT,
    RIGHT,
    HalfPowerSeries,
    RadicalPiece,
    anchor_right,
    antiderivative,
    binom,
    exact_sqrt,
    half_power,
    is_exact,
    poly_add,
    poly_antiderivative,
    poly_derivative,
    poly_eval,
    poly_mul,
    poly_reflect,
    poly_scale,
    poly_shift_power,
    rebase_to_opposite_endpoint,
    reduce_to_canonical,
    series_multiply,
)

# relative size below which an interval is merged into its neighbour
DEGENERATE_INTERVAL = 1e-9
# the 2x2 correction system is refused beyond this condition number
MAX_CORRECTION_CONDITION = 1e12


class SpecError(ValueError):
    """A chord-length specification violates one of its invariants."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class MatchingPolynomialMismatch(RuntimeError):
    """The two independent solutions of the matching system disagree."""


# --------------------------------------------------------------------------
# spec types
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EndpointExpansion:
    """``sum_j a[j] |r-D|**j + b[j] |r-D|**(j+1/2)`` near one endpoint."""

    a: tuple = ()
    b: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(self.a))
        object.__setattr__(self, "b", tuple(self.b))

    @property
    def depth(self) -> int:
        """Number of complete (a_j, b_j) pairs available."""
        return min(len(self.a), len(self.b))

    def series(self, anchor, orientation: str, K: int) -> HalfPowerSeries:
        if self.depth < K + 1:
            raise SpecError(f"expansion carries {self.depth} terms, order K={K} needs {K + 1}")
        coeffs = {}
        for j in range(K + 1):
            coeffs[2 * j] = self.a[j]
            coeffs[2 * j + 1] = self.b[j]
        return HalfPowerSeries(anchor, orientation, coeffs)

    def __call__(self, offset, K: int | None = None):
        """Evaluate the (truncated) expansion at distance ``offset >= 0``."""
        n = self.depth if K is None else K + 1
        s = np.asarray(offset, dtype=float)
        out = np.zeros_like(s)
        for j in range(n):
            out = out + float(self.a[j]) * s ** j + float(self.b[j]) * s ** (j + 0.5)
        return out


@dataclass(frozen=True)
class IntervalExpansions:
    """Expansions of the CLD at both ends of one interval.

    ``right_expansion`` holds the limit ``r -> D_{i-1}+`` (left end of the
    interval), ``left_expansion`` the limit ``r -> D_i-`` (right end).
    """

    right_expansion: EndpointExpansion
    left_expansion: EndpointExpansion


def _close(x, y, tol=1e-12) -> bool:
    if is_exact(x) and is_exact(y):
        return x == y
    return abs(float(x) - float(y)) <= tol * max(1.0, abs(float(y)))


@dataclass(frozen=True)
class CldSpec:
    """Piecewise chord-length distribution of a polyhedron plus its shape constants."""

    name: str
    breakpoints: tuple
    intervals: tuple
    volume: float
    surface: float
    angularity: float
    sharpness: float

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", tuple(self.breakpoints))
        object.__setattr__(self, "intervals", tuple(self.intervals))
        self.validate()

    @property
    def M(self) -> int:
        return len(self.breakpoints) - 1

    @property
    def diameter(self):
        return self.breakpoints[-1]

    @property
    def porod_slope(self):
        """gamma'(0) = -S / 4V."""
        return -self.surface / (4 * self.volume)

    @property
    def depth(self) -> int:
        """Largest usable expansion order + 1 over the non-innermost intervals."""
        depths = [min(iv.right_expansion.depth, iv.left_expansion.depth) for iv in self.intervals[1:]]
        return min(depths, default=10**9)

    def interval(self, i: int) -> tuple:
        return self.breakpoints[i], self.breakpoints[i + 1]

    def validate(self):
        D = self.breakpoints
        if len(D) < 2:
            raise SpecError("need at least one interval (M >= 1)", "breakpoints")
        if D[0] != 0:
            raise SpecError("D_0 must be 0", "breakpoints[0]")
        for k in range(1, len(D)):
            if not D[k] > D[k - 1]:
                raise SpecError(f"non-monotone breakpoints: D_{k}={D[k]} <= D_{k - 1}={D[k - 1]}",
                                f"breakpoints[{k}]")
        if len(self.intervals) != len(D) - 1:
            raise SpecError(f"{len(self.intervals)} intervals for {len(D) - 1} breakpoint gaps", "intervals")
        if not self.volume > 0:
            raise SpecError("volume must be positive", "volume")
        if not self.surface > 0:
            raise SpecError("surface must be positive", "surface")
        first = self.intervals[0].right_expansion
        where = "intervals[0].right_expansion"
        rule = "the CLD is a first-degree polynomial on the innermost interval"
        a = list(first.a) + [0, 0]
        if not _close(a[0], self.angularity):
            raise SpecError(f"a[0]={a[0]} must equal the angularity ({rule})", where + ".a[0]")
        if not _close(a[1], 2 * self.sharpness):
            raise SpecError(f"a[1]={a[1]} must equal twice the sharpness ({rule})", where + ".a[1]")
        for j, c in enumerate(first.a[2:], start=2):
            if not _close(c, 0):
                raise SpecError(f"a[{j}]={c} must vanish ({rule})", f"{where}.a[{j}]")
        for j, c in enumerate(first.b):
            if not _close(c, 0):
                raise SpecError(f"b[{j}]={c} must vanish ({rule})", f"{where}.b[{j}]")

    def clds_linear(self, r):
        """The exact innermost CLD, angularity + 2*sharpness*r."""
        return float(self.angularity) + 2 * float(self.sharpness) * np.asarray(r, dtype=float)


def linear_first_interval(angularity, sharpness, d1) -> IntervalExpansions:
    """Expansions of the exact innermost CLD on ``[0, d1]``."""
    return IntervalExpansions(
        EndpointExpansion((angularity, 2 * sharpness), (0, 0)),
        EndpointExpansion((angularity + 2 * sharpness * d1, -2 * sharpness), (0, 0)),
    )


# --------------------------------------------------------------------------
# matching polynomial
# --------------------------------------------------------------------------

def _is_symbolic(x) -> bool:
    return hasattr(x, "free_symbols")


def _same(x, y, rtol=1e-10) -> bool:
    if _is_symbolic(x) or _is_symbolic(y):
        import sympy

        return sympy.simplify(x - y) == 0
    if is_exact(x) and is_exact(y):
        return x == y
    return abs(float(x) - float(y)) <= rtol * max(abs(float(x)), abs(float(y)), 1e-300)


def matching_polynomial_literal(K: int, delta) -> list:
    """Forward substitution in the closed combinatorial form of the matching system.

    Row ``h`` reads::

        delta_{h0} + sum_{l<=h} (-1)**(h-l) p_l delta**(K+1/2-(h-l))
                     * sum_{q<=min(K, h-l)} C(K, q) C(1/2, h-q-l) = 0
    """
    half = Fraction(1, 2)
    lead = delta ** K * exact_sqrt(delta)
    p: list = []
    for h in range(K + 1):
        acc = 1 if h == 0 else 0
        for l in range(h):
            n = h - l
            inner = sum(binom(K, q) * binom(half, n - q) for q in range(min(K, n) + 1))
            acc = acc + (-1) ** n * p[l] * half_power(delta, 2 * K + 1 - 2 * n) * inner
        p.append(-acc / lead)
    return p


def matching_polynomial_series(K: int, delta) -> list:
    """Triangular solve driven by series arithmetic.

    ``(delta - y**2)**(K+1/2)`` is obtained by re-expanding ``x**(2K+1)``
    around the opposite endpoint; the coefficients ``p_h`` then kill the
    ``y**0 .. y**2K`` terms of ``1 + (delta - y**2)**(K+1/2) * sum p_h y**2h``.
    """
    x_power = HalfPowerSeries(0, LEFT, {2 * K + 1: 1})
    factor = rebase_to_opposite_endpoint(x_power, delta, order=2 * K)
    c = [factor.coeffs.get(2 * n, 0) for n in range(K + 1)]
    p: list = []
    for m in range(K + 1):
        acc = 1 if m == 0 else 0
        for h in range(m):
            acc = acc + p[h] * c[m - h]
        p.append(-acc / c[0])
    # residual check through series multiplication
    poly = HalfPowerSeries(factor.anchor, RIGHT, {2 * h: ph for h, ph in enumerate(p)})
    residual = HalfPowerSeries.constant(1, factor.anchor, RIGHT) + series_multiply(factor, poly)
    scale = max(abs(complex(v)) for v in c) if not any(_is_symbolic(v) for v in c) else None
    for m, v in residual.coeffs.items():
        if m <= 2 * K:
            ok = _same(v, 0) if scale is None else abs(complex(v)) <= 1e-10 * max(scale, 1.0)
            if not ok:
                raise MatchingPolynomialMismatch(f"residual coefficient of y**{m} is {v}")
    return p


def solve_matching_polynomial(K: int, delta, check: bool = True) -> tuple:
    """Coefficients ``p_0 .. p_K`` of the matching polynomial for order ``K``.

    Both routes are evaluated; any disagreement raises
    :class:`MatchingPolynomialMismatch` (the series route is the reference).
    """
    if K < 0:
        raise ValueError("order K must be non-negative")
    if not (_is_symbolic(delta) or delta > 0):
        raise ValueError(f"interval length must be positive, got {delta}")
    p = matching_polynomial_series(K, delta)
    if check:
        lit = matching_polynomial_literal(K, delta)
        for h, (x, y) in enumerate(zip(p, lit)):
            if not _same(x, y):
                raise MatchingPolynomialMismatch(f"p_{h}: series route {x} != closed form {y}")
    return tuple(p)


# --------------------------------------------------------------------------
# second-derivative pieces
# --------------------------------------------------------------------------

def _check_order(spec: CldSpec, i: int, K: int):
    iv = spec.intervals[i]
    for name, e in (("right_expansion", iv.right_expansion), ("left_expansion", iv.left_expansion)):
        if e.depth < K + 1:
            raise SpecError(f"insufficient expansion order: {e.depth} terms, K={K} needs {K + 1}",
                            f"intervals[{i}].{name}")


def build_second_derivative_piece(spec: CldSpec, i: int, K: int, verify: bool = True) -> RadicalPiece:
    """Two-sided radical interpolant of the CLD on interval ``i`` (0-based).

    The innermost interval is returned exactly (the CLD is linear there).
    """
    lo, hi = spec.interval(i)
    if i == 0:
        return RadicalPiece(lo, hi, (spec.angularity + 2 * spec.sharpness * lo, 2 * spec.sharpness))
    _check_order(spec, i, K)
    delta = hi - lo
    iv = spec.intervals[i]
    near_lo = iv.right_expansion.series(lo, LEFT, K)
    near_hi = iv.left_expansion.series(hi, RIGHT, K)
    p = solve_matching_polynomial(K, delta)
    one_l = HalfPowerSeries.constant(1, lo, LEFT)
    one_r = HalfPowerSeries.constant(1, hi, RIGHT)
    # P_L is even in the right radical; rebasing integer powers is exact
    p_left = rebase_to_opposite_endpoint(HalfPowerSeries(hi, RIGHT, {2 * h: c for h, c in enumerate(p)}), delta)
    p_right = rebase_to_opposite_endpoint(HalfPowerSeries(lo, LEFT, {2 * h: c for h, c in enumerate(p)}), delta)
    left_part = (one_l + HalfPowerSeries(lo, LEFT, {2 * K + 1: 1}) * p_left) * near_lo
    right_part = (one_r + HalfPowerSeries(hi, RIGHT, {2 * K + 1: 1}) * p_right) * near_hi
    if verify:
        _verify_cross_terms(left_part, right_part, delta, K)
    return reduce_to_canonical(left_part, right_part, (lo, hi))


def _verify_cross_terms(left_part, right_part, delta, K):
    """Each half must be o(y**2K) at the opposite endpoint."""
    for part, name in ((left_part, "left"), (right_part, "right")):
        far = rebase_to_opposite_endpoint(part, delta, order=2 * K + 2)
        scale = max([abs(float(c)) for c in part.coeffs.values()] + [1e-300])
        for m, c in far.coeffs.items():
            if m <= 2 * K and abs(float(c)) > 1e-9 * scale * max(1.0, float(delta)) ** (part.order / 2):
                raise RuntimeError(f"{name} contribution leaks a y**{m} term ({c}) into the far endpoint")


# --------------------------------------------------------------------------
# CF pieces
# --------------------------------------------------------------------------

def _poly_float(p):
    return np.array([float(c) for c in p], dtype=float)


@dataclass(frozen=True)
class CorrectionTerm:
    """Bump whose second derivative is ``(r-lo)**(K+1) (hi-r)**(K+1) (alpha + beta r)``.

    Side ``"L"`` vanishes with its slope at ``hi`` (it is added to the piece
    right of the meeting point); side ``"R"`` vanishes at ``lo``.
    """

    alpha: float
    beta: float
    K: int
    left: float
    right: float
    side: str
    condition: float = float("nan")

    def __post_init__(self):
        if self.side not in ("L", "R"):
            raise ValueError("side must be 'L' or 'R'")

    @property
    def _polys(self):
        fa, fb = correction_basis(self.K, self.left, self.right, self.side)
        return poly_add(poly_scale(fa, self.alpha), poly_scale(fb, self.beta))

    def curvature_poly(self):
        ca, cb = _bump(self.K, self.left, self.right)
        return poly_add(poly_scale(ca, self.alpha), poly_scale(cb, self.beta))

    def __call__(self, r):
        s = np.asarray(r, dtype=float) - float(self.left)
        return poly_eval(_poly_float(self._polys), s)

    def slope(self, r):
        s = np.asarray(r, dtype=float) - float(self.left)
        return poly_eval(_poly_float(poly_derivative(self._polys)), s)

    def curvature(self, r):
        s = np.asarray(r, dtype=float) - float(self.left)
        return poly_eval(_poly_float(self.curvature_poly()), s)

    def max_curvature(self, n: int = 401) -> float:
        r = np.linspace(float(self.left), float(self.right), n)
        return float(np.max(np.abs(self.curvature(r))))


def _bump(K, lo, hi):
    """(s**(K+1) (delta-s)**(K+1), same times r) as polynomials in s = r - lo."""
    delta = hi - lo
    t_pow = (1,)
    for _ in range(K + 1):
        t_pow = poly_mul(t_pow, (delta, -1))
    base = poly_shift_power(t_pow, K + 1)
    return base, poly_mul(base, (lo, 1))


def correction_basis(K, lo, hi, side):
    """Double integrals of the two bump monomials, anchored per ``side``."""
    delta = hi - lo
    out = []
    for c in _bump(K, lo, hi):
        g = poly_antiderivative(poly_antiderivative(c))
        if side == "L":
            v = poly_eval(g, delta)
            sl = poly_eval(poly_derivative(g), delta)
            g = poly_add(g, (-v + sl * delta, -sl))
        out.append(g)
    return tuple(out)


@dataclass(frozen=True)
class CfPiece:
    """CF approximation on one interval: ``body(r) + A + B r (+ correction)``.

    ``body`` is the double antiderivative of ``second`` that vanishes with
    its slope at the anchoring endpoint.
    """

    second: RadicalPiece
    body: RadicalPiece
    A: float = 0
    B: float = 0
    anchoring: str = LEFT
    correction: CorrectionTerm | None = None
    exact: bool = False

    def __post_init__(self):
        if self.anchoring not in (LEFT, RIGHT):
            raise ValueError("anchoring must be 'left' or 'right'")
        for c in (self.A, self.B):
            if not math.isfinite(float(c)):
                raise ValueError("integration constants must be finite")

    @property
    def left(self):
        return self.body.left

    @property
    def right(self):
        return self.body.right

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = self.body(r) + float(self.A) + float(self.B) * r
        if self.correction is not None:
            out = out + self.correction(r)
        return out

    def slope(self, r):
        r = np.asarray(r, dtype=float)
        out = self.body.slope(r)[0] + float(self.B)
        if self.correction is not None:
            out = out + self.correction.slope(r)
        return out

    def curvature(self, r):
        r = np.asarray(r, dtype=float)
        out = self.second(r)
        if self.correction is not None:
            out = out + self.correction.curvature(r)
        return out

    def interpolant(self, r):
        """The interpolated CLD without the correction bump."""
        return self.second(np.asarray(r, dtype=float))

    def value_at(self, end: str):
        if end == LEFT:
            r, v = self.left, self.body.value_at_left()
        else:
            r, v = self.right, self.body.value_at_right()
        out = v + self.A + self.B * r
        if self.correction is not None:
            out = out + float(self.correction(float(r)))
        return out

    def slope_at(self, end: str):
        v = self.body.slope_at_left() if end == LEFT else self.body.slope_at_right()
        out = v + self.B
        if self.correction is not None:
            r = self.left if end == LEFT else self.right
            out = out + float(self.correction.slope(float(r)))
        return out


def integrate_piece_twice(g: RadicalPiece, anchoring: str = LEFT) -> CfPiece:
    """Closed-form double integral of ``g`` with zero constants at the anchor."""
    body = antiderivative(antiderivative(g))
    if anchoring == RIGHT:
        body = anchor_right(body)
    elif anchoring != LEFT:
        raise ValueError("anchoring must be 'left' or 'right'")
    return CfPiece(second=g, body=body, anchoring=anchoring)


def seed_first_interval(spec: CldSpec) -> CfPiece:
    """Exact CF on the innermost interval: 1 - S r/4V + A r^2/2 + S' r^3/3."""
    g = build_second_derivative_piece(spec, 0, 0)
    piece = integrate_piece_twice(g, LEFT)
    # D_0 = 0 so the left-anchored body is exactly A r^2/2 + S' r^3/3
    return replace(piece, A=1, B=spec.porod_slope, exact=True)


def seed_last_interval(spec: CldSpec, K: int) -> CfPiece:
    """Outermost piece: vanishes with its slope at the diameter."""
    if spec.M < 2:
        raise ValueError("with a single interval the innermost seed is the whole CF")
    g = build_second_derivative_piece(spec, spec.M - 1, K)
    return integrate_piece_twice(g, RIGHT)


# --------------------------------------------------------------------------
# assembled CF
# --------------------------------------------------------------------------

@dataclass
class Diagnostics:
    meet_index: int | None = None
    left_value: float | None = None
    right_value: float | None = None
    mismatch_value: float | None = None
    mismatch_slope: float | None = None
    side: str | None = None
    forced_side: bool = False
    alpha: float | None = None
    beta: float | None = None
    condition: float | None = None
    continuity: list = field(default_factory=list)
    end_value: float | None = None
    end_slope: float | None = None
    min_value: float | None = None
    notes: list = field(default_factory=list)


@dataclass
class PiecewiseCf:
    """Assembled CF approximation; callable on ``[0, D_M]`` (zero beyond)."""

    pieces: list
    spec: CldSpec
    orders: tuple
    diagnostics: Diagnostics = field(default_factory=Diagnostics)

    @property
    def breakpoints(self) -> np.ndarray:
        return np.array([float(p.left) for p in self.pieces] + [float(self.pieces[-1].right)])

    @property
    def diameter(self) -> float:
        return float(self.pieces[-1].right)

    def _dispatch(self, r, method):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise ValueError("the CF is defined for r >= 0")
        out = np.zeros_like(r)
        D = self.breakpoints
        idx = np.clip(np.searchsorted(D, r, side="right") - 1, 0, len(self.pieces) - 1)
        inside = r <= D[-1]
        for j, piece in enumerate(self.pieces):
            mask = inside & (idx == j)
            if np.any(mask):
                out[mask] = getattr(piece, method)(r[mask])
        return out if out.ndim else float(out)

    def __call__(self, r):
        return self._dispatch(r, "__call__")

    def derivative(self, r):
        return self._dispatch(r, "slope")

    def second_derivative(self, r):
        """The approximate CLD (plus any correction bump)."""
        return self._dispatch(r, "curvature")

    def interpolant(self, r):
        """The CLD interpolant of every interval, without the correction bump."""
        return self._dispatch(r, "interpolant")

    def continuity_residuals(self) -> list:
        """``(D_j, value jump, slope jump)`` at every interior breakpoint."""
        out = []
        for a, b in zip(self.pieces[:-1], self.pieces[1:]):
            dv = float(b.value_at(LEFT)) - float(a.value_at(RIGHT))
            ds = float(b.slope_at(LEFT)) - float(a.slope_at(RIGHT))
            out.append((float(a.right), dv, ds))
        return out


def _normalise_orders(spec: CldSpec, orders) -> tuple:
    if orders is None:
        orders = 0
    if isinstance(orders, int):
        orders = (orders,) * spec.M
    orders = tuple(int(k) for k in orders)
    if len(orders) != spec.M:
        raise ValueError(f"need one order per interval: got {len(orders)} for M={spec.M}")
    if any(k < 0 for k in orders):
        raise ValueError("orders must be non-negative")
    for i in range(1, spec.M):
        _check_order(spec, i, orders[i])
    return orders


def _match_left(piece: CfPiece, prev: CfPiece) -> CfPiece:
    """Constants of a left-anchored piece from the previous piece at the shared point."""
    d = piece.left
    B = prev.slope_at(RIGHT)
    A = prev.value_at(RIGHT) - B * d
    return replace(piece, A=A, B=B)


def _match_right(piece: CfPiece, nxt: CfPiece) -> CfPiece:
    """Constants of a right-anchored piece from the next piece at the shared point."""
    d = piece.right
    B = nxt.slope_at(LEFT)
    A = nxt.value_at(LEFT) - B * d
    return replace(piece, A=A, B=B)


def sweep_and_match(spec: CldSpec, orders=None, meet_index: int | None = None) -> PiecewiseCf:
    """Forward sweep up to ``D_meet`` and backward sweep down to it, uncorrected.

    The value/slope mismatch at ``D_meet`` is stored in the diagnostics.
    """
    orders = _normalise_orders(spec, orders)
    M = spec.M
    if M == 1:
        return PiecewiseCf([seed_first_interval(spec)], spec, orders, Diagnostics())
    if meet_index is None:
        meet_index = math.ceil(M / 2)
    if not 1 <= meet_index <= M - 1:
        raise ValueError(f"meet index must lie in [1, {M - 1}], got {meet_index}")
    pieces: list = [None] * M
    pieces[0] = seed_first_interval(spec)
    for j in range(1, meet_index):
        g = build_second_derivative_piece(spec, j, orders[j])
        pieces[j] = _match_left(integrate_piece_twice(g, LEFT), pieces[j - 1])
    pieces[M - 1] = seed_last_interval(spec, orders[M - 1])
    for j in range(M - 2, meet_index - 1, -1):
        g = build_second_derivative_piece(spec, j, orders[j])
        pieces[j] = _match_right(integrate_piece_twice(g, RIGHT), pieces[j + 1])
    left, right = pieces[meet_index - 1], pieces[meet_index]
    diag = Diagnostics(meet_index=meet_index)
    diag.left_value = float(left.value_at(RIGHT))
    diag.right_value = float(right.value_at(LEFT))
    diag.mismatch_value = diag.left_value - diag.right_value
    diag.mismatch_slope = float(left.slope_at(RIGHT)) - float(right.slope_at(LEFT))
    return PiecewiseCf(pieces, spec, orders, diag)


def fit_correction(target_value, target_slope, piece: CfPiece, K: int, side: str = "L"):
    """Add a bump to ``piece`` so it meets ``(target_value, target_slope)``.

    Side ``"L"`` corrects the piece to the right of the meeting point (the
    match happens at its left end, the bump vanishes at its right end); side
    ``"R"`` corrects the piece to the left.  Returns ``(term, corrected)``.
    """
    lo, hi = piece.left, piece.right
    end = LEFT if side == "L" else RIGHT
    at = float(lo if side == "L" else hi)
    fa, fb = correction_basis(K, lo, hi, side)
    s = at - float(lo)
    mat = np.array([
        [poly_eval(_poly_float(fa), s), poly_eval(_poly_float(fb), s)],
        [poly_eval(_poly_float(poly_derivative(fa)), s), poly_eval(_poly_float(poly_derivative(fb)), s)],
    ])
    rhs = np.array([float(target_value) - float(piece.value_at(end)),
                    float(target_slope) - float(piece.slope_at(end))])
    cond = np.linalg.cond(mat)
    if not np.isfinite(cond) or cond > MAX_CORRECTION_CONDITION:
        raise np.linalg.LinAlgError(f"correction system is ill-conditioned (cond={cond:.3g})")
    alpha, beta = np.linalg.solve(mat, rhs)
    term = CorrectionTerm(float(alpha), float(beta), K, lo, hi, side, float(cond))
    return term, replace(piece, correction=term)


def choose_correction_side(left_value, right_value, left_flatness=None, right_flatness=None) -> str:
    """Which neighbour to correct at the meeting breakpoint: ``"left"`` or ``"right"``.

    A negative CF value must be the corrected one; if both are negative the
    larger violation is corrected; otherwise the flatter correction wins
    (smaller maximum of the added second derivative).
    """
    lneg, rneg = left_value < 0, right_value < 0
    if lneg and not rneg:
        return "left"
    if rneg and not lneg:
        return "right"
    if lneg and rneg:
        return "left" if left_value <= right_value else "right"
    if left_flatness is None or right_flatness is None:
        raise ValueError("both values are non-negative: flatness measures are required")
    return "left" if left_flatness <= right_flatness else "right"


def _merge_degenerate(spec: CldSpec) -> CldSpec:
    D = list(spec.breakpoints)
    intervals = list(spec.intervals)
    tol = DEGENERATE_INTERVAL * float(D[-1])
    j = 1
    while j < len(intervals):
        if float(D[j + 1] - D[j]) < tol:
            warnings.warn(f"interval [{D[j]}, {D[j + 1]}] is degenerate; merged into its neighbour")
            if j == len(intervals) - 1:
                # outermost: keep the outer end, take the inner expansion of the previous interval
                intervals[j - 1] = IntervalExpansions(intervals[j - 1].right_expansion,
                                                      intervals[j].left_expansion)
                del D[j]
            else:
                intervals[j + 1] = IntervalExpansions(intervals[j].right_expansion,
                                                      intervals[j + 1].left_expansion)
                del D[j + 1]
            del intervals[j]
            continue
        j += 1
    if float(D[1] - D[0]) < tol:
        raise SpecError("innermost interval is degenerate", "breakpoints[1]")
    if len(D) == len(spec.breakpoints):
        return spec
    return replace(spec, breakpoints=tuple(D), intervals=tuple(intervals))


def approximate_cf(spec: CldSpec, orders=None, meet_index: int | None = None,
                   side: str | None = None) -> PiecewiseCf:
    """Full order-K approximation of the CF described by ``spec``.

    ``orders`` is an int or one value per interval; ``side`` forces which
    neighbour gets the correction (``"left"`` or ``"right"``).
    """
    spec = _merge_degenerate(spec)
    cf = sweep_and_match(spec, orders, meet_index)
    diag = cf.diagnostics
    if spec.M > 1:
        i = diag.meet_index
        left, right = cf.pieces[i - 1], cf.pieces[i]
        candidates = {}
        candidates["right"] = fit_correction(left.value_at(RIGHT), left.slope_at(RIGHT),
                                             right, cf.orders[i], "L")
        if not left.exact:
            candidates["left"] = fit_correction(right.value_at(LEFT), right.slope_at(LEFT),
                                                left, cf.orders[i - 1], "R")
        flat = {k: v[0].max_curvature() for k, v in candidates.items()}
        chosen = side or choose_correction_side(diag.left_value, diag.right_value,
                                                flat.get("left", math.inf), flat["right"])
        if chosen not in candidates:
            diag.notes.append("the innermost piece is exact and is never corrected")
            diag.forced_side = True
            chosen = "right"
        term, fixed = candidates[chosen]
        cf.pieces[i if chosen == "right" else i - 1] = fixed
        diag.side = chosen
        diag.alpha, diag.beta, diag.condition = term.alpha, term.beta, term.condition
    last = cf.pieces[-1]
    diag.end_value = float(last.value_at(RIGHT))
    diag.end_slope = float(last.slope_at(RIGHT))
    diag.continuity = cf.continuity_residuals()
    grid = np.linspace(0.0, cf.diameter, 2001)
    diag.min_value = float(np.min(cf(grid)))
    if diag.min_value < 0:
        diag.notes.append(f"CF dips negative (min {diag.min_value:.3g}); left unclipped")
    return cf


def scale_spec(spec: CldSpec, factor) -> CldSpec:
    """Spec of the same shape with all lengths multiplied by ``factor``.

    With ``gamma(r) = g(r / L)`` the CLD scales as ``L**-2``, so an expansion
    coefficient of ``|r - D|**p`` picks up ``L**-(p + 2)``.
    """
    L = factor
    if not L > 0:
        raise ValueError("scale factor must be positive")

    def exp(e: EndpointExpansion) -> EndpointExpansion:
        a = tuple(c * L ** -(j + 2) for j, c in enumerate(e.a))
        b = tuple(c * half_power(L, -(2 * j + 5)) for j, c in enumerate(e.b))
        return EndpointExpansion(a, b)

    intervals = tuple(IntervalExpansions(exp(iv.right_expansion), exp(iv.left_expansion))
                      for iv in spec.intervals)
    return CldSpec(spec.name, tuple(d * L for d in spec.breakpoints), intervals,
                   spec.volume * float(L) ** 3, spec.surface * float(L) ** 2,
                   spec.angularity * L ** -2, spec.sharpness * L ** -3)
