"""Exact algebra on sums of half-integer powers anchored at interval endpoints.

Two objects live here:

``HalfPowerSeries``
    A finite sum ``sum_m c_m * t**(m/2)`` where ``t = r - anchor`` (left
    orientation) or ``t = anchor - r`` (right orientation).

``RadicalPiece``
    The canonical form of a function on ``[left, right]``::

        poly(s) + sqrt(s) * A(s) + sqrt(t) * B(t),   s = r - left, t = right - r

    Integer powers always live in ``poly`` (rebased to the left endpoint),
    only half-odd powers carry a radical.

Coefficients may be ints, ``Fraction`` or floats.  Arithmetic stays exact as
long as the inputs are exact and no square root of a non-square rational is
needed; otherwise it silently falls back to floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Number
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

LEFT = "left"
RIGHT = "right"

# relative slack when checking that r lies inside a piece's interval
_DOMAIN_SLACK = 1e-12


# --------------------------------------------------------------------------
# scalar helpers
# --------------------------------------------------------------------------

def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def exact_sqrt(x):
    """Square root that stays rational when ``x`` is a rational square."""
    if is_exact(x):
        x = Fraction(x)
        if x < 0:
            raise ValueError("square root of a negative length")
        n, d = x.numerator, x.denominator
        rn, rd = math.isqrt(n), math.isqrt(d)
        if rn * rn == n and rd * rd == d:
            return Fraction(rn, rd)
        return math.sqrt(n / d)
    if isinstance(x, float):
        return math.sqrt(x)
    # sympy and friends know how to take their own roots
    return x ** Fraction(1, 2)


def half_power(x, m: int):
    """``x ** (m / 2)`` for integer ``m``, exact when possible."""
    if is_exact(x) and m < 0:
        # int ** negative int is a float; keep rationals rational
        x = Fraction(x)
    if m % 2 == 0:
        return x ** (m // 2)
    return exact_sqrt(x) * x ** ((m - 1) // 2)


def binom(x, n: int):
    """Generalised binomial coefficient ``x choose n`` for rational ``x``."""
    out = Fraction(1)
    for i in range(n):
        out = out * (x - i) / (i + 1)
    return out


def _sum(values):
    values = list(values)
    if any(isinstance(v, float) for v in values):
        return math.fsum(values)
    total = 0
    for v in values:
        total = total + v
    return total


def _is_zero(c) -> bool:
    try:
        return c == 0
    except TypeError:  # pragma: no cover - exotic number types
        return False


# --------------------------------------------------------------------------
# dense polynomial helpers (lists of coefficients, lowest power first)
# --------------------------------------------------------------------------

def poly_trim(p: Sequence) -> tuple:
    p = list(p)
    while p and _is_zero(p[-1]):
        p.pop()
    return tuple(p)


def poly_add(a: Sequence, b: Sequence) -> tuple:
    n = max(len(a), len(b))
    out = []
    for i in range(n):
        x = a[i] if i < len(a) else 0
        y = b[i] if i < len(b) else 0
        out.append(x + y)
    return poly_trim(out)


def poly_scale(a: Sequence, c) -> tuple:
    return poly_trim([c * x for x in a])


def poly_mul(a: Sequence, b: Sequence) -> tuple:
    if not a or not b:
        return ()
    terms = [[] for _ in range(len(a) + len(b) - 1)]
    for i, x in enumerate(a):
        if _is_zero(x):
            continue
        for j, y in enumerate(b):
            terms[i + j].append(x * y)
    return poly_trim([_sum(t) if t else 0 for t in terms])


def poly_shift_power(a: Sequence, k: int) -> tuple:
    """Multiply by ``x**k``."""
    if not a:
        return ()
    return poly_trim([0] * k + list(a))


def poly_reflect(a: Sequence, delta) -> tuple:
    """Rewrite ``sum a_k t**k`` with ``t = delta - s`` as a polynomial in ``s``."""
    out: tuple = ()
    base = (delta, -1)
    power: tuple = (1,)
    for k, c in enumerate(a):
        if k:
            power = poly_mul(power, base)
        if not _is_zero(c):
            out = poly_add(out, poly_scale(power, c))
    return out


def poly_eval(a: Sequence, x):
    """Horner evaluation; works for scalars (exact or float) and arrays."""
    out = 0
    for c in reversed(a):
        out = out * x + c
    return out


def poly_derivative(a: Sequence) -> tuple:
    return poly_trim([k * a[k] for k in range(1, len(a))])


def poly_antiderivative(a: Sequence) -> tuple:
    """Antiderivative vanishing at zero."""
    if not a:
        return ()
    return poly_trim([0] + [_div(c, k + 1) for k, c in enumerate(a)])


def _div(c, n):
    if is_exact(c):
        return Fraction(c) / n
    return c / n


def _float_poly(a: Sequence) -> np.ndarray:
    return np.array([float(c) for c in a], dtype=float)


# --------------------------------------------------------------------------
# HalfPowerSeries
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class HalfPowerSeries:
    """Finite sum ``sum_m coeffs[m] * t**(m/2)`` anchored at one endpoint.

    ``coeffs`` maps the half-step index ``m >= 0`` to its coefficient, so
    ``{1: c}`` is ``c * sqrt(t)``.  Zero coefficients are dropped.
    """

    anchor: Number
    orientation: str = LEFT
    coeffs: Mapping[int, Number] = field(default_factory=dict)

    def __post_init__(self):
        if self.orientation not in (LEFT, RIGHT):
            raise ValueError(f"orientation must be 'left' or 'right', got {self.orientation!r}")
        clean = {}
        for m, c in dict(self.coeffs).items():
            if int(m) != m or m < 0:
                raise ValueError(f"half-step index must be a non-negative integer, got {m!r}")
            if not _is_zero(c):
                clean[int(m)] = c
        object.__setattr__(self, "coeffs", MappingProxyType(dict(sorted(clean.items()))))

    @classmethod
    def constant(cls, c, anchor=0, orientation=LEFT) -> "HalfPowerSeries":
        return cls(anchor, orientation, {0: c})

    @property
    def order(self) -> int:
        """Largest half-step index present (-1 for the zero series)."""
        return max(self.coeffs, default=-1)

    def variable(self, r):
        r = np.asarray(r, dtype=float) if not is_exact(r) else r
        return r - self.anchor if self.orientation == LEFT else self.anchor - r

    def __call__(self, r):
        t = self.variable(r)
        if is_exact(t):
            return _sum(c * half_power(t, m) for m, c in self.coeffs.items())
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("radical argument is negative: r is on the wrong side of the anchor")
        out = np.zeros_like(t)
        for m, c in self.coeffs.items():
            out = out + float(c) * t ** (m / 2)
        return out

    def __add__(self, other: "HalfPowerSeries") -> "HalfPowerSeries":
        _check_compatible(self, other)
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            out[m] = out.get(m, 0) + c
        return HalfPowerSeries(self.anchor, self.orientation, out)

    def __mul__(self, other):
        if isinstance(other, HalfPowerSeries):
            return series_multiply(self, other)
        return HalfPowerSeries(self.anchor, self.orientation,
                               {m: c * other for m, c in self.coeffs.items()})

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other)

    def truncate(self, order: int) -> "HalfPowerSeries":
        """Drop every term with half-step index above ``order``."""
        return HalfPowerSeries(self.anchor, self.orientation,
                               {m: c for m, c in self.coeffs.items() if m <= order})


def _check_compatible(a: HalfPowerSeries, b: HalfPowerSeries):
    if a.orientation != b.orientation or a.anchor != b.anchor:
        raise ValueError(
            f"series are anchored differently: ({a.anchor}, {a.orientation}) "
            f"vs ({b.anchor}, {b.orientation})")


def series_multiply(a: HalfPowerSeries, b: HalfPowerSeries) -> HalfPowerSeries:
    """Exponent-wise convolution of two series sharing anchor and orientation."""
    _check_compatible(a, b)
    terms: dict[int, list] = {}
    for m, x in a.coeffs.items():
        for n, y in b.coeffs.items():
            terms.setdefault(m + n, []).append(x * y)
    return HalfPowerSeries(a.anchor, a.orientation, {k: _sum(v) for k, v in terms.items()})


def rebase_to_opposite_endpoint(s: HalfPowerSeries, delta, order: int | None = None) -> HalfPowerSeries:
    """Re-expand ``s`` around the other end of an interval of length ``delta``.

    With ``x**2 + y**2 = delta`` (``x`` the radical variable of ``s``), every
    term ``x**m`` becomes ``(delta - y**2)**(m/2)``.  Integer powers expand to a
    finite binomial sum and are kept in full.  Half-odd powers become an
    infinite series in ``y**2`` which is cut after ``y**order`` (the index of
    the returned series counts powers of ``y``).  ``order`` defaults to the
    largest index present in ``s`` plus two.
    """
    if delta <= 0:
        raise ValueError(f"interval length must be positive, got {delta}")
    if order is None:
        order = max(s.order, 0) + 2
    if order < 0:
        raise ValueError("truncation order must be non-negative")
    if s.orientation == LEFT:
        anchor, orientation = s.anchor + delta, RIGHT
    else:
        anchor, orientation = s.anchor - delta, LEFT
    terms: dict[int, list] = {}
    for m, c in s.coeffs.items():
        if m % 2 == 0:
            kmax = m // 2
        else:
            kmax = order // 2
        nu = Fraction(m, 2)
        for k in range(kmax + 1):
            coef = binom(nu, k) * (-1) ** k
            if coef == 0:
                continue
            terms.setdefault(2 * k, []).append(c * coef * half_power(delta, m - 2 * k))
    return HalfPowerSeries(anchor, orientation, {k: _sum(v) for k, v in terms.items()})


# --------------------------------------------------------------------------
# RadicalPiece
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RadicalPiece:
    """``poly(s) + sqrt(s)*left_radical(s) + sqrt(t)*right_radical(t)`` on [left, right].

    ``s = r - left`` and ``t = right - r``; each polynomial is a tuple of
    coefficients, lowest power first.
    """

    left: Number
    right: Number
    poly: tuple = ()
    left_radical: tuple = ()
    right_radical: tuple = ()

    def __post_init__(self):
        if not self.left < self.right:
            raise ValueError(f"empty interval [{self.left}, {self.right}]")
        for name in ("poly", "left_radical", "right_radical"):
            object.__setattr__(self, name, poly_trim(getattr(self, name)))

    @property
    def delta(self):
        return self.right - self.left

    @property
    def interval(self) -> tuple:
        return (self.left, self.right)

    def _split(self, r):
        r = np.asarray(r, dtype=float)
        lo, hi = float(self.left), float(self.right)
        slack = _DOMAIN_SLACK * max(1.0, abs(hi))
        if np.any(r < lo - slack) or np.any(r > hi + slack):
            raise ValueError(f"r outside [{self.left}, {self.right}]")
        s = np.clip(r - lo, 0.0, hi - lo)
        t = np.clip(hi - r, 0.0, hi - lo)
        return s, t

    def __call__(self, r):
        s, t = self._split(r)
        out = poly_eval(_float_poly(self.poly), s)
        if self.left_radical:
            out = out + np.sqrt(s) * poly_eval(_float_poly(self.left_radical), s)
        if self.right_radical:
            out = out + np.sqrt(t) * poly_eval(_float_poly(self.right_radical), t)
        return out + np.zeros_like(s)

    def value_at_left(self):
        """Exact value at ``r = left``."""
        a = self.poly[0] if self.poly else 0
        return a + exact_sqrt(self.delta) * poly_eval(self.right_radical, self.delta)

    def value_at_right(self):
        """Exact value at ``r = right``."""
        d = self.delta
        return poly_eval(self.poly, d) + exact_sqrt(d) * poly_eval(self.left_radical, d)

    def slope(self, r):
        """Derivative with the singular radical slopes dropped.

        Returns ``(finite_part, singular)`` where ``singular`` flags points
        sitting on an endpoint whose radical term has infinite slope.
        """
        s, t = self._split(r)
        out = poly_eval(_float_poly(poly_derivative(self.poly)), s)
        singular = np.zeros(np.shape(s), dtype=bool)
        out = out + _radical_slope(self.left_radical, s)
        out = out - _radical_slope(self.right_radical, t)
        if self.left_radical and not _is_zero(self.left_radical[0]):
            singular |= s == 0
        if self.right_radical and not _is_zero(self.right_radical[0]):
            singular |= t == 0
        return out, singular

    def slope_at_left(self):
        """Exact one-sided derivative at ``r = left`` (raises if infinite)."""
        if self.left_radical and not _is_zero(self.left_radical[0]):
            raise ZeroDivisionError("singular radical slope at the left endpoint")
        d = self.delta
        out = self.poly[1] if len(self.poly) > 1 else 0
        # d/dr [sqrt(t) B(t)] = -(B(t)/(2 sqrt t) + sqrt(t) B'(t))
        b = self.right_radical
        if b:
            out = out - (poly_eval(b, d) / (2 * exact_sqrt(d))
                         + exact_sqrt(d) * poly_eval(poly_derivative(b), d))
        return out

    def slope_at_right(self):
        """Exact one-sided derivative at ``r = right`` (raises if infinite)."""
        if self.right_radical and not _is_zero(self.right_radical[0]):
            raise ZeroDivisionError("singular radical slope at the right endpoint")
        d = self.delta
        out = poly_eval(poly_derivative(self.poly), d)
        a = self.left_radical
        if a:
            out = out + (poly_eval(a, d) / (2 * exact_sqrt(d))
                         + exact_sqrt(d) * poly_eval(poly_derivative(a), d))
        return out

    def __add__(self, other: "RadicalPiece") -> "RadicalPiece":
        if self.interval != other.interval:
            raise ValueError("pieces live on different intervals")
        return RadicalPiece(self.left, self.right,
                            poly_add(self.poly, other.poly),
                            poly_add(self.left_radical, other.left_radical),
                            poly_add(self.right_radical, other.right_radical))

    def add_linear(self, a, b) -> "RadicalPiece":
        """Add ``a + b*r``."""
        lin = (a + b * self.left, b)
        return RadicalPiece(self.left, self.right, poly_add(self.poly, lin),
                            self.left_radical, self.right_radical)

    def to_float(self) -> "RadicalPiece":
        return RadicalPiece(float(self.left), float(self.right),
                            tuple(float(c) for c in self.poly),
                            tuple(float(c) for c in self.left_radical),
                            tuple(float(c) for c in self.right_radical))


def _radical_slope(coeffs, x):
    """d/dx of sqrt(x)*P(x) for x > 0, zero-radius term dropped at x == 0."""
    if not coeffs:
        return 0.0
    c = _float_poly(coeffs)
    # sum c_k (k + 1/2) x**(k - 1/2)
    k = np.arange(len(c))
    dc = c * (k + 0.5)
    with np.errstate(divide="ignore", invalid="ignore"):
        lead = np.where(x > 0, dc[0] / np.sqrt(np.where(x > 0, x, 1.0)), 0.0)
    rest = np.sqrt(x) * poly_eval(dc[1:], x) if len(dc) > 1 else 0.0
    return lead + rest


def evaluate(p: RadicalPiece, r):
    """Value of ``p`` at ``r`` (must lie in the closed interval)."""
    return p(r)


def evaluate_derivative(p: RadicalPiece, r):
    """``(finite part of p'(r), singular flag)``; see :meth:`RadicalPiece.slope`."""
    return p.slope(r)


def reduce_to_canonical(left_part: HalfPowerSeries, right_part: HalfPowerSeries,
                        interval) -> RadicalPiece:
    """Sum a left-anchored and a right-anchored series into canonical form.

    Integer powers of ``(right - r)`` are rebased exactly onto the left
    endpoint; half-odd powers keep their own radical.
    """
    lo, hi = interval
    if left_part.coeffs and (left_part.orientation != LEFT or left_part.anchor != lo):
        raise ValueError("left_part must be a left-oriented series anchored at the left endpoint")
    if right_part.coeffs and (right_part.orientation != RIGHT or right_part.anchor != hi):
        raise ValueError("right_part must be a right-oriented series anchored at the right endpoint")
    delta = hi - lo
    poly: tuple = ()
    a: tuple = ()
    b: tuple = ()
    for m, c in left_part.coeffs.items():
        mono = poly_shift_power((c,), m // 2)
        if m % 2 == 0:
            poly = poly_add(poly, mono)
        else:
            a = poly_add(a, mono)
    right_int: tuple = ()
    for m, c in right_part.coeffs.items():
        mono = poly_shift_power((c,), m // 2)
        if m % 2 == 0:
            right_int = poly_add(right_int, mono)
        else:
            b = poly_add(b, mono)
    poly = poly_add(poly, poly_reflect(right_int, delta))
    return RadicalPiece(lo, hi, poly, a, b)


def antiderivative(p: RadicalPiece) -> RadicalPiece:
    """Term-wise antiderivative, fixed to vanish at the left endpoint."""
    d = p.delta
    poly = poly_antiderivative(p.poly)
    a = poly_trim([0] + [_div(c * 2, 2 * k + 3) for k, c in enumerate(p.left_radical)])
    b = poly_trim([0] + [_div(-c * 2, 2 * k + 3) for k, c in enumerate(p.right_radical)])
    if b:
        # the right radical does not vanish at r = left; pull its value into poly
        at_left = exact_sqrt(d) * poly_eval(b, d)
        poly = poly_add(poly, (-at_left,))
    return RadicalPiece(p.left, p.right, poly, a, b)


def anchor_right(p: RadicalPiece) -> RadicalPiece:
    """Subtract the linear function that makes ``p`` and ``p'`` vanish at ``right``."""
    v = p.value_at_right()
    g = p.slope_at_right()
    # p - v - g (r - right), with r - right = s - delta
    lin = (-v + g * p.delta, -g)
    return RadicalPiece(p.left, p.right, poly_add(p.poly, lin), p.left_radical, p.right_radical)
