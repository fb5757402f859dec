"""Analytic fixtures: the sphere, the Porod wedge and a manufactured two-interval CF.

The manufactured CF has breakpoints ``0, 1, 2``.  On ``[1, 2]`` its CLD is a
finite sum of half-integer powers of ``s = r - 1`` and ``t = 2 - r``, so the
exact endpoint expansions follow from the binomial series and the exact CF
from the power rule.  The innermost cubic is then chosen so that value and
slope match at ``r = 1``, and ``V`` is set by the sum rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction as F

import numpy as np

from .approximator import (
    CldSpec,
    Diagnostics,
    EndpointExpansion,
    IntervalExpansions,
    PiecewiseCf,
    integrate_piece_twice,
    linear_first_interval,
    seed_first_interval,
)
from .scattering import sum_rule_integral
from .series import LEFT, RIGHT, HalfPowerSeries, binom, reduce_to_canonical


def sphere_spec(diameter=F(1), name: str = "sphere") -> CldSpec:
    """Single-interval spec of a sphere: gamma'' = 3 r / D^3 on [0, D]."""
    D = diameter
    sharp = F(3, 2) / D ** 3 if isinstance(D, (int, F)) else 1.5 / D ** 3
    vol = math.pi * float(D) ** 3 / 6
    return CldSpec(name, (0, D), (linear_first_interval(0, sharp, D),), vol, math.pi * float(D) ** 2,
                   0, sharp)


def sphere_cf(r, diameter: float = 1.0):
    r = np.asarray(r, dtype=float)
    x = r / diameter
    return np.where(x <= 1, 1 - 1.5 * x + 0.5 * x ** 3, 0.0)


def sphere_intensity(q, diameter: float = 1.0):
    """V [3 (sin x - x cos x) / x^3]^2 with x = q D / 2."""
    q = np.asarray(q, dtype=float)
    x = q * diameter / 2
    xs = np.where(x < 1e-3, 1.0, x)
    amp = np.where(x < 1e-3, 1 - x * x / 10, 3 * (np.sin(xs) - xs * np.cos(xs)) / xs ** 3)
    return math.pi * diameter ** 3 / 6 * amp ** 2


class Wedge:
    """gamma = 1 - r on [0, 1]."""

    breakpoints = np.array([0.0, 1.0])

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= 1, 1 - r, 0.0)


# half-power amplitudes of the manufactured CLD on [1, 2]
# (index k multiplies s**(k/2) resp. t**(k/2)); chosen so the CF is monotone
# and the CLD positive, with a dominant smooth part and decaying radicals
LEFT_AMPLITUDES = (F(1, 4), F(3, 40), F(-1, 40), F(1, 40), F(1, 80), F(-1, 80), F(1, 200), F(1, 200))
RIGHT_AMPLITUDES = (F(1, 20), F(1, 16), F(1, 40), F(-1, 50), F(1, 100), F(1, 160), F(-1, 200), F(1, 400))
POROD_SLOPE = F(11, 10)


@dataclass
class Manufactured:
    spec: CldSpec
    exact: PiecewiseCf


def _expansion_at_one_end(own, other, depth):
    """Coefficients in the own-end variable: direct terms plus the binomial series of the other end."""
    a = []
    b = []
    for j in range(depth):
        aj = own[2 * j] if 2 * j < len(own) else 0
        for k, c in enumerate(other):
            aj += c * binom(F(k, 2), j) * (-1) ** j
        a.append(aj)
        b.append(own[2 * j + 1] if 2 * j + 1 < len(own) else 0)
    return EndpointExpansion(tuple(a), tuple(b))


def manufactured_two_interval(depth: int = 5) -> Manufactured:
    """Spec (expansions to ``depth`` pairs) and exact CF of the manufactured fixture."""
    lo, hi = 1, 2
    left = HalfPowerSeries(lo, LEFT, dict(enumerate(LEFT_AMPLITUDES)))
    right = HalfPowerSeries(hi, RIGHT, dict(enumerate(RIGHT_AMPLITUDES)))
    g = reduce_to_canonical(left, right, (lo, hi))
    outer = integrate_piece_twice(g, RIGHT)
    v1, s1 = outer.value_at(LEFT), outer.slope_at(LEFT)
    # 1 - P + A/2 + S/3 = v1 and -P + A + S = s1 with P the Porod slope magnitude
    P = POROD_SLOPE
    sharp = 6 * (1 - P + (s1 + P) / 2 - v1)
    ang = s1 + P - sharp
    inner = linear_first_interval(ang, sharp, lo)
    outer_exp = IntervalExpansions(_expansion_at_one_end(LEFT_AMPLITUDES, RIGHT_AMPLITUDES, depth),
                                   _expansion_at_one_end(RIGHT_AMPLITUDES, LEFT_AMPLITUDES, depth))
    # V from the sum rule 4 pi int gamma r^2 dr, then S from the Porod slope S / 4V
    provisional = CldSpec("manufactured", (0, lo, hi), (inner, outer_exp), 1.0, 4 * float(P), ang, sharp)
    exact = PiecewiseCf([seed_first_interval(provisional), outer], provisional, (None, None))
    vol = sum_rule_integral(exact)
    spec = CldSpec("manufactured", (0, lo, hi), (inner, outer_exp), vol, 4 * float(P) * vol, ang, sharp)
    exact = PiecewiseCf([seed_first_interval(spec), outer], spec, (None, None), Diagnostics(notes=["exact"]))
    return Manufactured(spec, exact)
