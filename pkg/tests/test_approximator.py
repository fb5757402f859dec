import math
import warnings
from fractions import Fraction as F

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from polycf.approximator import (
    CldSpec,
    CorrectionTerm,
    EndpointExpansion,
    IntervalExpansions,
    MatchingPolynomialMismatch,
    SpecError,
    approximate_cf,
    build_second_derivative_piece,
    choose_correction_side,
    fit_correction,
    integrate_piece_twice,
    linear_first_interval,
    matching_polynomial_literal,
    matching_polynomial_series,
    scale_spec,
    seed_first_interval,
    seed_last_interval,
    solve_matching_polynomial,
    sweep_and_match,
)
from polycf.fixtures import manufactured_two_interval, sphere_cf, sphere_spec
from polycf.series import LEFT, RIGHT, HalfPowerSeries, RadicalPiece, rebase_to_opposite_endpoint


@pytest.fixture(scope="module")
def manufactured():
    return manufactured_two_interval()


def two_interval_spec(c=F(1, 2), delta=F(1)):
    """Interval [1, 1 + delta] with constant expansions c at both ends."""
    d1 = F(1)
    const = EndpointExpansion((c, 0, 0), (0, 0, 0))
    return CldSpec("const", (0, d1, d1 + delta),
                   (linear_first_interval(F(1, 5), F(1, 10), d1), IntervalExpansions(const, const)),
                   1.0, 1.0, F(1, 5), F(1, 10))


# ---------------------------------------------------------------- spec validation

def test_spec_rejects_non_monotone():
    with pytest.raises(SpecError, match="non-monotone"):
        CldSpec("x", (0, 2, 1), (linear_first_interval(0, 1, 2), linear_first_interval(0, 1, 2)), 1, 1, 0, 1)


def test_spec_rejects_nonlinear_first_interval():
    good = linear_first_interval(F(1), F(1), 1)
    bad = IntervalExpansions(EndpointExpansion(good.right_expansion.a, (F(1, 10),) + good.right_expansion.b[1:]),
                             good.left_expansion)
    with pytest.raises(SpecError) as info:
        CldSpec("x", (0, 1), (bad,), 1, 1, 1, 1)
    assert info.value.field == "intervals[0].right_expansion.b[0]"


@pytest.mark.parametrize("field,value", [("volume", 0), ("surface", -1)])
def test_spec_rejects_nonpositive_measures(field, value):
    kw = dict(name="x", breakpoints=(0, 1), intervals=(linear_first_interval(0, 1, 1),),
              volume=1, surface=1, angularity=0, sharpness=1)
    kw[field] = value
    with pytest.raises(SpecError):
        CldSpec(**kw)


# ---------------------------------------------------------------- matching polynomial

def test_matching_polynomial_k0_and_k1():
    assert solve_matching_polynomial(0, F(1)) == (F(-1),)
    assert solve_matching_polynomial(1, F(1)) == (F(-1), F(-3, 2))


def test_matching_polynomial_k1_residual():
    p0, p1 = (float(x) for x in solve_matching_polynomial(1, F(1)))
    eta = 0.1
    factor = 1 + (1 - eta ** 2) ** 1.5 * (p0 + p1 * eta ** 2)
    # leading residual (15/8) eta^4, next order O(eta^6)
    assert factor == pytest.approx(15 / 8 * eta ** 4, rel=0.05)


# Delta = 1 stays in Fraction arithmetic; 1/2 and 2 need sqrt(2), so they are
# passed as sympy numbers to keep both routes exact
@pytest.mark.parametrize("K", range(5))
@pytest.mark.parametrize("delta", [sympy.Rational(1, 2), F(1), sympy.Integer(2)])
def test_matching_polynomial_routes_agree_exactly(K, delta):
    lit = matching_polynomial_literal(K, delta)
    ser = matching_polynomial_series(K, delta)
    assert all(sympy.simplify(sympy.nsimplify(a) - b) == 0 for a, b in zip(lit, ser))
    p0 = -sympy.Pow(sympy.nsimplify(delta), -sympy.Rational(2 * K + 1, 2))
    assert sympy.simplify(lit[0] - p0) == 0


@pytest.mark.parametrize("K", range(5))
def test_matching_polynomial_symbolic_delta(K):
    delta = sympy.pi / 3
    lit = matching_polynomial_literal(K, delta)
    ser = matching_polynomial_series(K, delta)
    assert all(sympy.simplify(a - b) == 0 for a, b in zip(lit, ser))
    assert sympy.simplify(lit[0] + delta ** -(sympy.Integer(2 * K + 1) / 2)) == 0


def test_matching_polynomial_rejects_nonpositive():
    with pytest.raises(ValueError):
        solve_matching_polynomial(1, 0)


def test_matching_polynomial_mismatch_is_surfaced(monkeypatch):
    import polycf.approximator as ap
    monkeypatch.setattr(ap, "matching_polynomial_literal", lambda K, d: [F(0)] * (K + 1))
    with pytest.raises(MatchingPolynomialMismatch):
        ap.solve_matching_polynomial(1, F(1))


# ---------------------------------------------------------------- second-derivative pieces

def exact_expansion(g: RadicalPiece, end: str, order: int) -> HalfPowerSeries:
    """Half-power expansion of a canonical piece at one end, by exact rebasing."""
    poly = HalfPowerSeries(g.left, LEFT, {2 * k: c for k, c in enumerate(g.poly)})
    lrad = HalfPowerSeries(g.left, LEFT, {2 * k + 1: c for k, c in enumerate(g.left_radical)})
    rrad = HalfPowerSeries(g.right, RIGHT, {2 * k + 1: c for k, c in enumerate(g.right_radical)})
    d = g.right - g.left
    if end == LEFT:
        return poly + lrad + rebase_to_opposite_endpoint(rrad, d, order)
    return (rebase_to_opposite_endpoint(poly, d, order) + rebase_to_opposite_endpoint(lrad, d, order) + rrad)


@pytest.mark.parametrize("K", range(4))
def test_interpolant_matches_expansions_through_order_2k(manufactured, K):
    spec = manufactured.spec
    g = build_second_derivative_piece(spec, 1, K)
    iv = spec.intervals[1]
    p = solve_matching_polynomial(K, F(1))
    for end, e in ((LEFT, iv.right_expansion), (RIGHT, iv.left_expansion)):
        got = exact_expansion(g, end, 2 * K + 2).coeffs
        for j in range(K + 1):
            assert got.get(2 * j, 0) == e.a[j]
        for j in range(K):
            assert got.get(2 * j + 1, 0) == e.b[j]
        # the half-odd term of order K picks up a_0 * P(sqrt(delta)); only odd powers
        # of the own variable come from the own-end product
        shift = e.a[0] * sum(ph for ph in p)
        assert got.get(2 * K + 1, 0) - e.b[K] == shift


def test_constant_interval_k0():
    spec = two_interval_spec(F(1, 2))
    g = build_second_derivative_piece(spec, 1, 0)
    assert g.value_at_left() == F(1, 2) and g.value_at_right() == F(1, 2)


def test_first_interval_passes_through():
    spec = two_interval_spec()
    g = build_second_derivative_piece(spec, 0, 2)
    r = np.linspace(0, 1, 11)
    np.testing.assert_allclose(g(r), 0.2 + 0.2 * r, atol=1e-15)


def test_sphere_second_derivative():
    D = F(3, 2)
    g = build_second_derivative_piece(sphere_spec(D), 0, 0)
    r = np.linspace(0, 1.5, 50)
    np.testing.assert_allclose(g(r), 3 * r / 1.5 ** 3, rtol=1e-14)


def test_insufficient_order_rejected(manufactured):
    with pytest.raises(SpecError):
        build_second_derivative_piece(manufactured.spec, 1, 7)


# ---------------------------------------------------------------- integration and seeds

def test_integrate_constant_left():
    piece = integrate_piece_twice(RadicalPiece(0, 1, (F(3),)), LEFT)
    assert piece.body.poly == (0, 0, F(3, 2))


def test_integrate_radical_right():
    D = 2.0
    piece = integrate_piece_twice(RadicalPiece(0, D, (), (), (1,)), RIGHT)
    r = np.linspace(0, D, 9)
    np.testing.assert_allclose(piece(r), 4 / 15 * (D - r) ** 2.5, atol=1e-14)


def test_integrate_random_piece_second_difference():
    rng = np.random.default_rng(7)
    g = RadicalPiece(1.0, 2.5, tuple(rng.normal(size=3)), tuple(rng.normal(size=2)), tuple(rng.normal(size=2)))
    piece = integrate_piece_twice(g, LEFT)
    r = np.linspace(1.1, 2.4, 20)
    h = 1e-4
    d2 = (piece(r + h) - 2 * piece(r) + piece(r - h)) / h ** 2
    np.testing.assert_allclose(d2, g(r), rtol=1e-6, atol=1e-6)
    assert piece.value_at(LEFT) == pytest.approx(0, abs=1e-14)
    assert piece.slope_at(LEFT) == pytest.approx(0, abs=1e-14)


def test_seed_first_interval_cube_slope():
    spec = CldSpec("cube", (0, 1), (linear_first_interval(4 / math.pi, -3 / (4 * math.pi), 1),), 1, 6,
                   4 / math.pi, -3 / (4 * math.pi))
    piece = seed_first_interval(spec)
    assert float(piece.slope_at(LEFT)) == pytest.approx(-1.5, abs=1e-15)
    assert float(piece.value_at(LEFT)) == 1


def test_seed_first_interval_wedge():
    spec = CldSpec("wedge", (0, 1), (linear_first_interval(0, 0, 1),), 1, 4, 0, 0)
    r = np.linspace(0, 1, 11)
    np.testing.assert_allclose(seed_first_interval(spec)(r), 1 - r, atol=1e-15)


def test_sphere_exact():
    D = 2.0
    cf = approximate_cf(sphere_spec(F(2)))
    r = np.linspace(0, D, 401)
    # closed-form overlap volume of two spheres
    np.testing.assert_allclose(cf(r), sphere_cf(r, D), atol=1e-12)
    assert cf(np.array([D]))[0] == pytest.approx(0, abs=1e-15)
    assert cf.derivative(np.array([D]))[0] == pytest.approx(0, abs=1e-15)


def test_seed_last_interval_vanishes(manufactured):
    piece = seed_last_interval(manufactured.spec, 1)
    assert float(piece.value_at(RIGHT)) == 0 and float(piece.slope_at(RIGHT)) == 0


def test_last_interval_constant_body():
    # the outermost seed is the right-anchored double integral of G''
    piece = integrate_piece_twice(RadicalPiece(1, 2, (F(1, 2),)), RIGHT)
    r = np.linspace(1, 2, 11)
    np.testing.assert_allclose(piece(r), 0.25 * (2 - r) ** 2, atol=1e-15)


def test_seed_last_interval_cube_positive(oracle_specs):
    spec = oracle_specs["cube"]
    assert float(seed_last_interval(spec, 0).value_at(LEFT)) > 0


# ---------------------------------------------------------------- sweeps and correction

def test_sweep_single_interval():
    cf = sweep_and_match(sphere_spec())
    assert len(cf.pieces) == 1 and cf.pieces[0].exact


def test_sweep_two_intervals_mismatch_is_difference(manufactured):
    spec = manufactured.spec
    cf = sweep_and_match(spec, 0, 1)
    first, last = seed_first_interval(spec), seed_last_interval(spec, 0)
    assert cf.diagnostics.mismatch_value == pytest.approx(
        float(first.value_at(RIGHT)) - float(last.value_at(LEFT)), abs=1e-15)


def test_sweep_rejects_meet_index(manufactured):
    with pytest.raises(ValueError):
        sweep_and_match(manufactured.spec, 0, 2)


# oracle: exact manufactured CF, frozen at construction time
FROZEN_MANUFACTURED = {
    # K: (G'' error at r=1.5, value mismatch at D_1, slope mismatch at D_1)
    0: (-0.1512713962989169, 0.06148629148629131, -0.12271428571428578),
    1: (-0.09941681124899954, 0.029660353535353345, -0.059333333333333405),
    2: (-0.07259948128375143, 0.018105434674598103, -0.03616105639152517),
    3: (-0.06176302638956899, 0.013412344540370408, -0.02682278680386635),
}


@pytest.mark.parametrize("K", range(4))
def test_manufactured_frozen(manufactured, K):
    err, dv, ds = FROZEN_MANUFACTURED[K]
    g = build_second_derivative_piece(manufactured.spec, 1, K)
    exact = manufactured.exact.second_derivative(np.array([1.5]))[0]
    assert float(g(1.5)) - exact == pytest.approx(err, rel=1e-9)
    d = sweep_and_match(manufactured.spec, K).diagnostics
    assert d.mismatch_value == pytest.approx(dv, rel=1e-9)
    assert d.mismatch_slope == pytest.approx(ds, rel=1e-9)


def test_manufactured_mismatch_shrinks(manufactured):
    m = [abs(sweep_and_match(manufactured.spec, K).diagnostics.mismatch_value) for K in range(4)]
    assert all(a > b for a, b in zip(m, m[1:]))


def test_fit_correction_zero_mismatch(manufactured):
    cf = sweep_and_match(manufactured.spec, 1)
    right = cf.pieces[1]
    term, fixed = fit_correction(right.value_at(LEFT), right.slope_at(LEFT), right, 1, "L")
    assert term.alpha == pytest.approx(0, abs=1e-14) and term.beta == pytest.approx(0, abs=1e-14)


def test_fit_correction_value_only_unit_interval():
    piece = integrate_piece_twice(RadicalPiece(0.0, 1.0, (0.3,)), RIGHT)
    delta = 0.01
    target_v = float(piece.value_at(LEFT)) + delta
    term, fixed = fit_correction(target_v, piece.slope_at(LEFT), piece, 0, "L")
    # direct construction: basis c1(r) = int int y(1-y), c2(r) = int int y^2(1-y),
    # both vanishing with their slope at r = 1; solve c(0) = delta, c'(0) = 0
    A = np.array([[1 / 12, 1 / 20], [-1 / 6, -1 / 12]])  # [c1(0) c2(0); c1'(0) c2'(0)]
    alpha, beta = np.linalg.solve(A, [delta, 0.0])
    assert term.alpha == pytest.approx(alpha, rel=1e-10) and term.beta == pytest.approx(beta, rel=1e-10)
    assert float(fixed.value_at(LEFT)) == pytest.approx(target_v, abs=1e-15)
    assert float(fixed.value_at(RIGHT)) == pytest.approx(float(piece.value_at(RIGHT)), abs=1e-15)
    assert float(fixed.slope_at(RIGHT)) == pytest.approx(float(piece.slope_at(RIGHT)), abs=1e-15)


@pytest.mark.parametrize("K,side", [(0, "L"), (1, "L"), (2, "R"), (3, "R")])
def test_correction_curvature_form(K, side):
    term = CorrectionTerm(0.7, -0.3, K, 1.0, 2.0, side)
    r = np.linspace(1.05, 1.95, 13)
    np.testing.assert_allclose(term.curvature(r), ((r - 1) * (2 - r)) ** (K + 1) * (0.7 - 0.3 * r), rtol=1e-11, atol=1e-15)
    end = 2.0 if side == "L" else 1.0
    assert term(end) == pytest.approx(0, abs=1e-15) and term.slope(end) == pytest.approx(0, abs=1e-15)


def test_choose_correction_side_rules():
    assert choose_correction_side(-0.01, 0.02) == "left"
    assert choose_correction_side(0.01, -0.02) == "right"
    assert choose_correction_side(-0.03, -0.01) == "left"
    assert choose_correction_side(0.01, 0.02, 5.0, 1.0) == "right"
    assert choose_correction_side(0.01, 0.02, 1.0, 5.0) == "left"
    with pytest.raises(ValueError):
        choose_correction_side(0.01, 0.02)


@pytest.mark.parametrize("K", range(4))
def test_approximate_invariants(manufactured, K):
    cf = approximate_cf(manufactured.spec, K)
    assert cf(np.array([0.0]))[0] == 1
    assert abs(cf.diagnostics.end_value) < 1e-12 and abs(cf.diagnostics.end_slope) < 1e-12
    for _, dv, ds in cf.continuity_residuals():
        assert abs(dv) < 1e-10 and abs(ds) < 1e-10
    # the exact innermost piece is never a candidate, so the right neighbour is corrected
    assert cf.diagnostics.side == "right"


def test_approximate_records_diagnostics(oracle_specs):
    cf = approximate_cf(oracle_specs["octahedron"], 0)
    d = cf.diagnostics
    assert d.meet_index == 2 and d.side in ("left", "right")
    assert d.alpha is not None and np.isfinite(d.condition)
    assert len(d.continuity) == 3


def test_degenerate_interval_merged(manufactured):
    spec = manufactured.spec
    tiny = IntervalExpansions(spec.intervals[1].right_expansion, spec.intervals[1].right_expansion)
    bad = CldSpec("x", (0, 1, 2, 2 + 1e-12), spec.intervals + (tiny,), spec.volume, spec.surface,
                  spec.angularity, spec.sharpness)
    with pytest.warns(UserWarning, match="degenerate"):
        cf = approximate_cf(bad, 0)
    assert len(cf.pieces) == 2


# ---------------------------------------------------------------- properties

@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 5.0), st.integers(0, 3))
def test_scaling_covariance(L, K):
    m = manufactured_two_interval(4)
    base = approximate_cf(m.spec, K)
    scaled = approximate_cf(scale_spec(m.spec, L), K)
    r = np.linspace(0, 2, 57)
    np.testing.assert_allclose(scaled(r * L), base(r), atol=1e-11)
    np.testing.assert_allclose(scaled.second_derivative(r * L) * L ** 2, base.second_derivative(r), atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 3), st.integers(0, 3))
def test_mixed_orders_keep_continuity(k1, k2):
    m = manufactured_two_interval(4)
    cf = approximate_cf(m.spec, (0, k1 if k1 else k2))
    for _, dv, ds in cf.continuity_residuals():
        assert abs(dv) < 1e-10 and abs(ds) < 1e-10
