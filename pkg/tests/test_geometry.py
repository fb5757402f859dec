import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polycf.geometry.features import (
    HALF,
    candidate_distances,
    enumerate_breakpoints,
    mismatch_ratio,
    spike_ratio,
)
from polycf.geometry.fitting import (
    FitError,
    endpoint_offsets,
    fit_endpoint_expansion,
    sample_endpoint,
    shape_constants,
)
from polycf.geometry.oracle import (
    AngularRule,
    cf_oracle,
    cld_finite_difference,
    cld_oracle,
    directional_average,
    has_octahedral_direction_symmetry,
    mc_cf,
)
from polycf.geometry.overlap import overlap_volume
from polycf.geometry.polyhedron import ConvexPolyhedron, build_platonic, load_vertices

SQ2, SQ3 = math.sqrt(2), math.sqrt(3)


# ---------------------------------------------------------------- polyhedra

@pytest.mark.parametrize("kind,V,S,D", [
    ("cube", 1.0, 6.0, SQ3),
    ("tetrahedron", SQ2 / 12, SQ3, 1.0),
    ("octahedron", SQ2 / 3, 2 * SQ3, SQ2),
])
def test_platonic_measures(kind, V, S, D):
    p = build_platonic(kind)
    assert p.volume == pytest.approx(V, rel=1e-14)
    assert p.surface == pytest.approx(S, rel=1e-14)
    assert p.diameter == pytest.approx(D, rel=1e-14)
    assert p.euler_characteristic() == 2
    assert np.all(p.contains(p.vertices, tol=1e-12))
    p.check()


@pytest.mark.parametrize("lam", [0.5, 3.0])
def test_platonic_scaling(lam):
    p, q = build_platonic("octahedron"), build_platonic("octahedron", lam)
    assert q.volume == pytest.approx(lam ** 3 * p.volume, rel=1e-13)
    assert q.surface == pytest.approx(lam ** 2 * p.surface, rel=1e-13)


def test_platonic_rejects_bad_input():
    with pytest.raises(ValueError):
        build_platonic("dodecahedron")
    with pytest.raises(ValueError):
        build_platonic("cube", 0)


def test_load_vertices_merges_coplanar(tmp_path):
    path = tmp_path / "box.txt"
    pts = [[x, y, z] for x in (0, 2) for y in (0, 1) for z in (0, 1)] + [[1, 0, 0], [1, 1, 1]]
    path.write_text("# box with two extra points on edges\n" + "\n".join(" ".join(map(str, v)) for v in pts))
    p = load_vertices(path)
    assert len(p.faces) == 6 and p.volume == pytest.approx(2.0)


def test_symmetry_detection():
    assert has_octahedral_direction_symmetry(build_platonic("cube"))
    assert has_octahedral_direction_symmetry(build_platonic("octahedron"))
    box = ConvexPolyhedron.from_points([[x, y, z] for x in (0, 2) for y in (0, 1) for z in (0, 1)])
    assert not has_octahedral_direction_symmetry(box)


# ---------------------------------------------------------------- overlap volume

def test_overlap_examples():
    c = build_platonic("cube")
    assert overlap_volume(c, [0, 0, 0]) == pytest.approx(1.0, rel=1e-13)
    assert overlap_volume(c, [0.5, 0, 0]) == pytest.approx(0.5, rel=1e-13)
    assert overlap_volume(c, [0.3, 0.2, 0.1]) == pytest.approx(0.7 * 0.8 * 0.9, rel=1e-13)
    assert overlap_volume(c, [1.0, 1.0, 1.01]) == 0.0
    assert overlap_volume(c, [2.0, 0, 0]) == 0.0


vec = st.tuples(*[st.floats(-1.5, 1.5, allow_nan=False)] * 3).map(np.array)
solid = st.sampled_from(["cube", "tetrahedron", "octahedron"]).map(build_platonic)


@settings(max_examples=60, deadline=None)
@given(solid, vec)
def test_overlap_symmetric(p, t):
    assert overlap_volume(p, t) == pytest.approx(overlap_volume(p, -t), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(solid, vec)
def test_overlap_non_increasing_along_ray(p, t):
    vals = [overlap_volume(p, s * t) for s in np.linspace(0, 1, 9)]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
    assert vals[0] == pytest.approx(p.volume, rel=1e-12)


def fibonacci_sphere(n):
    k = np.arange(n) + 0.5
    z = 1 - 2 * k / n
    phi = math.pi * (1 + 5 ** 0.5) * k
    rho = np.sqrt(1 - z * z)
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


@pytest.mark.parametrize("kind,r", [("octahedron", 0.8), ("tetrahedron", 0.45), ("cube", 1.2)])
def test_overlap_average_matches_oracle(kind, r):
    """Independent route: equal-area direction average of intersection volumes."""
    p = build_platonic(kind)
    u = fibonacci_sphere(6000)
    avg = np.mean([overlap_volume(p, r * x) for x in u]) / p.volume
    assert avg == pytest.approx(float(cf_oracle(p, [r]).gamma[0]), abs=2e-4)


# ---------------------------------------------------------------- CF oracle

@pytest.mark.parametrize("kind", ["cube", "tetrahedron", "octahedron"])
def test_cf_oracle_ends(kind):
    p = build_platonic(kind)
    s = cf_oracle(p, [0.0, p.diameter])
    assert s.gamma[0] == pytest.approx(1.0, abs=1e-10)
    assert s.gamma[1] == pytest.approx(0.0, abs=1e-12)


def test_cf_oracle_range_error():
    p = build_platonic("cube")
    with pytest.raises(ValueError):
        cf_oracle(p, [2.0])
    with pytest.raises(ValueError):
        cf_oracle(p, [-0.1])


def test_cube_closed_form_small_r(cube_exact_small_r):
    r = np.linspace(0.05, 0.95, 10)
    s = cf_oracle(build_platonic("cube"), r)
    np.testing.assert_allclose(s.gamma, cube_exact_small_r(r), atol=1e-10)
    np.testing.assert_allclose(s.d2, 4 / math.pi - 1.5 * r / math.pi, atol=1e-9)


# Monte Carlo point-pair estimates (mean, standard error), frozen from
# mc_cf with 400000 samples: cube seed 0, octahedron seed 1, tetrahedron seed 2
FROZEN_MC = {
    ("cube", 0.5): (0.400145, 0.0007746444007558364),
    ("octahedron", 0.9): (0.0121325, 0.00017309919415671042),
    ("tetrahedron", 0.3): (0.255975, 0.0006900222378765931),
}


@pytest.mark.parametrize("key", list(FROZEN_MC))
def test_cf_oracle_against_frozen_monte_carlo(key):
    kind, r = key
    mean, se = FROZEN_MC[key]
    assert abs(float(cf_oracle(build_platonic(kind), [r]).gamma[0]) - mean) < 3 * se


def test_mc_is_seed_deterministic():
    p = build_platonic("cube")
    assert mc_cf(p, 0.5, 20000, 5) == mc_cf(p, 0.5, 20000, 5)


@pytest.mark.parametrize("kind", ["cube", "tetrahedron", "octahedron"])
def test_cf_oracle_bounds_and_sum_rule(kind):
    p = build_platonic(kind)
    D = np.concatenate([[0.0], enumerate_breakpoints(p)]) if kind == "cube" else np.linspace(0, p.diameter, 9)
    x, w = np.polynomial.legendre.leggauss(40)
    total = 0.0
    for a, b in zip(D[:-1], D[1:]):
        r = 0.5 * (a + b) + 0.5 * (b - a) * x
        g = cf_oracle(p, r).gamma
        assert np.all(g >= -1e-12) and np.all(g <= 1 + 1e-12)
        total += 0.5 * (b - a) * np.sum(w * 4 * math.pi * r * r * g)
    assert total == pytest.approx(p.volume, rel=1e-3)


@pytest.mark.parametrize("kind,frac", [("octahedron", 0.65), ("cube", 0.65), ("tetrahedron", 0.85)])
def test_symmetry_reduction_agrees_with_hemisphere(kind, frac):
    p = build_platonic(kind)
    r = frac * p.diameter
    full = directional_average(p, r, AngularRule(use_symmetry=False))
    reduced = directional_average(p, r, AngularRule(use_symmetry=True))
    np.testing.assert_allclose(reduced[0], full[0], rtol=1e-9, atol=1e-13)


# ---------------------------------------------------------------- CLD oracle

@pytest.mark.parametrize("kind", ["cube", "tetrahedron", "octahedron"])
def test_cld_linear_on_innermost_interval(kind):
    p = build_platonic(kind)
    d1 = {"cube": 1.0, "tetrahedron": 1 / SQ2, "octahedron": math.sqrt(2 / 3)}[kind]
    r = d1 * np.linspace(0.05, 0.95, 15)
    s = cld_oracle(p, r)
    coef = np.polyfit(r, s.d2, 1)
    resid = s.d2 - np.polyval(coef, r)
    assert np.max(np.abs(resid)) < 1e-8


def test_cld_guard_band():
    p = build_platonic("cube")
    with pytest.raises(ValueError, match="guard band"):
        cld_oracle(p, [1.0005], breakpoints=[1.0, SQ2, SQ3])
    cld_oracle(p, [1.01], breakpoints=[1.0, SQ2, SQ3])


@pytest.mark.parametrize("r", [0.5, 1.2, 1.6])
def test_cld_density_vs_finite_differences(r):
    p = build_platonic("cube")
    fd, err = cld_finite_difference(p, r, h=0.01)
    assert float(cf_oracle(p, [r]).d2[0]) == pytest.approx(fd, abs=max(10 * err, 1e-7))


# chord-length histogram (random isotropic lines, 4e6 chords, seed 3) converted
# to gamma'' bin averages with f = (4V/S) gamma'': (value, standard error) per bin
FROZEN_HISTOGRAM = {
    (0.45, 0.55): (1.03341, 0.00196857),
    (1.05, 1.10): (1.9859775, 0.00385938),
    (1.15, 1.25): (0.90877875, 0.00184606),
    (1.50, 1.60): (0.0116175, 0.00020872),
}


@pytest.mark.parametrize("edges", list(FROZEN_HISTOGRAM))
def test_cld_against_frozen_chord_histogram(edges):
    lo, hi = edges
    s = cf_oracle(build_platonic("cube"), [lo, hi])
    bin_mean = (s.d1[1] - s.d1[0]) / (hi - lo)
    val, se = FROZEN_HISTOGRAM[edges]
    assert abs(bin_mean - val) < 3 * se


# ---------------------------------------------------------------- breakpoints

def test_candidates_include_cube_distances():
    c = candidate_distances(build_platonic("cube"))
    for d in (1.0, SQ2, SQ3):
        assert np.min(np.abs(c - d)) < 1e-12


def test_enumerate_cube():
    np.testing.assert_allclose(enumerate_breakpoints(build_platonic("cube")), [1.0, SQ2, SQ3], rtol=1e-12)


def test_enumerate_cube_scales_with_edge():
    np.testing.assert_allclose(enumerate_breakpoints(build_platonic("cube", 2.0)), [2.0, 2 * SQ2, 2 * SQ3],
                               rtol=1e-12)


def test_enumerate_tetrahedron_keeps_diameter():
    found = enumerate_breakpoints(build_platonic("tetrahedron"))
    assert found[-1] == pytest.approx(1.0, rel=1e-12)


def test_enumerate_octahedron_four_intervals():
    found = enumerate_breakpoints(build_platonic("octahedron"))
    assert len(found) == 4
    np.testing.assert_allclose(found, [math.sqrt(2 / 3), SQ3 / 2, 1.0, SQ2], rtol=1e-12)


def stencil(f, c=0.3, h=1e-3):
    return f(c + (np.arange(-HALF, HALF) + 0.5) * h)


@pytest.mark.parametrize("f", [np.sin, np.exp, lambda x: np.sqrt(2 + x) * np.cos(3 * x)])
def test_detector_quiet_on_smooth(f):
    v = stencil(f)
    floor = 8e-13 * np.max(np.abs(v))  # the floor the detector uses for exact samples
    assert spike_ratio(v, floor) < 10 and mismatch_ratio(v, floor) < 10


@pytest.mark.parametrize("power", [0.5, 1.5, 2.5])
def test_detector_fires_on_half_power(power):
    v = stencil(lambda x: np.cos(x) + np.where(x > 0.3, np.abs(x - 0.3) ** power, 0.0))
    floor = 8e-13 * np.max(np.abs(v))
    assert max(spike_ratio(v, floor), mismatch_ratio(v, floor)) > 10


# ---------------------------------------------------------------- fitting

def test_fit_recovers_synthetic_model():
    a, b = [0.7, -1.3, 0.4, 0.2], [2.1, 0.5, -0.8, 0.3]
    s = endpoint_offsets(0.5, 40)
    y = sum(a[j] * s ** j + b[j] * s ** (j + 0.5) for j in range(4))
    fit = fit_endpoint_expansion(s, y, 1, extra_terms=2)
    np.testing.assert_allclose(fit.a, a[:2], atol=1e-8)
    np.testing.assert_allclose(fit.b, b[:2], atol=1e-8)


def test_fit_rejects_bad_designs():
    s = np.linspace(0.01, 0.011, 40)
    with pytest.raises(FitError, match="geometric"):
        fit_endpoint_expansion(s, s, 1)
    with pytest.raises(FitError, match="too few"):
        fit_endpoint_expansion(endpoint_offsets(1, 6), np.ones(6), 1)
    with pytest.raises(FitError):
        fit_endpoint_expansion(np.geomspace(1e-12, 1, 40), np.ones(40), 1, extra_terms=8)


def test_fit_innermost_is_linear():
    p = build_platonic("cube")
    s, y, sig = sample_endpoint(p, 0.0, "right", 1.0)
    fit = fit_endpoint_expansion(s, y, 1, sig)
    np.testing.assert_allclose(fit.b, 0, atol=1e-6)
    assert fit.a[0] == pytest.approx(4 / math.pi, abs=1e-7)
    assert fit.a[1] == pytest.approx(-1.5 / math.pi, abs=1e-6)


def test_fit_cube_half_power_onset():
    """The expansion on [1, sqrt 2] at its left end starts with a real sqrt term."""
    p = build_platonic("cube")
    s, y, sig = sample_endpoint(p, 1.0, "right", SQ2 - 1)
    fit = fit_endpoint_expansion(s, y, 1, sig)
    assert abs(fit.b[0]) > 5 * fit.b_err[0]
    assert fit.b[0] == pytest.approx(-5.40, abs=0.01)
    assert fit.a[0] == pytest.approx(3.7958, abs=1e-3)


def test_shape_constants_cube():
    p = build_platonic("cube")
    sc = shape_constants(p, 1.0)
    assert sc.surface == 6.0 and sc.volume == pytest.approx(1.0, rel=1e-14)
    assert sc.angularity == pytest.approx(4 / math.pi, abs=1e-8)
    assert sc.sharpness == pytest.approx(-0.75 / math.pi, abs=1e-8)
    lo = shape_constants(p, 1.0, window=(0.05, 0.45))
    hi = shape_constants(p, 1.0, window=(0.55, 0.95))
    assert abs(lo.angularity - hi.angularity) < 2 * math.hypot(lo.angularity_err, hi.angularity_err) + 1e-9
    assert abs(lo.sharpness - hi.sharpness) < 2 * math.hypot(lo.sharpness_err, hi.sharpness_err) + 1e-9


def test_shape_constants_rejects_nonlinear():
    with pytest.raises(FitError, match="not linear"):
        shape_constants(build_platonic("cube"), 1.3)
