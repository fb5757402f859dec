"""Feature-pair distances and the non-smoothness detector for breakpoints."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .oracle import DEFAULT_RULE, AngularRule, cf_oracle
from .polyhedron import ConvexPolyhedron

# a candidate is a breakpoint when a third-difference statistic exceeds
# its local reference level by this factor
SPIKE_RATIO = 10.0


def _point_segment(p, a, b):
    d = b - a
    t = np.clip((p - a) @ d / (d @ d), 0.0, 1.0)
    return float(np.linalg.norm(p - (a + t * d)))


def _segment_segment(a0, a1, b0, b1):
    """Point-set distance between two segments (clamped closest points)."""
    d1, d2, r = a1 - a0, b1 - b0, a0 - b0
    aa, ee, ff = d1 @ d1, d2 @ d2, d2 @ r
    c = d1 @ r
    bb = d1 @ d2
    den = aa * ee - bb * bb
    s = np.clip((bb * ff - c * ee) / den, 0.0, 1.0) if den > 1e-14 * aa * ee else 0.0
    t = (bb * s + ff) / ee
    if t < 0:
        t, s = 0.0, np.clip(-c / aa, 0.0, 1.0)
    elif t > 1:
        t, s = 1.0, np.clip((bb - c) / aa, 0.0, 1.0)
    return float(np.linalg.norm(a0 + s * d1 - (b0 + t * d2)))


def _point_face(p, poly: ConvexPolyhedron, f):
    n, d = poly.normals[f], poly.offsets[f]
    q = p - (n @ p - d) * n
    V = poly.face_polygon(f)
    inside = all(np.cross(V[(i + 1) % len(V)] - V[i], q - V[i]) @ n >= -1e-12
                 for i in range(len(V)))
    if inside:
        return abs(float(n @ p - d))
    return min(_point_segment(p, V[i], V[(i + 1) % len(V)]) for i in range(len(V)))


def _segment_face(a, b, poly, f):
    n, d = poly.normals[f], poly.offsets[f]
    sa, sb = n @ a - d, n @ b - d
    if sa * sb < 0:
        x = a + sa / (sa - sb) * (b - a)
        if _point_face(x, poly, f) < 1e-12:
            return 0.0
    V = poly.face_polygon(f)
    out = min(_point_face(a, poly, f), _point_face(b, poly, f))
    for i in range(len(V)):
        out = min(out, _segment_segment(a, b, V[i], V[(i + 1) % len(V)]))
    return out


def feature_distances(p: ConvexPolyhedron) -> dict:
    """All point-set distances between pairs of vertices, edges and faces, by pair kind."""
    V = p.vertices
    E = [(V[a], V[b]) for a, b in p.edges]
    F = range(len(p.faces))
    out = {k: [] for k in ("vv", "ve", "vf", "ee", "ef", "ff")}
    for v, w in itertools.combinations(V, 2):
        out["vv"].append(float(np.linalg.norm(v - w)))
    for v in V:
        out["ve"] += [_point_segment(v, a, b) for a, b in E]
        out["vf"] += [_point_face(v, p, f) for f in F]
    for (a, b), (c, d) in itertools.combinations(E, 2):
        out["ee"].append(_segment_segment(a, b, c, d))
    for a, b in E:
        out["ef"] += [_segment_face(a, b, p, f) for f in F]
    for f, g in itertools.combinations(F, 2):
        G = p.face_polygon(g)
        Fp = p.face_polygon(f)
        ds = [_segment_face(G[i], G[(i + 1) % len(G)], p, f) for i in range(len(G))]
        ds += [_segment_face(Fp[i], Fp[(i + 1) % len(Fp)], p, g) for i in range(len(Fp))]
        out["ff"].append(min(ds))
    return out


def candidate_distances(p: ConvexPolyhedron, rtol: float = 1e-9) -> np.ndarray:
    """Sorted, deduplicated non-zero feature distances up to (and including) D_max."""
    D = p.diameter
    vals = np.concatenate([np.asarray(v) for v in feature_distances(p).values()])
    vals = vals[(vals > rtol * D) & (vals <= D * (1 + rtol))]
    vals = np.sort(vals)
    keep = [vals[0]]
    for x in vals[1:]:
        if x - keep[-1] > rtol * D:
            keep.append(x)
    keep[-1] = max(keep[-1], D) if abs(keep[-1] - D) <= rtol * D else keep[-1]
    return np.array(keep)


@dataclass
class BreakpointScan:
    candidate: float
    spike: float
    mismatch: float
    step: float
    is_breakpoint: bool

    @property
    def ratio(self) -> float:
        return max(self.spike, self.mismatch)


# samples sit at D + (k + 1/2) h for k = -HALF .. HALF-1
HALF = 16


def _stencils(n: int):
    k = np.arange(-HALF, HALF) + 0.5
    first, last = k[: n - 3], k[3:]
    return first, last


def spike_ratio(values: np.ndarray, floor: float) -> float:
    """Largest straddling third difference over the largest one >= 4.5 h away."""
    d3 = np.diff(values, 3)
    first, last = _stencils(len(values))
    straddle = (first < 0) & (last > 0)
    far = (last <= -4.5) | (first >= 4.5)
    return float(np.max(np.abs(d3[straddle])) / max(np.max(np.abs(d3[far])), floor))


def mismatch_ratio(values: np.ndarray, floor: float, degree: int = 2) -> float:
    """Disagreement at D of one-sided fits to the third-difference sequence.

    A smooth function has a smooth third-difference sequence, so quadratic
    fits from the left and from the right extrapolate to the same value at
    the candidate.  High-order singularities that barely show in individual
    stencils still break this agreement.  The mismatch is measured against
    the fit residuals (or the noise floor).
    """
    d3 = np.diff(values, 3)
    first, last = _stencils(len(values))
    cen = 0.5 * (first + last)
    L, R = last < 0, first > 0
    pl = np.polyfit(cen[L], d3[L], degree)
    pr = np.polyfit(cen[R], d3[R], degree)
    jump = abs(np.polyval(pl, 0.0) - np.polyval(pr, 0.0))
    res = np.concatenate([d3[L] - np.polyval(pl, cen[L]), d3[R] - np.polyval(pr, cen[R])])
    return float(jump / max(float(np.sqrt(np.mean(res ** 2))), floor))


def enumerate_breakpoints(p: ConvexPolyhedron, rule: AngularRule = DEFAULT_RULE,
                          threshold: float = SPIKE_RATIO, return_scans: bool = False):
    """Feature distances at which the oracle CLD is detectably non-smooth (plus D_max).

    Each interior candidate is scanned with 32 CLD samples on a fine uniform
    stencil; it is kept when either third-difference statistic exceeds
    ``threshold``.
    """
    cands = candidate_distances(p)
    D = p.diameter
    scans = []
    for i, c in enumerate(cands):
        if abs(c - D) <= 1e-9 * D:
            scans.append(BreakpointScan(float(c), math.inf, math.inf, 0.0, True))
            continue
        gaps = [c] + [abs(c - x) for j, x in enumerate(cands) if j != i]
        h = min(5e-4 * D, min(gaps) / (2.5 * HALF))
        r = c + (np.arange(-HALF, HALF) + 0.5) * h
        s = cf_oracle(p, r, rule)
        # third differences amplify independent errors by at most 8
        floor = 8.0 * max(float(np.max(s.d2_err)), 1e-13 * float(np.max(np.abs(s.d2))))
        sp, mm = spike_ratio(s.d2, floor), mismatch_ratio(s.d2, floor)
        scans.append(BreakpointScan(float(c), sp, mm, h, max(sp, mm) > threshold))
    found = np.array([s.candidate for s in scans if s.is_breakpoint])
    return (found, scans) if return_scans else found
