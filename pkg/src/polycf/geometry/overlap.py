"""Volume of a polyhedron intersected with its own translate.

``P ∩ (P + t)`` is cut out by the half-spaces ``n·x <= d + min(0, n·t)``.
Its vertices come from a half-space intersection and its volume from
signed tetrahedra on the hull facets.  Averaging over directions gives an
independent route to ``gamma(r) = <V(P ∩ (P + r u))> / V``.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, HalfspaceIntersection, QhullError

from .polyhedron import ConvexPolyhedron


def _interior_point(A, b):
    """Chebyshev centre of ``A x <= b`` and its radius."""
    norms = np.linalg.norm(A, axis=1)
    res = linprog(np.r_[0.0, 0.0, 0.0, -1.0], A_ub=np.column_stack([A, norms]), b_ub=b,
                  bounds=[(None, None)] * 3 + [(0, None)], method="highs")
    if not res.success:
        return None, 0.0
    return res.x[:3], float(res.x[3])


def signed_tetra_volume(points: np.ndarray, simplices: np.ndarray, normals: np.ndarray) -> float:
    """Volume of a closed triangulated surface from tetrahedra to the mean point.

    Triangles are oriented by the outward ``normals`` first, since qhull
    does not orient its simplices consistently.
    """
    c = points.mean(axis=0)
    a, b, d = (points[simplices[:, k]] for k in range(3))
    cross = np.cross(b - a, d - a)
    sign = np.sign(np.einsum("ij,ij->i", cross, normals))
    return float(np.sum(sign * np.einsum("ij,ij->i", a - c, cross)) / 6.0)


def overlap_volume(p: ConvexPolyhedron, t) -> float:
    """``V(P ∩ (P + t))`` for a translation vector ``t``."""
    t = np.asarray(t, dtype=float)
    A = p.normals
    b = p.offsets + np.minimum(0.0, A @ t)
    x0, rad = _interior_point(A, b)
    if x0 is None or rad <= 1e-12 * p.diameter:
        return 0.0
    try:
        hs = HalfspaceIntersection(np.column_stack([A, -b]), x0)
        hull = ConvexHull(hs.intersections)
    except QhullError:
        return 0.0
    return signed_tetra_volume(hull.points, hull.simplices, hull.equations[:, :3])
