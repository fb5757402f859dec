"""Convex polyhedra: construction, face lattice and elementary measures."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.spatial import ConvexHull


@dataclass(frozen=True, eq=False)
class ConvexPolyhedron:
    """Bounded convex polyhedron with outward face normals.

    ``faces[k]`` lists vertex indices counter-clockwise seen from outside;
    the face plane is ``normals[k] . x = offsets[k]``.
    """

    vertices: np.ndarray
    faces: tuple
    normals: np.ndarray
    offsets: np.ndarray
    name: str = "polyhedron"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for arr in (self.vertices, self.normals, self.offsets):
            arr.setflags(write=False)

    @classmethod
    def from_points(cls, points, name: str = "polyhedron", tol: float = 1e-9) -> "ConvexPolyhedron":
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 4:
            raise ValueError("need at least four 3D points")
        hull = ConvexHull(pts)
        scale = float(np.max(np.ptp(pts, axis=0)))
        used = np.unique(hull.simplices)
        verts = pts[used]
        # merge coplanar hull facets into polygonal faces
        planes: list = []
        for eq in hull.equations:
            n, d = eq[:3], -eq[3]
            for n2, d2 in planes:
                if np.allclose(n, n2, atol=tol) and abs(d - d2) <= tol * scale:
                    break
            else:
                planes.append((n, d))
        faces, normals, offsets = [], [], []
        for n, d in planes:
            on = np.nonzero(np.abs(verts @ n - d) <= tol * scale)[0]
            centre = verts[on].mean(axis=0)
            e1 = verts[on[0]] - centre
            e1 /= np.linalg.norm(e1)
            e2 = np.cross(n, e1)
            ang = np.arctan2((verts[on] - centre) @ e2, (verts[on] - centre) @ e1)
            faces.append(tuple(int(i) for i in on[np.argsort(ang)]))
            normals.append(n / np.linalg.norm(n))
            offsets.append(d)
        return cls(verts.copy(), tuple(faces), np.array(normals), np.array(offsets), name)

    # ---- lattice -------------------------------------------------------
    @cached_property
    def edges(self) -> tuple:
        out = set()
        for f in self.faces:
            for a, b in zip(f, f[1:] + f[:1]):
                out.add((min(a, b), max(a, b)))
        return tuple(sorted(out))

    def euler_characteristic(self) -> int:
        return len(self.vertices) - len(self.edges) + len(self.faces)

    # ---- measures ------------------------------------------------------
    def face_polygon(self, k: int) -> np.ndarray:
        return self.vertices[list(self.faces[k])]

    def face_area(self, k: int) -> float:
        poly = self.face_polygon(k)
        cross = np.cross(poly, np.roll(poly, -1, axis=0)).sum(axis=0)
        return 0.5 * float(cross @ self.normals[k])

    @cached_property
    def surface(self) -> float:
        return math.fsum(self.face_area(k) for k in range(len(self.faces)))

    @cached_property
    def volume(self) -> float:
        return math.fsum(self.face_area(k) * self.offsets[k] for k in range(len(self.faces))) / 3.0

    @cached_property
    def diameter(self) -> float:
        diff = self.vertices[:, None, :] - self.vertices[None, :, :]
        return float(np.sqrt(np.max(np.sum(diff ** 2, axis=-1))))

    @cached_property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def contains(self, x, tol: float = 1e-12) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.all(x @ self.normals.T <= self.offsets + tol * self.diameter, axis=-1)

    def scaled(self, factor: float) -> "ConvexPolyhedron":
        if not factor > 0:
            raise ValueError("scale factor must be positive")
        return ConvexPolyhedron(self.vertices * factor, self.faces, self.normals.copy(),
                                self.offsets * factor, self.name, dict(self.meta))

    def check(self, tol: float = 1e-9):
        """Raise if convexity, orientation or the Euler relation fail."""
        if self.euler_characteristic() != 2:
            raise ValueError("Euler relation V - E + F = 2 violated")
        if not self.volume > 0:
            raise ValueError("non-positive volume")
        slack = self.vertices @ self.normals.T - self.offsets
        if np.max(slack) > tol * self.diameter:
            raise ValueError("a vertex violates a face inequality")


_SQ2 = math.sqrt(2.0)


def build_platonic(kind: str, edge: float = 1.0) -> ConvexPolyhedron:
    """Cube, regular tetrahedron or regular octahedron with the given edge.

    All three are centred at the origin and aligned so their symmetry
    groups are subgroups of the signed coordinate permutations.
    """
    if not edge > 0:
        raise ValueError("edge must be positive")
    if kind == "cube":
        pts = np.array([[x, y, z] for x in (-.5, .5) for y in (-.5, .5) for z in (-.5, .5)])
        exact = {"volume": 1.0, "surface": 6.0, "diameter": math.sqrt(3)}
    elif kind == "tetrahedron":
        pts = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float) / (2 * _SQ2)
        exact = {"volume": _SQ2 / 12, "surface": math.sqrt(3), "diameter": 1.0}
    elif kind == "octahedron":
        pts = np.vstack([np.eye(3), -np.eye(3)]) / _SQ2
        exact = {"volume": _SQ2 / 3, "surface": 2 * math.sqrt(3), "diameter": _SQ2}
    else:
        raise ValueError(f"unknown solid {kind!r}; choose tetrahedron, cube or octahedron")
    p = ConvexPolyhedron.from_points(pts * edge, name=kind)
    p.meta.update(kind=kind, edge=edge, volume=exact["volume"] * edge ** 3,
                  surface=exact["surface"] * edge ** 2, diameter=exact["diameter"] * edge)
    return p


def load_vertices(path) -> ConvexPolyhedron:
    """Polyhedron from a text file with one ``x y z`` vertex per line."""
    pts = np.loadtxt(path, comments="#", ndmin=2)
    return ConvexPolyhedron.from_points(pts, name=str(path))
