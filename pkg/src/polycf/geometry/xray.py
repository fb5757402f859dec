"""Compiled kernel: directional overlap volume from the chord-length field.

For a direction ``u`` the line ``x + l u`` (``x`` in the plane orthogonal
to ``u``) crosses the body over a length ``l(x) = s_top(x) - s_bot(x)``,
where the exit height lives on faces with ``n.u > 0`` and the entry height
on faces with ``n.u < 0``.  Intersecting every projected exit face with
every projected entry face tiles the shadow into convex cells on which
``l`` is affine.  Then

    vol(K & (K + r u)) = int (l(x) - r)_+ dx,

and its second derivative in ``r`` is the density of ``l`` over the
shadow.  Both are integrated exactly on a fan triangulation of each cell.
Cells cut from antiparallel face pairs carry constant ``l``; their
contribution to the second derivative is a point mass that the caller
treats separately.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_MAXV = 96


@njit(cache=True)
def _basis(u):
    if abs(u[0]) < 0.9:
        a0, a1, a2 = 1.0, 0.0, 0.0
    else:
        a0, a1, a2 = 0.0, 1.0, 0.0
    d = a0 * u[0] + a1 * u[1] + a2 * u[2]
    e1 = np.empty(3)
    e1[0] = a0 - d * u[0]
    e1[1] = a1 - d * u[1]
    e1[2] = a2 - d * u[2]
    nrm = np.sqrt(e1[0] ** 2 + e1[1] ** 2 + e1[2] ** 2)
    e1 /= nrm
    e2 = np.empty(3)
    e2[0] = u[1] * e1[2] - u[2] * e1[1]
    e2[1] = u[2] * e1[0] - u[0] * e1[2]
    e2[2] = u[0] * e1[1] - u[1] * e1[0]
    return e1, e2


@njit(cache=True)
def _clip(px, py, n, qx, qy, m, ox, oy, tx, ty):
    """Sutherland-Hodgman: CCW polygon p clipped by CCW convex polygon q."""
    k = n
    for i in range(n):
        ox[i] = px[i]
        oy[i] = py[i]
    for j in range(m):
        if k == 0:
            return 0
        ax, ay = qx[j], qy[j]
        bx, by = qx[(j + 1) % m], qy[(j + 1) % m]
        ex, ey = bx - ax, by - ay
        cnt = 0
        for i in range(k):
            cx, cy = ox[i], oy[i]
            dx, dy = ox[(i + 1) % k], oy[(i + 1) % k]
            sc = ex * (cy - ay) - ey * (cx - ax)
            sd = ex * (dy - ay) - ey * (dx - ax)
            if sc >= 0.0:
                tx[cnt] = cx
                ty[cnt] = cy
                cnt += 1
                if sd < 0.0:
                    t = sc / (sc - sd)
                    tx[cnt] = cx + t * (dx - cx)
                    ty[cnt] = cy + t * (dy - cy)
                    cnt += 1
            elif sd >= 0.0:
                t = sc / (sc - sd)
                tx[cnt] = cx + t * (dx - cx)
                ty[cnt] = cy + t * (dy - cy)
                cnt += 1
        k = cnt
        for i in range(k):
            ox[i] = tx[i]
            oy[i] = ty[i]
    return k


@njit(cache=True)
def _triangle(l1, l2, l3, area, r, flat):
    """(int (l-r)_+, -int 1[l>r], density at r) over a triangle with affine l."""
    # sort the three vertex values
    if l1 > l2:
        l1, l2 = l2, l1
    if l2 > l3:
        l2, l3 = l3, l2
    if l1 > l2:
        l1, l2 = l2, l1
    mean = (l1 + l2 + l3) / 3.0
    if l3 - l1 <= flat:
        if r < mean:
            return area * (mean - r), -area, 0.0
        return 0.0, 0.0, 0.0
    if r <= l1:
        return area * (mean - r), -area, 0.0
    if r >= l3:
        return 0.0, 0.0, 0.0
    w = l3 - l1
    if r < l2:
        a = l2 - l1
        x = r - l1
        return (area * (mean - r + x ** 3 / (3.0 * w * a)),
                area * (-1.0 + x * x / (w * a)),
                area * 2.0 * x / (w * a))
    b = l3 - l2
    y = l3 - r
    return area * y ** 3 / (3.0 * w * b), -area * y * y / (w * b), area * 2.0 * y / (w * b)


@njit(cache=True)
def directional_moments(verts, fptr, fidx, normals, offsets, u, r, flat):
    """Overlap volume, its r-derivative and the continuous density along ``u``."""
    nf = normals.shape[0]
    e1, e2 = _basis(u)
    # per face: sign, 2D polygon, height coefficients
    nu = np.empty(nf)
    for f in range(nf):
        nu[f] = normals[f, 0] * u[0] + normals[f, 1] * u[1] + normals[f, 2] * u[2]
    px = np.empty((nf, _MAXV))
    py = np.empty((nf, _MAXV))
    npts = np.zeros(nf, np.int64)
    h = np.empty((nf, 3))
    for f in range(nf):
        k = fptr[f + 1] - fptr[f]
        npts[f] = k
        for i in range(k):
            # bottom faces are reversed so every projected polygon is CCW
            j = fptr[f] + i if nu[f] > 0 else fptr[f] + (k - 1 - i)
            v = verts[fidx[j]]
            px[f, i] = v[0] * e1[0] + v[1] * e1[1] + v[2] * e1[2]
            py[f, i] = v[0] * e2[0] + v[1] * e2[1] + v[2] * e2[2]
        if nu[f] != 0.0:
            n1 = normals[f, 0] * e1[0] + normals[f, 1] * e1[1] + normals[f, 2] * e1[2]
            n2 = normals[f, 0] * e2[0] + normals[f, 1] * e2[1] + normals[f, 2] * e2[2]
            h[f, 0] = offsets[f] / nu[f]
            h[f, 1] = -n1 / nu[f]
            h[f, 2] = -n2 / nu[f]
    ox = np.empty(_MAXV)
    oy = np.empty(_MAXV)
    tx = np.empty(_MAXV)
    ty = np.empty(_MAXV)
    vol = 0.0
    dvol = 0.0
    dens = 0.0
    for f in range(nf):
        if nu[f] <= 1e-14:
            continue
        fx0, fx1 = px[f, :npts[f]].min(), px[f, :npts[f]].max()
        fy0, fy1 = py[f, :npts[f]].min(), py[f, :npts[f]].max()
        for g in range(nf):
            if nu[g] >= -1e-14:
                continue
            if (px[g, :npts[g]].max() <= fx0 or px[g, :npts[g]].min() >= fx1
                    or py[g, :npts[g]].max() <= fy0 or py[g, :npts[g]].min() >= fy1):
                continue
            m = _clip(px[f], py[f], npts[f], px[g], py[g], npts[g], ox, oy, tx, ty)
            if m < 3:
                continue
            c0 = h[f, 0] - h[g, 0]
            c1 = h[f, 1] - h[g, 1]
            c2 = h[f, 2] - h[g, 2]
            anti = (abs(normals[f, 0] + normals[g, 0]) + abs(normals[f, 1] + normals[g, 1])
                    + abs(normals[f, 2] + normals[g, 2])) < 1e-12
            la = c0 + c1 * ox[0] + c2 * oy[0]
            for i in range(1, m - 1):
                bx, by = ox[i] - ox[0], oy[i] - oy[0]
                cx, cy = ox[i + 1] - ox[0], oy[i + 1] - oy[0]
                area = 0.5 * (bx * cy - by * cx)
                if area <= 0.0:
                    continue
                lb = c0 + c1 * ox[i] + c2 * oy[i]
                lc = c0 + c1 * ox[i + 1] + c2 * oy[i + 1]
                e, de, d2 = _triangle(la, lb, lc, area, r, 1e300 if anti else flat)
                vol += e
                dvol += de
                dens += d2
    return vol, dvol, dens


@njit(cache=True)
def batch_moments(verts, fptr, fidx, normals, offsets, dirs, r, flat):
    n = dirs.shape[0]
    out = np.empty((n, 3))
    for i in range(n):
        a, b, c = directional_moments(verts, fptr, fidx, normals, offsets, dirs[i], r, flat)
        out[i, 0] = a
        out[i, 1] = b
        out[i, 2] = c
    return out


@njit(cache=True)
def polygon_overlap_area(ax, ay, bx, by):
    """Area of the intersection of two CCW convex polygons."""
    ox = np.empty(_MAXV)
    oy = np.empty(_MAXV)
    tx = np.empty(_MAXV)
    ty = np.empty(_MAXV)
    m = _clip(ax, ay, ax.shape[0], bx, by, bx.shape[0], ox, oy, tx, ty)
    s = 0.0
    for i in range(m):
        j = (i + 1) % m
        s += ox[i] * oy[j] - oy[i] * ox[j]
    return 0.5 * s


@njit(cache=True)
def ring_integrand(ax, ay, bx, by, rho, psis):
    """Overlap area of polygon a with polygon b shifted by rho*(cos psi, sin psi)."""
    out = np.empty(psis.shape[0])
    sx = np.empty(bx.shape[0])
    sy = np.empty(by.shape[0])
    for k in range(psis.shape[0]):
        cx = rho * np.cos(psis[k])
        cy = rho * np.sin(psis[k])
        for i in range(bx.shape[0]):
            sx[i] = bx[i] + cx
            sy[i] = by[i] + cy
        out[k] = polygon_overlap_area(ax, ay, sx, sy)
    return out
