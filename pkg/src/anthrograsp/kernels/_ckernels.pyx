# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels; see ``_pykernels`` for contracts."""
import numpy as np
from libc.math cimport ceil, floor, fabs, INFINITY

cdef double INSIDE_EPS = 1e-10
cdef double HIT_EPS = 1e-12


def rasterize_depth(tris, double fx, double fy, double cx, double cy,
                    int width, int height, double near):
    cdef double[:, :, ::1] T = np.ascontiguousarray(tris, dtype=np.float64)
    zbuf_arr = np.full((height, width), np.inf)
    cdef double[:, ::1] zbuf = zbuf_arr
    cdef Py_ssize_t t, n = T.shape[0]
    cdef double z0, z1, z2, u_0, u_1, u_2, v_0, v_1, v_2, area
    cdef double w0, w1, w2, b0, b1, b2, depth, pu, pv
    cdef int ua, ub, va, vb, x, y
    for t in range(n):
        z0 = T[t, 0, 2]
        z1 = T[t, 1, 2]
        z2 = T[t, 2, 2]
        if z0 <= near or z1 <= near or z2 <= near:
            continue
        u_0 = fx * T[t, 0, 0] / z0 + cx
        u_1 = fx * T[t, 1, 0] / z1 + cx
        u_2 = fx * T[t, 2, 0] / z2 + cx
        v_0 = fy * T[t, 0, 1] / z0 + cy
        v_1 = fy * T[t, 1, 1] / z1 + cy
        v_2 = fy * T[t, 2, 1] / z2 + cy
        ua = <int>ceil(min(u_0, min(u_1, u_2)))
        ub = <int>floor(max(u_0, max(u_1, u_2)))
        va = <int>ceil(min(v_0, min(v_1, v_2)))
        vb = <int>floor(max(v_0, max(v_1, v_2)))
        if ua < 0:
            ua = 0
        if va < 0:
            va = 0
        if ub > width - 1:
            ub = width - 1
        if vb > height - 1:
            vb = height - 1
        if ua > ub or va > vb:
            continue
        area = (u_1 - u_0) * (v_2 - v_0) - (v_1 - v_0) * (u_2 - u_0)
        if area == 0.0:
            continue
        for y in range(va, vb + 1):
            pv = y
            for x in range(ua, ub + 1):
                pu = x
                w0 = (u_2 - u_1) * (pv - v_1) - (v_2 - v_1) * (pu - u_1)
                w1 = (u_0 - u_2) * (pv - v_2) - (v_0 - v_2) * (pu - u_2)
                w2 = (u_1 - u_0) * (pv - v_0) - (v_1 - v_0) * (pu - u_0)
                b0 = w0 / area
                b1 = w1 / area
                b2 = w2 / area
                if b0 < -INSIDE_EPS or b1 < -INSIDE_EPS or b2 < -INSIDE_EPS:
                    continue
                depth = 1.0 / (b0 / z0 + b1 / z1 + b2 / z2)
                if depth > near and depth < zbuf[y, x]:
                    zbuf[y, x] = depth
    zbuf_arr[~np.isfinite(zbuf_arr)] = 0.0
    return zbuf_arr


def trilinear(grid, q):
    cdef double[:, :, ::1] G = np.ascontiguousarray(grid, dtype=np.float64)
    cdef double[:, ::1] Q = np.ascontiguousarray(np.asarray(q, dtype=np.float64).reshape(-1, 3))
    cdef Py_ssize_t m, M = Q.shape[0]
    out_arr = np.empty(M)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t nx = G.shape[0], ny = G.shape[1], nz = G.shape[2]
    cdef double qx, qy, qz, fx, fy, fz, c00, c10, c01, c11, c0, c1
    cdef Py_ssize_t i, j, k
    for m in range(M):
        qx = min(max(Q[m, 0], 0.0), <double>(nx - 1))
        qy = min(max(Q[m, 1], 0.0), <double>(ny - 1))
        qz = min(max(Q[m, 2], 0.0), <double>(nz - 1))
        i = min(<Py_ssize_t>floor(qx), nx - 2)
        j = min(<Py_ssize_t>floor(qy), ny - 2)
        k = min(<Py_ssize_t>floor(qz), nz - 2)
        fx = qx - i
        fy = qy - j
        fz = qz - k
        c00 = G[i, j, k] * (1 - fx) + G[i + 1, j, k] * fx
        c10 = G[i, j + 1, k] * (1 - fx) + G[i + 1, j + 1, k] * fx
        c01 = G[i, j, k + 1] * (1 - fx) + G[i + 1, j, k + 1] * fx
        c11 = G[i, j + 1, k + 1] * (1 - fx) + G[i + 1, j + 1, k + 1] * fx
        c0 = c00 * (1 - fy) + c10 * fy
        c1 = c01 * (1 - fy) + c11 * fy
        out[m] = c0 * (1 - fz) + c1 * fz
    return out_arr


def ray_first_hit(origins, dirs, tris):
    cdef double[:, ::1] O = np.ascontiguousarray(np.asarray(origins, dtype=np.float64).reshape(-1, 3))
    cdef double[:, ::1] D = np.ascontiguousarray(np.asarray(dirs, dtype=np.float64).reshape(-1, 3))
    cdef double[:, :, ::1] T = np.ascontiguousarray(np.asarray(tris, dtype=np.float64).reshape(-1, 3, 3))
    cdef Py_ssize_t r, t, R = O.shape[0], n = T.shape[0]
    out_arr = np.full(R, np.inf)
    cdef double[::1] out = out_arr
    cdef double e1x, e1y, e1z, e2x, e2y, e2z, px, py, pz, det, inv
    cdef double sx, sy, sz, u, v, qx, qy, qz, tt, best, dx, dy, dz
    for r in range(R):
        best = INFINITY
        dx = D[r, 0]
        dy = D[r, 1]
        dz = D[r, 2]
        for t in range(n):
            e1x = T[t, 1, 0] - T[t, 0, 0]
            e1y = T[t, 1, 1] - T[t, 0, 1]
            e1z = T[t, 1, 2] - T[t, 0, 2]
            e2x = T[t, 2, 0] - T[t, 0, 0]
            e2y = T[t, 2, 1] - T[t, 0, 1]
            e2z = T[t, 2, 2] - T[t, 0, 2]
            px = dy * e2z - dz * e2y
            py = dz * e2x - dx * e2z
            pz = dx * e2y - dy * e2x
            det = e1x * px + e1y * py + e1z * pz
            if fabs(det) <= HIT_EPS:
                continue
            inv = 1.0 / det
            sx = O[r, 0] - T[t, 0, 0]
            sy = O[r, 1] - T[t, 0, 1]
            sz = O[r, 2] - T[t, 0, 2]
            u = (sx * px + sy * py + sz * pz) * inv
            if u < 0.0 or u > 1.0:
                continue
            qx = sy * e1z - sz * e1y
            qy = sz * e1x - sx * e1z
            qz = sx * e1y - sy * e1x
            v = (dx * qx + dy * qy + dz * qz) * inv
            if v < 0.0 or u + v > 1.0:
                continue
            tt = (e2x * qx + e2y * qy + e2z * qz) * inv
            if tt > HIT_EPS and tt < best:
                best = tt
        out[r] = best
    return out_arr
