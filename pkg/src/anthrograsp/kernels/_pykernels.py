"""Pure-numpy reference implementations of the hot kernels.

Signatures and results match ``_ckernels`` exactly; these are used when the
compiled extension is not importable or ``ANTHROGRASP_PURE_PYTHON`` is set.
"""
import numpy as np

INSIDE_EPS = 1e-10
HIT_EPS = 1e-12


def rasterize_depth(tris, fx, fy, cx, cy, width, height, near):
    """Z-buffer camera-frame triangles ``(T, 3, 3)`` into a depth image.

    Pixel ``(u, v)`` samples the ray through ``((u - cx)/fx, (v - cy)/fy, 1)``.
    Triangles with any vertex at ``z <= near`` are skipped. Returns ``(H, W)``
    float64 with 0 where nothing was hit.
    """
    tris = np.ascontiguousarray(tris, dtype=np.float64)
    zbuf = np.full((height, width), np.inf)
    for tri in tris:
        z = tri[:, 2]
        if z.min() <= near:
            continue
        us = fx * tri[:, 0] / z + cx
        vs = fy * tri[:, 1] / z + cy
        u0 = max(int(np.ceil(us.min())), 0)
        u1 = min(int(np.floor(us.max())), width - 1)
        v0 = max(int(np.ceil(vs.min())), 0)
        v1 = min(int(np.floor(vs.max())), height - 1)
        if u0 > u1 or v0 > v1:
            continue
        area = (us[1] - us[0]) * (vs[2] - vs[0]) - (vs[1] - vs[0]) * (us[2] - us[0])
        if area == 0.0:
            continue
        pu, pv = np.meshgrid(np.arange(u0, u1 + 1, dtype=np.float64),
                             np.arange(v0, v1 + 1, dtype=np.float64))
        w0 = (us[2] - us[1]) * (pv - vs[1]) - (vs[2] - vs[1]) * (pu - us[1])
        w1 = (us[0] - us[2]) * (pv - vs[2]) - (vs[0] - vs[2]) * (pu - us[2])
        w2 = (us[1] - us[0]) * (pv - vs[0]) - (vs[1] - vs[0]) * (pu - us[0])
        b0, b1, b2 = w0 / area, w1 / area, w2 / area
        inside = (b0 >= -INSIDE_EPS) & (b1 >= -INSIDE_EPS) & (b2 >= -INSIDE_EPS)
        if not inside.any():
            continue
        depth = 1.0 / (b0 / z[0] + b1 / z[1] + b2 / z[2])
        sub = zbuf[v0:v1 + 1, u0:u1 + 1]
        closer = inside & (depth < sub) & (depth > near)
        sub[closer] = depth[closer]
    zbuf[~np.isfinite(zbuf)] = 0.0
    return zbuf


def trilinear(grid, q):
    """Sample ``grid`` at continuous index coordinates ``q`` ``(M, 3)``.

    Coordinates are clamped to ``[0, n - 1]`` per axis.
    """
    grid = np.ascontiguousarray(grid, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64).reshape(-1, 3)
    shape = np.array(grid.shape)
    qc = np.clip(q, 0.0, shape - 1)
    i0 = np.minimum(np.floor(qc).astype(np.int64), shape - 2)
    f = qc - i0
    i, j, k = i0[:, 0], i0[:, 1], i0[:, 2]
    fx, fy, fz = f[:, 0], f[:, 1], f[:, 2]
    c00 = grid[i, j, k] * (1 - fx) + grid[i + 1, j, k] * fx
    c10 = grid[i, j + 1, k] * (1 - fx) + grid[i + 1, j + 1, k] * fx
    c01 = grid[i, j, k + 1] * (1 - fx) + grid[i + 1, j, k + 1] * fx
    c11 = grid[i, j + 1, k + 1] * (1 - fx) + grid[i + 1, j + 1, k + 1] * fx
    c0 = c00 * (1 - fy) + c10 * fy
    c1 = c01 * (1 - fy) + c11 * fy
    return c0 * (1 - fz) + c1 * fz


def ray_first_hit(origins, dirs, tris):
    """Nearest positive hit distance of each ray against triangles.

    Möller–Trumbore, two-sided. ``dirs`` need not be unit; the returned
    parameter ``t`` is in units of ``|dir|``. Misses are ``inf``.
    """
    origins = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
    dirs = np.asarray(dirs, dtype=np.float64).reshape(-1, 3)
    tris = np.asarray(tris, dtype=np.float64).reshape(-1, 3, 3)
    out = np.full(len(origins), np.inf)
    if len(tris) == 0:
        return out
    v0 = tris[:, 0]
    e1 = tris[:, 1] - v0
    e2 = tris[:, 2] - v0
    for r in range(len(origins)):
        d = dirs[r]
        p = np.cross(d, e2)
        det = np.einsum("ij,ij->i", e1, p)
        ok = np.abs(det) > HIT_EPS
        inv = np.zeros_like(det)
        inv[ok] = 1.0 / det[ok]
        s = origins[r] - v0
        u = np.einsum("ij,ij->i", s, p) * inv
        qv = np.cross(s, e1)
        v = (qv @ d) * inv
        t = np.einsum("ij,ij->i", e2, qv) * inv
        hit = ok & (u >= 0) & (v >= 0) & (u + v <= 1) & (t > HIT_EPS)
        if hit.any():
            out[r] = t[hit].min()
    return out
