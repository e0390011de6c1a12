"""Iso-surface extraction from occupancy grids.

Marching cubes runs over cells of a lattice laid on the grid's index space
``[0, N-1]^3``; corner values come from the trilinear interpolant of the
grid. The case table is generated at import from a face rule: on every cube
face the crossed edges are paired, and a face with four crossings keeps its
inside corners apart. Neighbouring cells see the same face rule, so the
surface is watertight wherever it does not leave the grid.

A corner is inside when its value is strictly greater than ``iso``.
Triangles are wound so their normals point toward lower occupancy.
"""
from __future__ import annotations

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from . import kernels
from .errors import EmptySurface, InvalidParams
from .mesh import TriMesh, vertex_normals

WELD_TOL = 1e-7

_CORNERS = np.array([(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0),
                     (0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1)])
_EDGES = [(0, 1), (1, 2), (3, 2), (0, 3), (4, 5), (5, 6), (7, 6), (4, 7),
          (0, 4), (1, 5), (2, 6), (3, 7)]
# each edge as (start corner offset, axis); edges run along +axis
_EDGE_START = np.array([_CORNERS[a] for a, _ in _EDGES])
_EDGE_AXIS = np.array([int(np.flatnonzero(_CORNERS[b] - _CORNERS[a])[0]) for a, b in _EDGES])
_FACES = [((0, 3, 7, 4), (-1, 0, 0)), ((1, 2, 6, 5), (1, 0, 0)),
          ((0, 1, 5, 4), (0, -1, 0)), ((3, 2, 6, 7), (0, 1, 0)),
          ((0, 1, 2, 3), (0, 0, -1)), ((4, 5, 6, 7), (0, 0, 1))]


def _edge_index(a: int, b: int) -> int:
    for i, e in enumerate(_EDGES):
        if set(e) == {a, b}:
            return i
    raise KeyError((a, b))


def _build_table():
    mid = np.array([(_CORNERS[a] + _CORNERS[b]) / 2.0 for a, b in _EDGES])
    table = []
    for case in range(256):
        inside = [(case >> c) & 1 for c in range(8)]
        nxt = {}
        for ring, normal in _FACES:
            f = np.array(normal, dtype=float)
            edges = [_edge_index(ring[i], ring[(i + 1) % 4]) for i in range(4)]
            crossed = [e for i, e in enumerate(edges) if inside[ring[i]] != inside[ring[(i + 1) % 4]]]
            segs = []
            if len(crossed) == 2:
                m = np.mean([_CORNERS[c] for c in ring if inside[c]], axis=0)
                segs.append((crossed[0], crossed[1], m))
            elif len(crossed) == 4:
                for i, c in enumerate(ring):
                    if inside[c]:
                        segs.append((edges[i - 1], edges[i], _CORNERS[c].astype(float)))
            for a, b, m in segs:
                # inside region on the left, viewed from outside the cube
                if np.dot(np.cross(mid[b] - mid[a], m - mid[a]), f) < 0:
                    a, b = b, a
                assert a not in nxt
                nxt[a] = b
        tris = []
        seen = set()
        for start in sorted(nxt):
            if start in seen:
                continue
            cyc = [start]
            seen.add(start)
            while nxt[cyc[-1]] != start:
                cyc.append(nxt[cyc[-1]])
                seen.add(cyc[-1])
            for k in range(1, len(cyc) - 1):
                tris.append((cyc[0], cyc[k + 1], cyc[k]))
        table.append(tris)
    return table


TRI_TABLE = _build_table()
_MAX_TRIS = max(len(t) for t in TRI_TABLE)
_TABLE = np.full((256, _MAX_TRIS, 3), -1, dtype=np.int64)
_NTRI = np.zeros(256, dtype=np.int64)
for _c, _t in enumerate(TRI_TABLE):
    _NTRI[_c] = len(_t)
    if _t:
        _TABLE[_c, :len(_t)] = _t


class _Lattice:
    """Corner lattice of ``res`` cells per axis over index space, with a
    lazily filled value cache."""

    def __init__(self, data: np.ndarray, res: int):
        self.data = data
        self.res = res
        self.step = (np.array(data.shape) - 1) / res          # index units per cell
        self.n1 = res + 1
        self.values = np.full(self.n1 ** 3, np.nan)

    def points(self, p: np.ndarray) -> np.ndarray:
        return p * self.step

    def flat(self, p: np.ndarray) -> np.ndarray:
        return (p[..., 0] * self.n1 + p[..., 1]) * self.n1 + p[..., 2]

    def unflat(self, f: np.ndarray) -> np.ndarray:
        n1 = self.n1
        return np.stack([f // (n1 * n1), (f // n1) % n1, f % n1], axis=-1)

    def evaluate_flat(self, f: np.ndarray) -> np.ndarray:
        """Field values at flat lattice point ids."""
        v = self.values[f]
        todo = np.isnan(v)
        if todo.any():
            q = np.unique(f[todo])
            self.values[q] = kernels.trilinear(self.data, self.points(self.unflat(q)))
            v = self.values[f]
        return v

    def evaluate(self, p: np.ndarray) -> np.ndarray:
        """Field values at integer lattice points ``(m, 3)``."""
        return self.evaluate_flat(self.flat(p))

    def fill(self) -> np.ndarray:
        """Evaluate every lattice point; returns the ``(res+1)^3`` array."""
        r = np.arange(self.n1)
        pts = np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3)
        self.values = kernels.trilinear(self.data, self.points(pts))
        return self.values.reshape((self.n1,) * 3)


def _corner_points(cells: np.ndarray) -> np.ndarray:
    """``(m, 8, 3)`` lattice points of cells given by their min corner."""
    return cells[:, None, :] + _CORNERS[None, :, :]


def _block_range(data: np.ndarray, width: int):
    """Min/max of ``data`` over the window ``[i, i + width)`` along every
    axis, truncated at the far boundary."""
    lo, hi = data.copy(), data.copy()
    for axis in range(3):
        n = data.shape[axis]
        src_lo, src_hi = lo.copy(), hi.copy()
        for s in range(1, min(width, n)):
            head = [slice(None)] * 3
            tail = [slice(None)] * 3
            head[axis] = slice(0, n - s)
            tail[axis] = slice(s, n)
            head, tail = tuple(head), tuple(tail)
            lo[head] = np.minimum(lo[head], src_lo[tail])
            hi[head] = np.maximum(hi[head], src_hi[tail])
    return lo, hi


def _range_straddles(data: np.ndarray, cells: np.ndarray, cell_size: float, iso: float,
                     cache: dict) -> np.ndarray:
    """Conservative test: can the interpolant over the cell take values on
    both sides of ``iso``? Uses extremes of the data samples whose cells the
    lattice cell overlaps."""
    width = int(np.ceil(np.max(cell_size))) + 2
    if width not in cache:
        cache[width] = _block_range(data, width)
    lo, hi = cache[width]
    start = np.floor(cells * cell_size + 1e-12).astype(np.int64)
    start = np.minimum(start, np.array(data.shape) - 1)
    mn = lo[start[:, 0], start[:, 1], start[:, 2]]
    mx = hi[start[:, 0], start[:, 1], start[:, 2]]
    return (mx > iso) & (mn <= iso)


_BITS = (1 << np.arange(8)).astype(np.int64)


def _cell_cases(lat: _Lattice, cells: np.ndarray, iso: float, scale: int = 1) -> np.ndarray:
    """Case index of each cell; ``scale`` maps coarse cells onto the lattice."""
    vals = lat.evaluate_flat(lat.flat(_corner_points(cells) * scale))
    return (vals > iso) @ _BITS


def _dense_cases(values: np.ndarray, iso: float) -> np.ndarray:
    inside = (values > iso).astype(np.int64)
    case = np.zeros(tuple(s - 1 for s in values.shape), dtype=np.int64)
    for bit, (i, j, k) in enumerate(_CORNERS):
        case |= inside[i:i + case.shape[0], j:j + case.shape[1], k:k + case.shape[2]] << bit
    return case


def _march(lat: _Lattice, cells: np.ndarray, case: np.ndarray, iso: float, origin,
           voxel_size: float) -> TriMesh:
    """Marching cubes over the given cells of the lattice; vertices are keyed
    by global lattice edge and welded."""
    ntri = _NTRI[case]
    keep = ntri > 0
    cells, case, ntri = cells[keep], case[keep], ntri[keep]
    if len(cells) == 0:
        raise EmptySurface("no cell crosses the iso level")
    # expand triangles
    cell_idx = np.repeat(np.arange(len(cells)), ntri)
    slot = np.arange(ntri.sum()) - np.repeat(np.cumsum(ntri) - ntri, ntri)
    local = _TABLE[case[cell_idx], slot]                          # (t, 3) local edges
    start = cells[cell_idx][:, None, :] + _EDGE_START[local]      # (t, 3, 3)
    axis = _EDGE_AXIS[local]
    gid = lat.flat(start) * 3 + axis
    uniq, inv = np.unique(gid.ravel(), return_inverse=True)
    tris = inv.reshape(-1, 3)

    e_axis = uniq % 3
    p0 = lat.unflat(uniq // 3)
    p1 = p0.copy()
    p1[np.arange(len(p1)), e_axis] += 1
    v0 = lat.evaluate(p0)
    v1 = lat.evaluate(p1)
    t = (iso - v0) / (v1 - v0)
    q = lat.points(p0.astype(np.float64))
    q[np.arange(len(q)), e_axis] += t * lat.step[e_axis]
    verts = np.asarray(origin, dtype=np.float64) + q * voxel_size
    return weld(verts, tris)


def weld(vertices: np.ndarray, triangles: np.ndarray, tol: float = WELD_TOL) -> TriMesh:
    """Merge vertices closer than ``tol``, drop triangles that collapse and
    vertices no triangle uses."""
    n = len(vertices)
    parent = np.arange(n)
    pairs = cKDTree(vertices).query_pairs(tol, output_type="ndarray")
    if len(pairs):
        graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
        _, comp = connected_components(graph, directed=False)
        # representative = lowest original index in each component
        first = np.full(comp.max() + 1, n)
        np.minimum.at(first, comp, np.arange(n))
        parent = first[comp]
    tris = parent[triangles]
    ok = (tris[:, 0] != tris[:, 1]) & (tris[:, 1] != tris[:, 2]) & (tris[:, 0] != tris[:, 2])
    tris = tris[ok]
    used = np.zeros(n, dtype=bool)
    used[tris.ravel()] = True
    remap = np.cumsum(used) - 1
    return TriMesh(vertices[used], remap[tris])


def _check(occ, iso):
    if not 0.0 < iso < 1.0:
        raise InvalidParams("iso must lie strictly between 0 and 1")
    data = np.asarray(occ.values, dtype=np.float64)
    if min(data.shape) < 2:
        raise InvalidParams("grid needs at least two samples per axis")
    return data


def extract_mesh_dense(occ, iso: float = 0.5, resolution: int = 128) -> TriMesh:
    """Marching cubes over every cell of a ``resolution``³ lattice; the
    brute-force reference for :func:`extract_mesh_mise`."""
    data = _check(occ, iso)
    lat = _Lattice(data, resolution)
    case = _dense_cases(lat.fill(), iso).ravel()
    live = np.flatnonzero(_NTRI[case] > 0)
    r = resolution
    cells = np.column_stack([live // (r * r), (live // r) % r, live % r])
    return _march(lat, cells, case[live], iso, occ.origin, occ.voxel_size)


def extract_mesh_mise(occ, iso: float = 0.5, initial_res: int = 32,
                      refinement_steps: int = 2, with_normals: bool = True) -> TriMesh:
    """Multi-resolution iso-surface extraction.

    Starts from an ``initial_res``³ lattice and subdivides active cells
    ``refinement_steps`` times. A cell is active if its corners change sign
    across ``iso`` or the data samples it overlaps span ``iso``; the second
    test is conservative, so no surface a dense lattice would find is lost.
    """
    data = _check(occ, iso)
    if initial_res < 1 or refinement_steps < 0:
        raise InvalidParams("initial_res >= 1 and refinement_steps >= 0 required")
    final = initial_res * 2 ** refinement_steps
    lat = _Lattice(data, final)
    ranges = {}
    r = np.arange(initial_res)
    cells = np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3)
    children = _CORNERS
    for level in range(refinement_steps + 1):
        scale = 2 ** (refinement_steps - level)
        cell_size = lat.step * scale
        # corner evaluation on the coarse lattice (cached at the final lattice)
        case = _cell_cases(lat, cells, iso, scale)
        if level == refinement_steps:
            break
        crossing = (case != 0) & (case != 255)
        active = crossing | _range_straddles(data, cells, cell_size, iso, ranges)
        cells = (2 * cells[active][:, None, :] + children[None, :, :]).reshape(-1, 3)
    mesh = _march(lat, cells, case, iso, occ.origin, occ.voxel_size)
    return vertex_normals(mesh) if with_normals else mesh


def attach_confidence(mesh: TriMesh, occ) -> TriMesh:
    """Per-vertex shape confidence; vertices within one voxel of the grid
    boundary are clamped inward for the stencil."""
    from .volume import vertex_confidences
    q = occ.to_index(mesh.vertices)
    q = np.clip(q, 1.0, np.array(occ.shape) - 2)
    return mesh.with_(confidence=vertex_confidences(occ, occ.to_world(q)))
