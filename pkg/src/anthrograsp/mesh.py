"""Triangle mesh container and per-vertex normals."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import DegenerateVertex, EmptyMesh, InvalidParams

DEGENERATE_AREA = 1e-12

# posture label codes used in PLY files and label arrays
NG, MW, T = 0, 1, 2
UNLABELED = 255


@dataclass(frozen=True, eq=False)
class TriMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    normals: Optional[np.ndarray] = None
    confidence: Optional[np.ndarray] = None
    posture: Optional[np.ndarray] = None

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        f = np.ascontiguousarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise InvalidParams("triangle index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", f)
        for name, dtype, width in (("normals", np.float64, 3),
                                   ("confidence", np.float64, 1),
                                   ("posture", np.uint8, 1)):
            a = getattr(self, name)
            if a is None:
                continue
            a = np.ascontiguousarray(a, dtype=dtype)
            a = a.reshape(-1, 3) if width == 3 else a.reshape(-1)
            if len(a) != len(v):
                raise InvalidParams(f"{name} length {len(a)} != vertex count {len(v)}")
            object.__setattr__(self, name, a)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def corners(self) -> np.ndarray:
        """``(m, 3, 3)`` triangle corner positions."""
        return self.vertices[self.triangles]

    def face_normals(self, unit: bool = True) -> np.ndarray:
        c = self.corners()
        n = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
        if unit:
            ln = np.linalg.norm(n, axis=1, keepdims=True)
            n = np.divide(n, ln, out=np.zeros_like(n), where=ln > 0)
        return n

    def face_areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self.face_normals(unit=False), axis=1)

    def area(self) -> float:
        return float(self.face_areas().sum())

    def signed_volume(self) -> float:
        c = self.corners()
        return float(np.einsum("ij,ij->i", c[:, 0], np.cross(c[:, 1], c[:, 2])).sum() / 6.0)

    def volume_centroid(self) -> np.ndarray:
        c = self.corners()
        vol = np.einsum("ij,ij->i", c[:, 0], np.cross(c[:, 1], c[:, 2])) / 6.0
        return (vol[:, None] * c.sum(axis=1) / 4.0).sum(axis=0) / vol.sum()

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def edge_counts(self) -> dict:
        """Undirected edge -> number of incident triangles."""
        f = self.triangles
        e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        e.sort(axis=1)
        keys, counts = np.unique(e, axis=0, return_counts=True)
        return {tuple(k): int(c) for k, c in zip(keys, counts)}

    def is_closed(self) -> bool:
        return all(c == 2 for c in self.edge_counts().values())

    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edge_counts()) + self.n_triangles

    def flipped(self) -> "TriMesh":
        return replace(self, triangles=self.triangles[:, ::-1].copy(), normals=None)

    def transformed(self, pose) -> "TriMesh":
        """Apply a :class:`SimilarityPose`; normals are rotated, not rescaled."""
        normals = None if self.normals is None else pose.apply_direction(self.normals)
        return replace(self, vertices=pose.apply(self.vertices), normals=normals)

    def with_(self, **kw) -> "TriMesh":
        return replace(self, **kw)


def _face_normals_canonical(mesh: TriMesh) -> np.ndarray:
    """Unnormalized face normals computed from a canonical corner order
    (smallest index first), so reversing a winding negates them exactly."""
    f = mesh.triangles
    r = np.argmin(f, axis=1)
    rows = np.arange(len(f))[:, None]
    g = f[rows, (r[:, None] + np.arange(3)) % 3]
    odd = g[:, 1] > g[:, 2]
    g[odd] = g[odd][:, [0, 2, 1]]
    v = mesh.vertices
    n = np.cross(v[g[:, 1]] - v[g[:, 0]], v[g[:, 2]] - v[g[:, 0]])
    n[odd] = -n[odd]
    return n


def vertex_normals(mesh: TriMesh) -> TriMesh:
    """Angle-weighted average of incident face normals, normalized.

    Contributions are summed per vertex in triangle order, so flipping every
    winding negates the result exactly.
    """
    if mesh.n_vertices == 0 or mesh.n_triangles == 0:
        raise EmptyMesh("mesh has no triangles")
    c = mesh.corners()
    fn = _face_normals_canonical(mesh)
    dbl_area = np.linalg.norm(fn, axis=1)
    good = dbl_area > 2 * DEGENERATE_AREA
    fn_unit = np.zeros_like(fn)
    fn_unit[good] = fn[good] / dbl_area[good, None]

    angles = np.zeros((len(c), 3))
    for k in range(3):
        a = c[:, (k + 1) % 3] - c[:, k]
        b = c[:, (k + 2) % 3] - c[:, k]
        la = np.linalg.norm(a, axis=1)
        lb = np.linalg.norm(b, axis=1)
        ok = good & (la > 0) & (lb > 0)
        cosang = np.zeros(len(c))
        cosang[ok] = np.einsum("ij,ij->i", a[ok], b[ok]) / (la[ok] * lb[ok])
        angles[:, k] = np.where(ok, np.arccos(np.clip(cosang, -1.0, 1.0)), 0.0)

    vid = mesh.triangles.reshape(-1)
    tid = np.repeat(np.arange(len(c)), 3)
    order = np.lexsort((tid, vid))
    contrib = (fn_unit[:, None, :] * angles[:, :, None]).reshape(-1, 3)
    acc = np.zeros_like(mesh.vertices)
    np.add.at(acc, vid[order], contrib[order])

    ln = np.linalg.norm(acc, axis=1)
    bad = np.flatnonzero(ln <= 1e-300)
    if len(bad):
        raise DegenerateVertex(f"{len(bad)} vertices without a non-degenerate incident triangle "
                               f"(first: {bad[0]})")
    return mesh.with_(normals=acc / ln[:, None])


def remove_unreferenced(mesh: TriMesh) -> TriMesh:
    used = np.zeros(mesh.n_vertices, dtype=bool)
    used[mesh.triangles.ravel()] = True
    if used.all():
        return mesh
    remap = np.cumsum(used) - 1
    pick = lambda a: None if a is None else a[used]  # noqa: E731
    return TriMesh(mesh.vertices[used], remap[mesh.triangles], pick(mesh.normals),
                   pick(mesh.confidence), pick(mesh.posture))


def concatenate(meshes) -> TriMesh:
    verts, tris, off = [], [], 0
    for m in meshes:
        verts.append(m.vertices)
        tris.append(m.triangles + off)
        off += m.n_vertices
    return TriMesh(np.concatenate(verts), np.concatenate(tris))
