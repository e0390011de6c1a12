"""Surface sampling and shape-accuracy metrics.

Chamfer-L1 here is the mean of un-squared Euclidean nearest-neighbour
distances, averaged over both directions. Normal consistency uses the
absolute dot product so orientation flips do not count against a mesh.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyMesh, InvalidParams
from .mesh import TriMesh

DEFAULT_SAMPLES = 100_000


@dataclass(frozen=True, eq=False)
class SampledSurface:
    points: np.ndarray
    normals: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        n = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
        if len(p) == 0 or len(p) != len(n):
            raise InvalidParams("need equally many (> 0) points and normals")
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "normals", n)

    def __len__(self):
        return len(self.points)

    def scaled(self, k: float) -> "SampledSurface":
        return SampledSurface(self.points * k, self.normals)


@dataclass(frozen=True)
class ShapeMetrics:
    chamfer_l1: float
    accuracy: float
    completeness: float
    normal_consistency: float

    def to_dict(self) -> dict:
        return asdict(self)


def sample_surface(mesh: TriMesh, n: int = DEFAULT_SAMPLES, seed: int = 0) -> SampledSurface:
    """Area-weighted uniform samples with their triangle's unit normal."""
    if mesh.n_triangles == 0:
        raise EmptyMesh("cannot sample an empty mesh")
    if n < 1:
        raise InvalidParams("sample count must be >= 1")
    areas = mesh.face_areas()
    total = areas.sum()
    if not total > 0:
        raise EmptyMesh("mesh has zero surface area")
    rng = np.random.default_rng(seed)
    tri = rng.choice(len(areas), size=n, p=areas / total)
    r1, r2 = rng.random(n), rng.random(n)
    s = np.sqrt(r1)
    w = np.column_stack([1 - s, s * (1 - r2), s * r2])
    c = mesh.corners()[tri]
    pts = np.einsum("ij,ijk->ik", w, c)
    return SampledSurface(pts, mesh.face_normals()[tri])


def _directed(src: SampledSurface, dst: SampledSurface):
    dist, idx = cKDTree(dst.points).query(src.points, k=1)
    dots = np.abs(np.sum(src.normals * dst.normals[idx], axis=1))
    return float(dist.mean()), float(dots.mean())


def shape_metrics(pred: SampledSurface, gt: SampledSurface) -> ShapeMetrics:
    accuracy, nc_pred = _directed(pred, gt)
    completeness, nc_gt = _directed(gt, pred)
    nc = float(np.clip((nc_pred + nc_gt) / 2.0, 0.0, 1.0))
    return ShapeMetrics((accuracy + completeness) / 2.0, accuracy, completeness, nc)


def mesh_metrics(pred: TriMesh, gt: TriMesh, n: int = DEFAULT_SAMPLES, seed: int = 0) -> ShapeMetrics:
    """Sample both meshes with the same seed and compare."""
    return shape_metrics(sample_surface(pred, n, seed), sample_surface(gt, n, seed + 1))
