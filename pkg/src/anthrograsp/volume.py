"""Partial TSDF volumes, occupancy completion and shape confidence.

Lattice convention: sample ``(i, j, k)`` sits at ``origin + (i, j, k) *
voxel_size``; ``origin`` is the centre of the first voxel. The default grid
is 64³ covering the canonical cube of side 1 centred at the origin.

TSDF sign: positive in free space (camera side), negative behind the
observed surface; values are normalised by the truncation distance.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from . import kernels
from .errors import EmptyCloud, InvalidParams, OutOfBounds, ParseError, UnknownStrategy


@dataclass(frozen=True)
class GridSpec:
    resolution: int = 64
    side: float = 1.0
    center: tuple = (0.0, 0.0, 0.0)
    truncation_voxels: float = 4.0

    @property
    def voxel_size(self) -> float:
        return self.side / self.resolution

    @property
    def origin(self) -> np.ndarray:
        return np.asarray(self.center, dtype=np.float64) - self.side / 2 + self.voxel_size / 2

    @property
    def truncation(self) -> float:
        return self.truncation_voxels * self.voxel_size


def _f32(a) -> np.ndarray:
    # keep in-memory values exactly representable in the float32 dump format
    return np.asarray(a, dtype=np.float32).astype(np.float64)


@dataclass(frozen=True, eq=False)
class _Lattice:
    values: np.ndarray
    origin: np.ndarray
    voxel_size: float

    @property
    def resolution(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self):
        return self.values.shape

    def centers(self) -> np.ndarray:
        n = self.values.shape
        idx = np.stack(np.meshgrid(*(np.arange(s) for s in n), indexing="ij"), axis=-1)
        return self.origin + idx.reshape(-1, 3) * self.voxel_size

    def axis_coords(self, axis: int) -> np.ndarray:
        return self.origin[axis] + np.arange(self.values.shape[axis]) * self.voxel_size

    def to_index(self, points) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64) - self.origin) / self.voxel_size

    def to_world(self, q) -> np.ndarray:
        return self.origin + np.asarray(q, dtype=np.float64) * self.voxel_size

    def sample(self, points) -> np.ndarray:
        """Trilinear interpolation at world points ``(m, 3)``."""
        return kernels.trilinear(self.values, self.to_index(np.atleast_2d(points)))


@dataclass(frozen=True, eq=False)
class TsdfVolume(_Lattice):
    truncation: float = 0.0
    observed: np.ndarray = field(default=None)

    def __post_init__(self):
        v = _f32(self.values)
        if v.ndim != 3:
            raise InvalidParams("TSDF values must be a 3-D array")
        if self.voxel_size <= 0 or self.truncation < self.voxel_size - 1e-12:
            raise InvalidParams("need voxel_size > 0 and truncation >= voxel_size")
        object.__setattr__(self, "values", np.clip(v, -1.0, 1.0))
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=np.float64).reshape(3))
        obs = np.ones(v.shape, bool) if self.observed is None else np.asarray(self.observed, bool)
        if obs.shape != v.shape:
            raise InvalidParams("observed mask shape mismatch")
        object.__setattr__(self, "observed", obs)


@dataclass(frozen=True, eq=False)
class OccupancyGrid(_Lattice):
    truncation: float = 0.0

    def __post_init__(self):
        v = _f32(self.values)
        if v.ndim != 3:
            raise InvalidParams("occupancy values must be a 3-D array")
        if np.any(v < 0) or np.any(v > 1) or not np.all(np.isfinite(v)):
            raise InvalidParams("occupancy probabilities must lie in [0, 1]")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=np.float64).reshape(3))


# -- TSDF -------------------------------------------------------------------

def default_cone_angle(directions: np.ndarray, tree: cKDTree, voxel_size: float,
                       distance: float) -> float:
    """Twice the median angular spacing of the cloud, but at least half the
    angle a voxel subtends at ``distance``."""
    if len(directions) > 1:
        d, _ = tree.query(directions, k=2)
        spacing = float(np.median(d[:, 1]))
    else:
        spacing = 0.0
    return max(2.0 * spacing, 0.5 * voxel_size / max(distance, 1e-9))


def voxelize_tsdf(cloud_cano, camera_center_cano, spec: GridSpec = GridSpec(),
                  cone_angle: Optional[float] = None) -> TsdfVolume:
    """Projective TSDF of a canonical-frame point cloud seen from one camera.

    For every voxel centre ``c`` the cloud point whose viewing direction is
    angularly nearest to ``c``'s (within ``cone_angle``) is the surface
    sample on that ray; the signed distance is ``|cam - p| - |cam - c|``.
    Voxels whose ray holds no cloud point are free (+1, observed); voxels
    more than one truncation behind the surface are unobserved (-1).
    """
    pts = np.asarray(getattr(cloud_cano, "points", cloud_cano), dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        raise EmptyCloud("cannot voxelize an empty cloud")
    cam = np.asarray(camera_center_cano, dtype=np.float64).reshape(3)
    dp = pts - cam
    dist_p = np.linalg.norm(dp, axis=1)
    if np.any(dist_p <= 0):
        raise InvalidParams("cloud point coincides with the camera centre")
    dir_p = dp / dist_p[:, None]
    tree = cKDTree(dir_p)

    n, h, delta = spec.resolution, spec.voxel_size, spec.truncation
    lattice = _Lattice(np.zeros((n, n, n)), spec.origin, h)
    centers = lattice.centers()
    if cone_angle is None:
        cone_angle = default_cone_angle(dir_p, tree, h, float(np.linalg.norm(np.asarray(spec.center) - cam)))
    chord = 2.0 * np.sin(cone_angle / 2.0)

    dv = centers - cam
    dist_v = np.linalg.norm(dv, axis=1)
    dir_v = dv / np.maximum(dist_v, 1e-12)[:, None]
    _, idx = tree.query(dir_v, k=1, distance_upper_bound=chord)
    hit = idx < len(pts)

    values = np.ones(len(centers))
    observed = np.ones(len(centers), dtype=bool)
    sdf = dist_p[idx[hit]] - dist_v[hit]
    values[hit] = np.clip(sdf, -delta, delta) / delta
    behind = np.zeros(len(centers), dtype=bool)
    behind[hit] = sdf < -delta
    observed[behind] = False
    values[behind] = -1.0
    shape = (n, n, n)
    return TsdfVolume(values.reshape(shape), spec.origin, h, delta, observed.reshape(shape))


def fuse_tsdf(volumes) -> TsdfVolume:
    """Average several TSDFs on the same lattice over the views that observe
    each voxel; voxels no view observes stay unobserved at -1."""
    volumes = list(volumes)
    if not volumes:
        raise EmptyCloud("nothing to fuse")
    ref = volumes[0]
    acc = np.zeros(ref.shape)
    cnt = np.zeros(ref.shape)
    for v in volumes:
        if v.shape != ref.shape or not np.allclose(v.origin, ref.origin) or v.voxel_size != ref.voxel_size:
            raise InvalidParams("cannot fuse volumes on different lattices")
        acc += np.where(v.observed, v.values, 0.0)
        cnt += v.observed
    seen = cnt > 0
    values = np.where(seen, acc / np.maximum(cnt, 1), -1.0)
    return TsdfVolume(values, ref.origin, ref.voxel_size, ref.truncation, seen)


# -- completion -------------------------------------------------------------

@dataclass(frozen=True)
class Completer:
    """Named completion strategy plus its knobs.

    ``strategy`` is one of ``revolution``, ``mirror``, ``partial`` (the
    long names ``RevolutionPrior``, ``MirrorPrior``, ``PartialOnly`` are
    accepted too). ``category`` selects the profile fill rule for the
    revolution prior: bottles are filled solid, cups and bowls get a floor.
    """

    strategy: str = "revolution"
    category: Optional[str] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        name = _ALIASES.get(self.strategy, self.strategy)
        if name not in STRATEGIES:
            raise UnknownStrategy(f"unknown completion strategy {self.strategy!r}")
        object.__setattr__(self, "strategy", name)


_ALIASES = {"RevolutionPrior": "revolution", "MirrorPrior": "mirror", "PartialOnly": "partial"}


def partial_occupancy(tsdf: TsdfVolume) -> np.ndarray:
    """Binary occupancy of the observed band behind the surface."""
    return (tsdf.values <= 0) & tsdf.observed


def _mirror_y(tsdf: _Lattice, occ: np.ndarray) -> np.ndarray:
    y = tsdf.axis_coords(1)
    j = np.rint((-y - tsdf.origin[1]) / tsdf.voxel_size).astype(int)
    ok = (j >= 0) & (j < occ.shape[1])
    out = np.zeros_like(occ)
    out[:, ok, :] = occ[:, j[ok], :]
    return out


def mirror_occupancy(tsdf: TsdfVolume) -> np.ndarray:
    occ = partial_occupancy(tsdf)
    return occ | _mirror_y(tsdf, occ)


REVOLUTION_DEFAULTS = {
    "radial_bin": 0.5,      # profile radial bin, in voxels
    "shell": 0.5,           # profile evidence: observed values in [-shell, 0]
    "carve_level": 0.5,     # observed TSDF value above which a voxel is free evidence
    "carve_ratio": 1.0,     # profile cell is empty if free >= carve_ratio * occupied
    "closing": 3,           # radial closing length, in bins
    "floor_rows": 2,        # vessel floor thickness, in voxel rows
    "handle_factor": 1.15,  # residual beyond this x profile radius is handle evidence
}


def revolution_profile(tsdf: TsdfVolume, category: Optional[str] = None, **kw):
    """(radius, height) occupancy profile about canonical +Z.

    Returns ``(profile, r_bin)`` with ``profile`` of shape ``(n_r, n_z)``.
    """
    p = {**REVOLUTION_DEFAULTS, **kw}
    xs, ys = tsdf.axis_coords(0), tsdf.axis_coords(1)
    r = np.hypot(xs[:, None], ys[None, :])                       # (nx, ny)
    r_bin = p["radial_bin"] * tsdf.voxel_size
    rb = np.floor(r / r_bin).astype(int)
    n_r = rb.max() + 1
    nz = tsdf.shape[2]
    occ = partial_occupancy(tsdf) & (tsdf.values >= -p["shell"])
    free = tsdf.observed & (tsdf.values >= p["carve_level"])
    occ_cnt = np.zeros((n_r, nz))
    free_cnt = np.zeros((n_r, nz))
    rb3 = np.broadcast_to(rb[:, :, None], tsdf.shape)
    kz3 = np.broadcast_to(np.arange(nz)[None, None, :], tsdf.shape)
    np.add.at(occ_cnt, (rb3[occ], kz3[occ]), 1.0)
    np.add.at(free_cnt, (rb3[free], kz3[free]), 1.0)
    prof = (occ_cnt > 0) & (free_cnt < p["carve_ratio"] * occ_cnt)

    if p["closing"] > 1:
        prof = ndimage.binary_closing(prof, structure=np.ones((int(p["closing"]), 1)), border_value=0)
        prof |= (occ_cnt > 0) & (free_cnt < p["carve_ratio"] * occ_cnt)
    rows = np.flatnonzero(prof.any(axis=0))
    if len(rows) and category is not None:
        outer = np.array([np.flatnonzero(prof[:, k]).max() if prof[:, k].any() else -1
                          for k in range(nz)])
        if category == "bottle":
            for k in rows:
                prof[: outer[k] + 1, k] = True
        elif category in ("cup", "bowl"):
            z0 = rows[0]
            for k in range(z0, min(nz, z0 + int(p["floor_rows"]))):
                if outer[k] >= 0:
                    prof[: outer[k] + 1, k] = True
    return prof, r_bin


def revolution_occupancy(tsdf: TsdfVolume, category: Optional[str] = None, **kw) -> np.ndarray:
    """Sweep the closed profile about +Z, then add mirrored off-axis residue."""
    p = {**REVOLUTION_DEFAULTS, **kw}
    prof, r_bin = revolution_profile(tsdf, category, **p)
    xs, ys = tsdf.axis_coords(0), tsdf.axis_coords(1)
    r = np.hypot(xs[:, None], ys[None, :])
    rb = np.minimum(np.floor(r / r_bin).astype(int), prof.shape[0] - 1)
    occ = prof[rb]                                                # (nx, ny, nz)

    outer_r = np.array([(np.flatnonzero(prof[:, k]).max() + 1) * r_bin if prof[:, k].any() else 0.0
                        for k in range(prof.shape[1])])
    observed_occ = partial_occupancy(tsdf)
    residual = observed_occ & (r[:, :, None] > p["handle_factor"] * outer_r[None, None, :])
    residual &= outer_r[None, None, :] > 0
    return occ | residual | _mirror_y(tsdf, residual)


STRATEGIES = {
    "revolution": revolution_occupancy,
    "mirror": lambda tsdf, category=None, **kw: mirror_occupancy(tsdf),
    "partial": lambda tsdf, category=None, **kw: partial_occupancy(tsdf),
}


def smooth(binary: np.ndarray) -> np.ndarray:
    """One pass of a 3³ box filter, zero outside the grid."""
    soft = ndimage.uniform_filter(np.asarray(binary, dtype=np.float64), size=3, mode="constant")
    return np.clip(soft, 0.0, 1.0)


def complete(tsdf: TsdfVolume, completer: Completer = Completer()) -> OccupancyGrid:
    raw = STRATEGIES[completer.strategy](tsdf, completer.category, **completer.params)
    return OccupancyGrid(smooth(raw), tsdf.origin, tsdf.voxel_size, tsdf.truncation)


# -- confidence ---------------------------------------------------------------

def vertex_confidences(occ: _Lattice, points) -> np.ndarray:
    """Gradient norm of the trilinear occupancy field, per unit length.

    Central differences with step ``voxel_size / 2`` along each axis. Points
    must lie at least one voxel inside the lattice.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    q = occ.to_index(pts)
    hi = np.array(occ.shape) - 2
    if np.any(q < 1.0) or np.any(q > hi):
        raise OutOfBounds("point closer than one voxel to the grid boundary")
    half = 0.5
    grads = []
    for a in range(3):
        e = np.zeros(3)
        e[a] = half
        fp = kernels.trilinear(occ.values, q + e)
        fm = kernels.trilinear(occ.values, q - e)
        grads.append((fp - fm) / occ.voxel_size)
    return np.linalg.norm(np.column_stack(grads), axis=1)


def vertex_confidence(occ: _Lattice, v) -> float:
    return float(vertex_confidences(occ, np.asarray(v, dtype=np.float64).reshape(1, 3))[0])


# -- files ------------------------------------------------------------------

def save_grid(grid, path) -> None:
    """JSON header line, then little-endian float32 values in C order
    (x slowest); TSDF dumps append a uint8 observed mask."""
    is_tsdf = isinstance(grid, TsdfVolume)
    header = {
        "kind": "tsdf" if is_tsdf else "occupancy",
        "resolution": list(grid.shape),
        "origin": grid.origin.tolist(),
        "voxel_size": grid.voxel_size,
        "truncation": grid.truncation,
        "dtype": "<f4",
        "observed_mask": is_tsdf,
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode("ascii"))
        fh.write(grid.values.astype("<f4").tobytes(order="C"))
        if is_tsdf:
            fh.write(grid.observed.astype(np.uint8).tobytes(order="C"))


def load_grid(path):
    try:
        with open(path, "rb") as fh:
            header = json.loads(fh.readline().decode("ascii"))
            payload = fh.read()
        shape = tuple(int(s) for s in header["resolution"])
        count = int(np.prod(shape))
        values = np.frombuffer(payload, dtype="<f4", count=count).reshape(shape)
        args = (values, np.array(header["origin"]), float(header["voxel_size"]),
                float(header["truncation"]))
        if header["kind"] == "tsdf":
            obs = np.frombuffer(payload, dtype=np.uint8, count=count, offset=4 * count)
            return TsdfVolume(*args, obs.reshape(shape).astype(bool))
        if header["kind"] == "occupancy":
            return OccupancyGrid(*args)
    except (OSError, KeyError, ValueError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    raise ParseError(f"{path}: unknown grid kind {header.get('kind')!r}")
