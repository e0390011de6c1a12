"""Synthetic single-view capture: depth rendering, masks, back-projection.

Depth is z-depth (distance along the optical axis), the convention the
pinhole back-projection assumes. Pixel ``(u, v)`` samples the ray through
``((u - cx)/fx, (v - cy)/fy, 1)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import kernels
from .errors import EmptyForeground, EmptyMesh, InvalidParams, ParseError
from .geometry import CameraIntrinsics, Frame, SimilarityPose
from .mesh import TriMesh

NEAR_PLANE = 1e-3


@dataclass(frozen=True, eq=False)
class DepthImage:
    depth: np.ndarray          # (height, width) float, metres, 0 = no return
    sensor_pose: Frame         # camera frame in the robot base frame

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @property
    def width(self) -> int:
        return self.depth.shape[1]


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    normals: Optional[np.ndarray] = None
    pixels: Optional[np.ndarray] = None   # (n, 2) integer (u, v) the points came from

    def __len__(self):
        return len(self.points)


def render_depth(mesh: TriMesh, object_pose: SimilarityPose, camera: Frame,
                 intr: CameraIntrinsics, noise_sigma: float = 0.0, seed: int = 0):
    """Render z-depth and foreground mask of ``mesh`` placed by ``object_pose``
    (object -> base) as seen from ``camera`` (camera -> base).

    Optional zero-mean Gaussian depth noise is applied to foreground pixels
    only, deterministically in ``seed``.
    """
    if mesh.n_triangles == 0:
        raise EmptyMesh("cannot render an empty mesh")
    base_pts = object_pose.apply(mesh.vertices)
    cam_pts = camera.from_parent(base_pts)
    depth = kernels.rasterize_depth(cam_pts[mesh.triangles], intr.fx, intr.fy, intr.cx, intr.cy,
                                    intr.width, intr.height, NEAR_PLANE)
    mask = depth > 0
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        noisy = depth + rng.normal(0.0, noise_sigma, size=depth.shape)
        depth = np.where(mask, np.maximum(noisy, NEAR_PLANE), 0.0)
    # rasters are stored as float32; quantize so saved and in-memory views agree
    depth = depth.astype(np.float32).astype(np.float64)
    return DepthImage(depth, camera), mask


def backproject(depth: DepthImage, mask: np.ndarray, intr: CameraIntrinsics) -> PointCloud:
    """Camera-frame points of masked pixels with a depth return."""
    d = np.asarray(depth.depth if isinstance(depth, DepthImage) else depth, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != d.shape:
        raise InvalidParams(f"mask shape {mask.shape} != depth shape {d.shape}")
    v, u = np.nonzero(mask & (d > 0))
    if len(u) == 0:
        raise EmptyForeground("no masked pixel has a depth return")
    z = d[v, u]
    pts = np.column_stack([z * (u - intr.cx) / intr.fx, z * (v - intr.cy) / intr.fy, z])
    return PointCloud(pts, pixels=np.column_stack([u, v]))


def camera_from_config(position, yaw: float, pitch: float) -> Frame:
    """Camera at ``position`` looking along heading ``yaw`` (about +Z from +X),
    tilted ``pitch`` radians below the horizon."""
    fwd = np.array([np.cos(pitch) * np.cos(yaw), np.cos(pitch) * np.sin(yaw), -np.sin(pitch)])
    right = np.array([np.sin(yaw), -np.cos(yaw), 0.0])
    down = np.cross(fwd, right)
    return Frame(np.asarray(position, dtype=np.float64), np.column_stack([right, down, fwd]))


# -- files ------------------------------------------------------------------

def save_depth(depth: DepthImage, mask: np.ndarray, intr: CameraIntrinsics, stem,
               extra: Optional[dict] = None) -> dict:
    """Write ``<stem>.depth.f32``, ``<stem>.mask.u8`` and ``<stem>.json``."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    depth.depth.astype("<f4").tofile(f"{stem}.depth.f32")
    np.asarray(mask, dtype=np.uint8).tofile(f"{stem}.mask.u8")
    meta = {
        "width": depth.width,
        "height": depth.height,
        "intrinsics": intr.to_dict(),
        "camera_pose": depth.sensor_pose.to_dict(),
        "depth_file": Path(f"{stem}.depth.f32").name,
        "mask_file": Path(f"{stem}.mask.u8").name,
    }
    if extra:
        meta.update(extra)
    with open(f"{stem}.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    return meta


def load_depth(sidecar):
    """Inverse of :func:`save_depth`; returns ``(DepthImage, mask, intr, meta)``."""
    sidecar = Path(sidecar)
    try:
        meta = json.loads(sidecar.read_text())
        w, h = int(meta["width"]), int(meta["height"])
        d = np.fromfile(sidecar.parent / meta["depth_file"], dtype="<f4")
        m = np.fromfile(sidecar.parent / meta["mask_file"], dtype=np.uint8)
    except (OSError, KeyError, ValueError) as exc:
        raise ParseError(f"{sidecar}: {exc}") from exc
    if d.size != w * h or m.size != w * h:
        raise ParseError(f"{sidecar}: raster size does not match {w}x{h}")
    intr = CameraIntrinsics.from_dict(meta["intrinsics"])
    depth = DepthImage(d.reshape(h, w).astype(np.float64), Frame.from_dict(meta["camera_pose"]))
    return depth, m.reshape(h, w).astype(bool), intr, meta
