"""Small linear-algebra layer: similarity poses, frames and camera intrinsics.

Vectors are plain ``numpy`` arrays of shape ``(3,)`` (or ``(n, 3)`` for
batches). Rotations are ``(3, 3)`` arrays validated on construction of the
value types below. Angles are radians everywhere in the library.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateScale, InvalidParams

EXACT_TOL = 1e-9
CHAIN_TOL = 1e-6
Z_AXIS = np.array([0.0, 0.0, 1.0])


def as_vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64).reshape(3)
    if not np.all(np.isfinite(a)):
        raise InvalidParams(f"non-finite vector {a}")
    return a


def normalize(v, eps: float = 1e-12) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(n < eps):
        raise InvalidParams("cannot normalize a zero-length vector")
    return v / n


def rot_x(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def check_rotation(R, tol: float = EXACT_TOL) -> np.ndarray:
    R = np.asarray(R, dtype=np.float64).reshape(3, 3)
    if not np.allclose(R.T @ R, np.eye(3), atol=tol, rtol=0.0):
        raise InvalidParams("rotation matrix is not orthonormal")
    if abs(np.linalg.det(R) - 1.0) > tol:
        raise InvalidParams("rotation matrix has det != +1")
    return R


def gram_schmidt(primary, secondary) -> np.ndarray:
    """Right-handed rotation whose first column is ``primary`` and whose
    second column lies in span(primary, secondary)."""
    x = normalize(primary)
    y = np.asarray(secondary, dtype=np.float64) - np.dot(secondary, x) * x
    y = normalize(y)
    z = np.cross(x, y)
    return np.column_stack([x, y, z])


@dataclass(frozen=True)
class SimilarityPose:
    """7-DoF transform ``p -> scale * (rotation @ p) + translation``."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "rotation", check_rotation(self.rotation))
        object.__setattr__(self, "translation", as_vec3(self.translation))
        if not np.isfinite(self.scale) or self.scale <= 0:
            raise DegenerateScale(f"scale must be positive, got {self.scale}")
        object.__setattr__(self, "scale", float(self.scale))

    def apply(self, points) -> np.ndarray:
        """Transform one point ``(3,)`` or a batch ``(n, 3)``."""
        p = np.asarray(points, dtype=np.float64)
        return self.scale * (p @ self.rotation.T) + self.translation

    def apply_direction(self, dirs) -> np.ndarray:
        """Rotate directions (normals); scale and translation do not apply."""
        return np.asarray(dirs, dtype=np.float64) @ self.rotation.T

    def inverse(self) -> "SimilarityPose":
        return invert_similarity(self)

    def compose(self, other: "SimilarityPose") -> "SimilarityPose":
        """``self ∘ other``: apply ``other`` first."""
        return SimilarityPose(
            self.rotation @ other.rotation,
            self.scale * (self.rotation @ other.translation) + self.translation,
            self.scale * other.scale,
        )

    def to_dict(self) -> dict:
        return {
            "rotation": self.rotation.tolist(),
            "translation": self.translation.tolist(),
            "scale": self.scale,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimilarityPose":
        return cls(np.array(d["rotation"]), np.array(d["translation"]), d["scale"])


def apply_similarity(pose: SimilarityPose, p) -> np.ndarray:
    return pose.apply(p)


def invert_similarity(pose: SimilarityPose) -> SimilarityPose:
    if pose.scale <= 1e-12:
        raise DegenerateScale(f"cannot invert pose with scale {pose.scale}")
    inv_s = 1.0 / pose.scale
    Rt = pose.rotation.T
    return SimilarityPose(Rt, -inv_s * (Rt @ pose.translation), inv_s)


def horizontal_projection(n) -> np.ndarray:
    """``(z × n) × z`` with ``z = [0, 0, 1]``; not renormalized.

    Works on a single vector or on an ``(m, 3)`` batch.
    """
    # the double cross product reduces exactly to dropping the z component
    h = np.array(n, dtype=np.float64)
    h[..., 2] = 0.0
    return h


@dataclass(frozen=True)
class Frame:
    """Origin plus axes; columns of ``axes`` are the frame's x, y, z
    expressed in the parent (robot base) frame."""

    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))
    axes: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        object.__setattr__(self, "origin", as_vec3(self.origin))
        object.__setattr__(self, "axes", check_rotation(self.axes))

    def to_parent(self, points) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) @ self.axes.T + self.origin

    def from_parent(self, points) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64) - self.origin) @ self.axes

    def as_pose(self) -> SimilarityPose:
        return SimilarityPose(self.axes, self.origin, 1.0)

    def to_dict(self) -> dict:
        return {"origin": self.origin.tolist(), "axes": self.axes.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Frame":
        return cls(np.array(d["origin"]), np.array(d["axes"]))


def look_at_frame(eye, target, up=Z_AXIS) -> Frame:
    """Camera frame in the OpenCV convention: +z forward, +x right, +y down."""
    eye = as_vec3(eye)
    fwd = normalize(as_vec3(target) - eye)
    right = np.cross(fwd, np.asarray(up, dtype=np.float64))
    right = normalize(right)
    down = np.cross(fwd, right)
    return Frame(eye, np.column_stack([right, down, fwd]))


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise InvalidParams("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise InvalidParams("principal point outside the image")

    @property
    def K(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    def project(self, points) -> np.ndarray:
        """Camera-frame points ``(n, 3)`` to pixel coordinates ``(n, 2)``."""
        p = np.asarray(points, dtype=np.float64)
        return np.column_stack(
            [self.fx * p[:, 0] / p[:, 2] + self.cx, self.fy * p[:, 1] / p[:, 2] + self.cy]
        )

    def to_dict(self) -> dict:
        return {
            "fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
            "width": self.width, "height": self.height,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CameraIntrinsics":
        return cls(d["fx"], d["fy"], d["cx"], d["cy"], int(d["width"]), int(d["height"]))
