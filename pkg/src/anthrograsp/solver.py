"""Grasp-posture selection: candidate filtering, approach classification,
wrist frame, leveling compensation and the waypointed grasp plan.

Normals passed around here are outward surface normals ``n``. The hand
travels along ``-n``; the horizontal axis of the leveling compensation is
the horizontal part of that travel direction.

Hand frame columns are ``(x_h, y_h, z_h)`` = distal, ulnar, palmar.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields
from enum import Enum
from typing import Optional

import numpy as np

from .errors import ConfigError, DegenerateAxis, DegenerateNormal, NoGraspableVertex, ParseError
from .geometry import Frame, Z_AXIS, horizontal_projection
from .mesh import NG, TriMesh

AXIS_EPS = 1e-9
ANGLE_EPS = 1e-12
TOP_FALLBACK = np.array([-1.0, 0.0, 0.0])


@dataclass(frozen=True)
class WorkspaceConfig:
    table_height: float = 0.193             # wooden table top above the robot base
    inclination_threshold: float = np.pi / 4
    min_side_grasp_z: float = 0.045
    approach_offset: float = 0.050
    travel_distance: float = 0.150
    palm_to_fingertip: float = 0.100
    wrist_to_fingertip: float = 0.180       # l in the leveling compensation
    lift_side: float = 0.100
    lift_top: float = 0.200
    side_wrist_extension: float = np.pi / 4
    reach_radius: float = 0.855
    idle_position: tuple = (-0.3, 0.4, 0.6)
    # success rule of the physical hand, kept for the record only
    current_threshold_ma: float = 400.0
    current_hold_s: float = 4.0
    motors_mw: int = 4
    motors_t: int = 3
    # simulator geometry
    path_clearance: float = 0.005
    finger_standoff: float = 0.020
    mw_finger_offsets: tuple = (-0.04, -0.02, 0.02, 0.04)
    mw_thumb_offset: float = -0.015
    t_finger_offsets: tuple = (-0.006, 0.006)

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, (list, np.ndarray)):
                object.__setattr__(self, f.name, tuple(float(x) for x in v))
        lengths = ("approach_offset", "travel_distance", "palm_to_fingertip", "wrist_to_fingertip",
                   "lift_side", "lift_top", "min_side_grasp_z", "reach_radius")
        for name in lengths:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        if abs(self.travel_distance - (self.approach_offset + self.palm_to_fingertip)) > 1e-12:
            raise ConfigError("travel_distance must equal approach_offset + palm_to_fingertip")
        if not 0 < self.inclination_threshold < np.pi / 2:
            raise ConfigError("inclination_threshold must lie in (0, pi/2)")
        if len(self.idle_position) != 3:
            raise ConfigError("idle_position needs three coordinates")

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "WorkspaceConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown workspace keys {sorted(unknown)}")
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


class ApproachType(str, Enum):
    SIDE = "side"
    TOP = "top"


@dataclass(frozen=True, eq=False)
class GraspCandidate:
    vertex: np.ndarray
    normal: np.ndarray
    confidence: float
    posture: int
    index: int = -1

    def __post_init__(self):
        if int(self.posture) == NG:
            raise ConfigError("a grasp candidate cannot be non-graspable")
        object.__setattr__(self, "vertex", np.asarray(self.vertex, dtype=np.float64).reshape(3))
        object.__setattr__(self, "normal", np.asarray(self.normal, dtype=np.float64).reshape(3))


@dataclass(frozen=True, eq=False)
class GraspPlan:
    candidate: GraspCandidate
    approach: ApproachType
    wrist: Frame
    gamma: float
    compensation: np.ndarray
    waypoints: tuple             # ((position, Frame), ...): idle, approach, grasp
    grasp_type: int
    lift: np.ndarray
    wrist_extension: Optional[float] = None
    config_hash: str = ""

    @property
    def approach_point(self) -> np.ndarray:
        return self.waypoints[1][0]

    @property
    def grasp_point(self) -> np.ndarray:
        return self.waypoints[2][0]


# -- filtering and selection -------------------------------------------------

def inclination(normals) -> np.ndarray:
    """Angle of each normal above the XY plane, radians."""
    nz = np.asarray(normals, dtype=np.float64)[..., 2]
    return np.arcsin(np.clip(nz, -1.0, 1.0))


def classify_approach(n, cfg: WorkspaceConfig = WorkspaceConfig()) -> ApproachType:
    """Top iff the normal's inclination reaches the threshold (inclusive)."""
    incl = float(inclination(np.asarray(n, dtype=np.float64)))
    return ApproachType.TOP if incl >= cfg.inclination_threshold - ANGLE_EPS else ApproachType.SIDE


def candidate_mask(mesh: TriMesh, cfg: WorkspaceConfig = WorkspaceConfig()) -> np.ndarray:
    if mesh.normals is None or mesh.posture is None:
        raise ConfigError("candidate filtering needs normals and posture labels")
    n = mesh.normals
    v = mesh.vertices
    octant = np.all(n >= 0, axis=1) & np.any(n > 0, axis=1)
    graspable = mesh.posture != NG
    top = inclination(n) >= cfg.inclination_threshold - ANGLE_EPS
    side_ok = v[:, 2] >= cfg.table_height + cfg.min_side_grasp_z
    # vertical normals have no horizontal travel axis; the solver skips them
    tilted = np.linalg.norm(horizontal_projection(n), axis=1) >= AXIS_EPS
    reach = np.linalg.norm(v, axis=1) <= cfg.reach_radius
    return octant & graspable & (top | side_ok) & tilted & reach


def filter_candidates(mesh: TriMesh, cfg: WorkspaceConfig = WorkspaceConfig()) -> list:
    keep = np.flatnonzero(candidate_mask(mesh, cfg))
    if len(keep) == 0:
        raise NoGraspableVertex("no vertex passes the workspace filters")
    conf = mesh.confidence if mesh.confidence is not None else np.zeros(mesh.n_vertices)
    return [GraspCandidate(mesh.vertices[i], mesh.normals[i], float(conf[i]), int(mesh.posture[i]), int(i))
            for i in keep]


def select_candidate(cands: list, criterion: str = "confidence", seed: int = 0) -> GraspCandidate:
    """``confidence``: highest confidence, ties to the earliest candidate.
    ``arbitrary``: uniform pick, deterministic in ``seed``."""
    if not cands:
        raise NoGraspableVertex("empty candidate list")
    if criterion in ("confidence", "MaxConfidence"):
        return cands[int(np.argmax([c.confidence for c in cands]))]
    if criterion in ("arbitrary", "Arbitrary"):
        return cands[int(np.random.default_rng(seed).integers(len(cands)))]
    raise ConfigError(f"unknown selection criterion {criterion!r}")


# -- frame and compensation ----------------------------------------------------

def wrist_frame(n, approach: ApproachType) -> np.ndarray:
    """Hand axes (columns distal, ulnar, palmar) for outward normal ``n``.

    Side: the base Z axis lies in the distal-ulnar plane. Top: it lies in
    the distal-palmar plane; for a vertical normal the palmar axis falls
    back to base -X.
    """
    x = -np.asarray(n, dtype=np.float64)
    x = x / np.linalg.norm(x)
    up = Z_AXIS - np.dot(Z_AXIS, x) * x
    norm = np.linalg.norm(up)
    if ApproachType(approach) is ApproachType.SIDE:
        if norm < AXIS_EPS:
            raise DegenerateNormal("side approach along a vertical normal")
        y = up / norm
        z = np.cross(x, y)
    else:
        if norm < AXIS_EPS:
            z = TOP_FALLBACK - np.dot(TOP_FALLBACK, x) * x
            z = z / np.linalg.norm(z)
        else:
            z = up / norm
        y = np.cross(z, x)
    return np.column_stack([x, y, z])


def compensation(gamma: float, l: float, n) -> np.ndarray:
    """Leveling compensation ``d_ex * e_x/|e_x| + d_z * (0, 0, -1)`` with
    ``d_ex = l (1 - cos gamma)``, ``d_z = l sin gamma`` and ``e_x`` the
    horizontal projection of the travel direction ``n``."""
    d_ex = l * (1.0 - np.cos(gamma))
    d_z = l * np.sin(gamma)
    ex = horizontal_projection(np.asarray(n, dtype=np.float64))
    norm = np.linalg.norm(ex)
    c = np.array([0.0, 0.0, -d_z])
    if norm < AXIS_EPS:
        if d_ex > 0:
            raise DegenerateAxis("horizontal axis vanishes for a vertical direction")
        return c
    return c + d_ex * ex / norm


def plan_grasp(cand: GraspCandidate, cfg: WorkspaceConfig = WorkspaceConfig()) -> GraspPlan:
    n = cand.normal / np.linalg.norm(cand.normal)
    approach = classify_approach(n, cfg)
    gamma = float(np.arcsin(min(1.0, abs(n[2]))))
    R = wrist_frame(n, approach)
    c = compensation(gamma, cfg.wrist_to_fingertip, -n)
    p_approach = cand.vertex + cfg.approach_offset * n
    p_grasp = p_approach - cfg.travel_distance * n + c
    idle = np.asarray(cfg.idle_position, dtype=np.float64)
    waypoints = tuple((p, Frame(p, R)) for p in (idle, p_approach, p_grasp))
    lift = np.array([0.0, 0.0, cfg.lift_top if approach is ApproachType.TOP else cfg.lift_side])
    return GraspPlan(cand, approach, Frame(p_grasp, R), gamma, c, waypoints, int(cand.posture), lift,
                     cfg.side_wrist_extension if approach is ApproachType.SIDE else None,
                     cfg.config_hash())


# -- files ------------------------------------------------------------------

def plan_to_dict(plan: GraspPlan) -> dict:
    cand = plan.candidate
    return {
        "vertex": cand.vertex.tolist(),
        "vertex_index": cand.index,
        "normal": cand.normal.tolist(),
        "confidence": cand.confidence,
        "posture": int(cand.posture),
        "approach": plan.approach.value,
        "gamma_rad": plan.gamma,
        "compensation": plan.compensation.tolist(),
        # row-major 3x3; columns are the distal, ulnar and palmar axes
        "wrist_frame": {"rotation": plan.wrist.axes.reshape(-1).tolist(),
                        "origin": plan.wrist.origin.tolist()},
        "waypoints": [p.tolist() for p, _ in plan.waypoints],
        "grasp_type": int(plan.grasp_type),
        "lift": plan.lift.tolist(),
        "wrist_extension_rad": plan.wrist_extension,
        "config_hash": plan.config_hash,
    }


def plan_from_dict(d: dict) -> GraspPlan:
    try:
        cand = GraspCandidate(np.array(d["vertex"]), np.array(d["normal"]), float(d["confidence"]),
                              int(d["posture"]), int(d.get("vertex_index", -1)))
        R = np.array(d["wrist_frame"]["rotation"], dtype=np.float64).reshape(3, 3)
        wrist = Frame(np.array(d["wrist_frame"]["origin"]), R)
        waypoints = tuple((np.array(p, dtype=np.float64), Frame(np.array(p), R)) for p in d["waypoints"])
        return GraspPlan(cand, ApproachType(d["approach"]), wrist, float(d["gamma_rad"]),
                         np.array(d["compensation"], dtype=np.float64), waypoints,
                         int(d["grasp_type"]), np.array(d["lift"], dtype=np.float64),
                         d.get("wrist_extension_rad"), d.get("config_hash", ""))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad plan document: {exc}") from exc


def save_plan(plan: GraspPlan, path, extra: Optional[dict] = None) -> None:
    doc = plan_to_dict(plan)
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)


def load_plan(path) -> GraspPlan:
    try:
        with open(path) as fh:
            return plan_from_dict(json.load(fh))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
