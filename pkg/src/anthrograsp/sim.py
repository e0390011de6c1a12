"""Kinematic feasibility check of a grasp plan against the true object.

The palm centre is modelled at three poses: the idle waypoint, the
approach pose one finger length behind the approach waypoint, and the
grasp pose on the selected vertex (the leveling compensation exists so the
palm centre reaches the vertex). Checks, in order:

* table: no palm pose below the table top;
* path: the straight palm path does not meet the object before it is
  within ``path_clearance`` of the grasp pose;
* closure: finger rays cast from the palm along the travel direction must
  reach the object within one finger length; a medium wrap needs 4 of its
  5 digits in contact, a tripod all 3.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import kernels
from .mesh import MW, T, TriMesh
from .solver import GraspPlan, WorkspaceConfig


class Failure(str, Enum):
    TABLE = "TableCollision"
    PENETRATION = "Penetration"
    NO_CONTACT = "NoContact"
    WEAK_CLOSURE = "InsufficientContact"
    BAD_POSTURE = "UnsupportedPosture"


@dataclass(frozen=True)
class SimResult:
    feasible: bool
    failure_reason: Optional[str] = None
    contacts: int = 0
    required: int = 0
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"feasible": self.feasible, "failure_reason": self.failure_reason,
                "contacts": self.contacts, "required": self.required}


def palm_path(plan: GraspPlan, cfg: WorkspaceConfig) -> np.ndarray:
    """Palm centre at the idle, approach and grasp poses, ``(3, 3)``."""
    cand = plan.candidate
    n = cand.normal / np.linalg.norm(cand.normal)
    idle = plan.waypoints[0][0]
    approach = plan.approach_point + cfg.palm_to_fingertip * n
    return np.stack([idle, approach, cand.vertex])


def finger_rays(plan: GraspPlan, cfg: WorkspaceConfig):
    """Ray origins and the shared direction for each digit of the posture."""
    n = plan.candidate.normal / np.linalg.norm(plan.candidate.normal)
    axes = plan.wrist.axes
    ulnar, palmar = axes[:, 1], axes[:, 2]
    base = plan.candidate.vertex + cfg.finger_standoff * n
    if plan.grasp_type == MW:
        offs = [o * ulnar for o in cfg.mw_finger_offsets] + [cfg.mw_thumb_offset * palmar]
        need = cfg.motors_mw
    elif plan.grasp_type == T:
        offs = [np.zeros(3)] + [o * ulnar for o in cfg.t_finger_offsets]
        need = cfg.motors_t
    else:
        return None, None, 0
    return base + np.array(offs), -n, need


def simulate_grasp(plan: GraspPlan, obj: Optional[TriMesh], cfg: WorkspaceConfig = WorkspaceConfig()) -> SimResult:
    path = palm_path(plan, cfg)
    if np.any(path[:, 2] < cfg.table_height):
        return SimResult(False, Failure.TABLE.value)
    tris = np.zeros((0, 3, 3)) if obj is None or obj.n_triangles == 0 else obj.corners()

    if len(tris):
        seg = np.diff(path, axis=0)
        lengths = np.linalg.norm(seg, axis=1)
        t = kernels.ray_first_hit(path[:-1], seg / lengths[:, None], tris)
        limits = lengths - np.array([0.0, cfg.path_clearance])
        if np.any(t < limits):
            leg = int(np.argmax(t < limits))
            return SimResult(False, Failure.PENETRATION.value, details={"leg": leg, "hit": float(t[leg])})

    origins, direction, need = finger_rays(plan, cfg)
    if origins is None:
        return SimResult(False, Failure.BAD_POSTURE.value)
    reach = cfg.finger_standoff + cfg.palm_to_fingertip
    if len(tris):
        t = kernels.ray_first_hit(origins, np.broadcast_to(direction, origins.shape).copy(), tris)
        hits = int(np.sum(t <= reach))
    else:
        hits = 0
    if hits == 0:
        return SimResult(False, Failure.NO_CONTACT.value, 0, need)
    if hits < need:
        return SimResult(False, Failure.WEAK_CLOSURE.value, hits, need)
    return SimResult(True, None, hits, need)
