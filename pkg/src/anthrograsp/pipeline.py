"""End-to-end single-view grasp pipeline on a synthetic scene.

Stages: generate, render, backproject, canonicalize, voxelize, complete,
mesh, confidence, label, metrics, to_base, select, plan, simulate. Any
stage error is re-raised as :class:`StageError` naming the stage, with the
results gathered so far attached as ``partial``.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import meshing, metrics, objects, posture, scene, solver, volume
from .errors import AnthroGraspError, ConfigError, StageError
from .geometry import CameraIntrinsics, SimilarityPose, rot_z
from .mesh_io import save_mesh
from .sim import SimResult, simulate_grasp

OBJECT_CENTER = (-0.45, 0.35)
PLACEMENT_HALF_WIDTH = 0.05
CAMERA_STANDOFF = 0.6
CAMERA_HEIGHT = 0.588          # 515 mm above the metal table, which sits 73 mm above the base


def _from_dict(cls, d, where):
    if d is None:
        return cls()
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    try:
        return cls(**d)
    except (TypeError, ValueError, AnthroGraspError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


@dataclass(frozen=True)
class SceneSpec:
    category: str = "cup"
    params: Optional[dict] = None          # shape overrides; None draws them from shape_seed
    shape_seed: int = 0
    seed: int = 0                          # placement seed
    x: Optional[float] = None
    y: Optional[float] = None
    yaw_deg: Optional[float] = None

    def __post_init__(self):
        try:
            objects.Category(self.category)
        except ValueError as exc:
            raise ConfigError(f"unknown category {self.category!r}") from exc

    def placement(self):
        """Object position on the table and yaw, drawn from ``seed`` unless given."""
        rng = np.random.default_rng([int(self.seed), 104729])
        cx, cy = OBJECT_CENTER
        x = rng.uniform(cx - PLACEMENT_HALF_WIDTH, cx + PLACEMENT_HALF_WIDTH)
        y = rng.uniform(cy - PLACEMENT_HALF_WIDTH, cy + PLACEMENT_HALF_WIDTH)
        yaw = rng.uniform(0.0, 2 * np.pi)
        return (x if self.x is None else float(self.x),
                y if self.y is None else float(self.y),
                yaw if self.yaw_deg is None else np.deg2rad(self.yaw_deg))


def _default_camera_position():
    d = CAMERA_STANDOFF / np.sqrt(2.0)
    return (OBJECT_CENTER[0] - d, OBJECT_CENTER[1] - d, CAMERA_HEIGHT)


@dataclass(frozen=True)
class CameraSpec:
    position: tuple = field(default_factory=_default_camera_position)
    yaw_deg: float = 45.0
    pitch_deg: float = 30.0
    intrinsics: dict = field(default_factory=lambda: {"fx": 600.0, "fy": 600.0, "cx": 320.0,
                                                       "cy": 240.0, "width": 640, "height": 480})
    noise_sigma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        if len(self.position) != 3:
            raise ConfigError("camera position needs three coordinates")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be >= 0")
        CameraIntrinsics.from_dict(self.intrinsics)

    def frame(self):
        return scene.camera_from_config(self.position, np.deg2rad(self.yaw_deg), np.deg2rad(self.pitch_deg))

    def intr(self) -> CameraIntrinsics:
        return CameraIntrinsics.from_dict(self.intrinsics)


@dataclass(frozen=True)
class PipelineConfig:
    scene: SceneSpec = field(default_factory=SceneSpec)
    camera: CameraSpec = field(default_factory=CameraSpec)
    grid: dict = field(default_factory=lambda: {"resolution": 64, "side": 1.0, "truncation_voxels": 4.0})
    completer: str = "revolution"
    completer_params: dict = field(default_factory=dict)
    mise: dict = field(default_factory=lambda: {"iso": 0.5, "initial_res": 32, "refinement_steps": 2})
    criterion: str = "confidence"
    selection_seed: int = 0
    k: int = 5
    metric_samples: int = metrics.DEFAULT_SAMPLES
    workspace: solver.WorkspaceConfig = field(default_factory=solver.WorkspaceConfig)

    def __post_init__(self):
        try:
            volume.Completer(self.completer)
        except AnthroGraspError as exc:
            raise ConfigError(str(exc)) from exc
        if self.criterion not in ("confidence", "arbitrary"):
            raise ConfigError(f"unknown criterion {self.criterion!r}")
        if self.k < 1 or self.metric_samples < 1:
            raise ConfigError("k and metric_samples must be >= 1")
        try:
            self.grid_spec()
        except TypeError as exc:
            raise ConfigError(f"grid: {exc}") from exc

    def grid_spec(self) -> volume.GridSpec:
        return volume.GridSpec(**self.grid)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["camera"]["position"] = list(self.camera.position)
        d["workspace"] = self.workspace.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        d = dict(d)
        sub = {
            "scene": _from_dict(SceneSpec, d.pop("scene", None), "scene"),
            "camera": _from_dict(CameraSpec, d.pop("camera", None), "camera"),
        }
        ws = d.pop("workspace", None)
        try:
            sub["workspace"] = solver.WorkspaceConfig.from_dict(ws or {})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"workspace: {exc}") from exc
        cfg = _from_dict(cls, d, "config")
        return replace(cfg, **sub)

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc


@dataclass
class PipelineResult:
    gt_mesh: Optional[object] = None          # true object, robot base frame
    object_pose: Optional[SimilarityPose] = None
    canonical_pose: Optional[SimilarityPose] = None   # camera -> canonical
    scale: float = 0.0
    depth: Optional[object] = None
    mask: Optional[np.ndarray] = None
    tsdf: Optional[volume.TsdfVolume] = None
    occupancy: Optional[volume.OccupancyGrid] = None
    mesh_canonical: Optional[object] = None
    mesh: Optional[object] = None             # completed, labeled, robot base frame
    metrics: Optional[metrics.ShapeMetrics] = None
    candidates: int = 0
    plan: Optional[solver.GraspPlan] = None
    sim: Optional[SimResult] = None
    files: dict = field(default_factory=dict)


class _Stages:
    def __init__(self, result: PipelineResult):
        self.result = result
        self.name = None

    def __call__(self, name):
        self.name = name
        return self

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and isinstance(exc, (AnthroGraspError, ValueError, FloatingPointError)) \
                and not isinstance(exc, StageError):
            err = StageError(self.name, exc)
            err.partial = self.result
            raise err from exc
        return False


def canonical_pose(object_pose: SimilarityPose, camera, scale: float) -> SimilarityPose:
    """Ground-truth camera -> canonical pose: camera -> base -> object -> canonical."""
    R = object_pose.rotation.T @ camera.axes
    t = scale * (object_pose.rotation.T @ (camera.origin - object_pose.translation))
    return SimilarityPose(R, t, scale)


def view_extra(category: str, object_pose: SimilarityPose, cano: SimilarityPose) -> dict:
    """Scene annotations stored beside a rendered view."""
    return {"category": category, "object_pose": object_pose.to_dict(), "canonical_pose": cano.to_dict()}


def base_from_canonical(object_pose: SimilarityPose, scale: float) -> SimilarityPose:
    return object_pose.compose(SimilarityPose(np.eye(3), np.zeros(3), 1.0 / scale))


def run_pipeline(cfg: PipelineConfig = PipelineConfig(), out_dir=None) -> PipelineResult:
    """Run every stage; if ``out_dir`` is given, write the intermediates there."""
    res = PipelineResult()
    stage = _Stages(res)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    ws = cfg.workspace
    sc = cfg.scene

    with stage("generate"):
        mesh_obj, _, _ = objects.build_object(sc.category, sc.params, sc.shape_seed)
        x, y, yaw = sc.placement()
        lo, _ = mesh_obj.bounds()
        pose = SimilarityPose(rot_z(yaw), np.array([x, y, ws.table_height - lo[2]]), 1.0)
        res.object_pose = pose
        res.gt_mesh = mesh_obj.transformed(pose)
        res.scale = s = objects.canonical_scale(mesh_obj)

    with stage("render"):
        cam, intr = cfg.camera.frame(), cfg.camera.intr()
        depth, mask = scene.render_depth(mesh_obj, pose, cam, intr, cfg.camera.noise_sigma, sc.seed)
        res.depth, res.mask = depth, mask
        res.canonical_pose = cano = canonical_pose(pose, cam, s)
        if out is not None:
            scene.save_depth(depth, mask, intr, out / "view", extra=view_extra(sc.category, pose, cano))
            save_mesh(res.gt_mesh, out / "object.ply")
            res.files["depth"] = "view.json"
            res.files["object"] = "object.ply"

    with stage("backproject"):
        cloud = scene.backproject(depth, mask, intr)

    with stage("canonicalize"):
        pts = cano.apply(cloud.points)
        cam_center = cano.apply(np.zeros(3))

    with stage("voxelize"):
        res.tsdf = tsdf = volume.voxelize_tsdf(pts, cam_center, cfg.grid_spec())
        if out is not None:
            volume.save_grid(tsdf, out / "tsdf.grid")
            res.files["tsdf"] = "tsdf.grid"

    with stage("complete"):
        completer = volume.Completer(cfg.completer, sc.category, dict(cfg.completer_params))
        res.occupancy = occ = volume.complete(tsdf, completer)
        if out is not None:
            volume.save_grid(occ, out / "occupancy.grid")
            res.files["occupancy"] = "occupancy.grid"

    with stage("mesh"):
        m = meshing.extract_mesh_mise(occ, cfg.mise.get("iso", 0.5), cfg.mise.get("initial_res", 32),
                                      cfg.mise.get("refinement_steps", 2))

    with stage("confidence"):
        m = meshing.attach_confidence(m, occ)

    with stage("label"):
        ref = posture.shipped_reference(sc.category)
        m = posture.transfer_postures(m, ref, cfg.k)
        res.mesh_canonical = m
        if out is not None:
            save_mesh(m, out / "mesh_canonical.ply")
            res.files["mesh_canonical"] = "mesh_canonical.ply"

    with stage("metrics"):
        gt_cano = mesh_obj.transformed(SimilarityPose(np.eye(3), np.zeros(3), s))
        res.metrics = metrics.mesh_metrics(m, gt_cano, cfg.metric_samples, sc.seed)

    with stage("to_base"):
        # canonical -> object (1/s) -> base; confidence to probability per metre
        to_base = base_from_canonical(pose, s)
        mb = m.transformed(to_base).with_(confidence=m.confidence * s)
        res.mesh = mb
        if out is not None:
            save_mesh(mb, out / "mesh_base.ply")
            res.files["mesh_base"] = "mesh_base.ply"

    with stage("select"):
        cands = solver.filter_candidates(mb, ws)
        res.candidates = len(cands)
        cand = solver.select_candidate(cands, cfg.criterion, cfg.selection_seed)

    with stage("plan"):
        res.plan = plan = solver.plan_grasp(cand, ws)
        if out is not None:
            solver.save_plan(plan, out / "plan.json")
            res.files["plan"] = "plan.json"

    with stage("simulate"):
        res.sim = simulate_grasp(plan, res.gt_mesh, ws)

    if out is not None:
        write_json(out / "result.json", result_summary(cfg, res))
        res.files["result"] = "result.json"
    return res


def result_summary(cfg: PipelineConfig, res: PipelineResult) -> dict:
    return {
        "config": cfg.to_dict(),
        "metrics": None if res.metrics is None else res.metrics.to_dict(),
        "candidates": res.candidates,
        "plan": None if res.plan is None else solver.plan_to_dict(res.plan),
        "simulation": None if res.sim is None else res.sim.to_dict(),
        "feasibility_note": "simulator feasibility, not a physical grasp success rate",
        "files": dict(sorted(res.files.items())),
    }


def write_json(path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
