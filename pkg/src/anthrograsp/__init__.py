"""Single-view shape completion and anthropomorphic grasp planning on
synthetic tabletop scenes."""
from .errors import AnthroGraspError, ConfigError, StageError
from .geometry import CameraIntrinsics, Frame, SimilarityPose
from .kernels import BACKEND
from .mesh import MW, NG, T, TriMesh
from .meshing import extract_mesh_dense, extract_mesh_mise
from .metrics import ShapeMetrics, mesh_metrics, shape_metrics
from .objects import generate_object
from .pipeline import PipelineConfig, run_pipeline
from .posture import transfer_postures
from .sim import SimResult, simulate_grasp
from .solver import GraspPlan, WorkspaceConfig, compensation, plan_grasp, wrist_frame
from .volume import Completer, GridSpec, complete, vertex_confidence, voxelize_tsdf

__version__ = "0.1.0"

__all__ = [
    "AnthroGraspError", "ConfigError", "StageError", "CameraIntrinsics", "Frame", "SimilarityPose",
    "BACKEND", "MW", "NG", "T", "TriMesh", "extract_mesh_dense", "extract_mesh_mise",
    "ShapeMetrics", "mesh_metrics", "shape_metrics", "generate_object", "PipelineConfig",
    "run_pipeline", "transfer_postures", "SimResult", "simulate_grasp", "GraspPlan",
    "WorkspaceConfig", "compensation", "plan_grasp", "wrist_frame", "Completer", "GridSpec",
    "complete", "vertex_confidence", "voxelize_tsdf",
]
