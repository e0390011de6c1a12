"""Per-vertex grasp-posture labels by transfer from a labeled canonical mesh.

Each category ships one reference instance in canonical coordinates with a
``posture`` label per vertex (NG=0, MW=1, T=2). Target vertices take the
majority label of their ``k`` nearest reference vertices.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from . import objects
from .errors import FrameMismatch, InvalidParams, MissingLabels, ParseError
from .geometry import SimilarityPose
from .mesh import MW, NG, UNLABELED, T, TriMesh
from .mesh_io import read_ply, read_ply_comments, write_ply

MIN_BOX_IOU = 0.1
COINCIDENT = 1e-12
REFERENCE_EDGE = 0.0025


class Posture(IntEnum):
    NG = NG
    MW = MW
    T = T


LABELS = np.array([NG, MW, T], dtype=np.uint8)


@dataclass(frozen=True, eq=False)
class LabeledCanonicalMesh:
    mesh: TriMesh
    category: str

    def __post_init__(self):
        post = self.mesh.posture
        if post is None or len(post) == 0 or np.any(post == UNLABELED):
            raise MissingLabels("every reference vertex needs a posture label")
        if not np.all(np.isin(post, LABELS)):
            raise ParseError(f"unknown posture codes {sorted(set(post.tolist()) - set(LABELS.tolist()))}")

    @property
    def labels(self) -> np.ndarray:
        return self.mesh.posture


def box_iou(a: np.ndarray, b: np.ndarray) -> float:
    """IoU of the axis-aligned bounding boxes of two point sets."""
    alo, ahi = a.min(axis=0), a.max(axis=0)
    blo, bhi = b.min(axis=0), b.max(axis=0)
    inter = np.prod(np.clip(np.minimum(ahi, bhi) - np.maximum(alo, blo), 0.0, None))
    union = np.prod(ahi - alo) + np.prod(bhi - blo) - inter
    return float(inter / union) if union > 0 else 0.0


def _vote(neigh_labels: np.ndarray) -> np.ndarray:
    """Majority over columns (nearest first); ties go to the tied label
    that appears first in neighbour order."""
    m, k = neigh_labels.shape
    counts = np.stack([(neigh_labels == lab).sum(axis=1) for lab in LABELS], axis=1)
    best = counts.max(axis=1, keepdims=True)
    tied = counts == best
    rank = np.full((m, len(LABELS)), k)
    for j in range(k - 1, -1, -1):
        for li, lab in enumerate(LABELS):
            rank[neigh_labels[:, j] == lab, li] = j
    rank = np.where(tied, rank, k + 1)
    return LABELS[np.argmin(rank, axis=1)]


def transfer_postures(target: TriMesh, reference: LabeledCanonicalMesh, k: int = 5) -> TriMesh:
    if k < 1:
        raise InvalidParams("k must be >= 1")
    if target.n_vertices == 0:
        return target.with_(posture=np.zeros(0, dtype=np.uint8))
    ref = reference.mesh
    iou = box_iou(target.vertices, ref.vertices)
    if iou < MIN_BOX_IOU:
        raise FrameMismatch(f"target/reference bounding-box IoU {iou:.3f} < {MIN_BOX_IOU}")
    k = min(k, ref.n_vertices)
    dist, idx = cKDTree(ref.vertices).query(target.vertices, k=k)
    dist = dist.reshape(len(target.vertices), k)
    idx = idx.reshape(len(target.vertices), k)
    labels = _vote(reference.labels[idx])
    # a vertex sitting on a labeled reference vertex keeps that label
    exact = dist[:, 0] <= COINCIDENT
    labels[exact] = reference.labels[idx[exact, 0]]
    return target.with_(posture=labels)


# -- references -------------------------------------------------------------

def build_reference(category, edge_length: float = REFERENCE_EDGE) -> LabeledCanonicalMesh:
    """Default-parameter instance of ``category``, scaled to canonical units,
    with the hand-authored part labels."""
    category = objects.Category(category)
    mesh, vpart, params = objects.build_object(category, {"edge_length": edge_length})
    labels = objects.reference_labels(category, vpart, mesh.vertices, params)
    s = objects.canonical_scale(mesh)
    canon = mesh.transformed(SimilarityPose(np.eye(3), np.zeros(3), s))
    return LabeledCanonicalMesh(canon.with_(posture=labels), category.value)


def save_reference(ref: LabeledCanonicalMesh, path) -> None:
    write_ply(ref.mesh, path, comments=[f"category {ref.category}"])


def load_labeled_reference(path, category=None) -> LabeledCanonicalMesh:
    mesh = read_ply(path)
    if category is None:
        for c in read_ply_comments(path):
            if c.startswith("category "):
                category = c.split(None, 1)[1].strip()
        if category is None:
            category = Path(path).stem.split("_")[0]
    if mesh.posture is None:
        raise MissingLabels(f"{path}: no posture property")
    return LabeledCanonicalMesh(mesh, str(category))


def reference_path(category) -> Path:
    name = f"{objects.Category(category).value}_reference.ply"
    return Path(str(resources.files("anthrograsp") / "data" / name))


def shipped_reference(category) -> LabeledCanonicalMesh:
    return load_labeled_reference(reference_path(category))
