"""Independent reference implementations shared by unit and acceptance tests."""
import numpy as np
from scipy.spatial import cKDTree

from anthrograsp.metrics import SampledSurface

from conftest import random_units


def same_vertex_sets(a, b, tol=1e-6):
    da, _ = cKDTree(b).query(a)
    db, _ = cKDTree(a).query(b)
    return da.max() <= tol and db.max() <= tol


def brute_metrics(pred, gt):
    """O(n^2) reference: full distance matrix, first-index argmin."""
    d = np.linalg.norm(pred.points[:, None, :] - gt.points[None, :, :], axis=2)
    i_pg = d.argmin(axis=1)
    i_gp = d.argmin(axis=0)
    acc = d[np.arange(len(pred)), i_pg].mean()
    comp = d[i_gp, np.arange(len(gt))].mean()
    nc1 = np.abs(np.sum(pred.normals * gt.normals[i_pg], axis=1)).mean()
    nc2 = np.abs(np.sum(gt.normals * pred.normals[i_gp], axis=1)).mean()
    return (acc + comp) / 2, acc, comp, (nc1 + nc2) / 2


def random_surface(rng, n=50):
    return SampledSurface(rng.normal(size=(n, 3)), random_units(rng, n))
