import numpy as np
import pytest
from hypothesis import given, strategies as st

from anthrograsp.errors import EmptyMesh, InvalidParams
from anthrograsp.mesh import TriMesh
from anthrograsp.metrics import SampledSurface, mesh_metrics, sample_surface, shape_metrics

from oracles import brute_metrics, random_surface
from shapes import uv_sphere


def test_single_triangle_samples_in_plane():
    tri = TriMesh([[0, 0, 1], [1, 0, 1], [0, 1, 1]], [[0, 1, 2]])
    s = sample_surface(tri, 1000, seed=0)
    assert np.all(np.abs(s.points[:, 2] - 1) <= 1e-9)
    assert np.all(s.points[:, :2] >= -1e-12) and np.all(s.points[:, :2].sum(axis=1) <= 1 + 1e-12)
    assert np.allclose(s.normals, [0, 0, 1])


def test_area_weighting():
    # triangle areas 9 : 1
    v = np.array([[0, 0, 0], [3, 0, 0], [0, 3, 0], [10, 0, 0], [11, 0, 0], [10, 1, 0]], float)
    m = TriMesh(v, [[0, 1, 2], [3, 4, 5]])
    s = sample_surface(m, 10000, seed=1)
    big = np.sum(s.points[:, 0] < 5)
    assert abs(big / (10000 - big) - 9) <= 9 * 0.05


def test_sampling_deterministic():
    m = uv_sphere(0.5)
    a, b = sample_surface(m, 500, 9), sample_surface(m, 500, 9)
    assert np.array_equal(a.points, b.points) and np.array_equal(a.normals, b.normals)


def test_sampling_errors():
    with pytest.raises(EmptyMesh):
        sample_surface(TriMesh(np.zeros((0, 3)), np.zeros((0, 3), int)), 10)
    with pytest.raises(InvalidParams):
        sample_surface(uv_sphere(), 0)


def test_identical_clouds():
    s = random_surface(np.random.default_rng(0))
    m = shape_metrics(s, s)
    assert m.chamfer_l1 == 0 and m.completeness == 0 and m.normal_consistency == 1


def test_single_pair():
    a = SampledSurface([[0, 0, 0]], [[0, 0, 1]])
    b = SampledSurface([[1, 0, 0]], [[0, 0, 1]])
    m = shape_metrics(a, b)
    assert (m.chamfer_l1, m.completeness, m.normal_consistency) == (1.0, 1.0, 1.0)


@pytest.mark.parametrize("seed", range(20))
def test_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    p, g = random_surface(rng), random_surface(rng)
    m = shape_metrics(p, g)
    cd, acc, comp, nc = brute_metrics(p, g)
    assert (m.chamfer_l1, m.accuracy, m.completeness, m.normal_consistency) == (cd, acc, comp, nc)


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100))
def test_axioms(seed, k):
    rng = np.random.default_rng(seed)
    p, g = random_surface(rng, 30), random_surface(rng, 40)
    m = shape_metrics(p, g)
    assert m.chamfer_l1 >= 0 and m.completeness >= 0
    assert 0 <= m.normal_consistency <= 1
    assert shape_metrics(p, p).chamfer_l1 == 0
    r = shape_metrics(g, p)
    assert np.isclose(r.chamfer_l1, m.chamfer_l1, rtol=1e-12)
    s = shape_metrics(p.scaled(k), g.scaled(k))
    assert np.isclose(s.chamfer_l1, k * m.chamfer_l1, rtol=1e-9)
    assert np.isclose(s.completeness, k * m.completeness, rtol=1e-9)
    assert s.normal_consistency == m.normal_consistency


def test_mesh_metrics_close_meshes():
    a, b = uv_sphere(0.5), uv_sphere(0.51)
    m = mesh_metrics(a, b, 20000, seed=0)
    assert 0.005 < m.chamfer_l1 < 0.015
    assert m.normal_consistency > 0.99
