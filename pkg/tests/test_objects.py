import numpy as np
import pytest
from scipy.spatial import cKDTree

from anthrograsp import objects
from anthrograsp.errors import InvalidParams
from anthrograsp.geometry import rot_z

CATS = ["cup", "bottle", "bowl"]


def vertex_chamfer(a, b):
    return 0.5 * (cKDTree(b).query(a)[0].mean() + cKDTree(a).query(b)[0].mean())


def test_default_cup_has_one_handle_hole():
    m = objects.generate_object("cup", {})
    assert m.is_closed()
    assert m.euler_characteristic() == 0       # closed orientable genus 1
    assert m.signed_volume() > 0


def test_default_cup_within_declared_bounds():
    lo, hi = objects.declared_bounds("cup", {})
    m = objects.generate_object("cup", {})
    assert np.all(m.vertices >= lo - 1e-9) and np.all(m.vertices <= hi + 1e-9)


@pytest.mark.parametrize("cat", CATS)
@pytest.mark.parametrize("seed", [0, 1, 7])
def test_objects_closed_and_outward(cat, seed):
    m = objects.generate_object(cat, seed=seed)
    assert m.is_closed()
    assert m.euler_characteristic() == (0 if cat == "cup" else 2)
    assert m.signed_volume() > 0
    lo, hi = objects.declared_bounds(cat, seed=seed)
    assert np.all(m.vertices >= lo - 1e-9) and np.all(m.vertices <= hi + 1e-9)


@pytest.mark.parametrize("seed", [0, 3, 11])
def test_bowl_half_turn_symmetry(seed):
    v = objects.generate_object("bowl", seed=seed).vertices
    assert vertex_chamfer(v, v @ rot_z(np.pi).T) <= 1e-3


@pytest.mark.parametrize("cat", CATS)
def test_generation_is_deterministic(cat):
    a = objects.generate_object(cat, seed=5)
    b = objects.generate_object(cat, seed=5)
    assert np.array_equal(a.vertices, b.vertices) and np.array_equal(a.triangles, b.triangles)


def test_different_seeds_give_different_shapes():
    a = objects.generate_object("cup", seed=1).vertices
    b = objects.generate_object("cup", seed=2).vertices
    assert a.shape != b.shape or not np.allclose(a, b)


@pytest.mark.parametrize("cat, bad", [
    ("cup", {"wall": 0.05}),
    ("cup", {"radius": -1.0}),
    ("bottle", {"neck_radius": 0.05}),
    ("bowl", {"foot_radius": 0.2}),
])
def test_invalid_params(cat, bad):
    with pytest.raises(InvalidParams):
        objects.generate_object(cat, bad)


def test_canonical_scale_maps_extent():
    m = objects.generate_object("bottle", seed=0)
    lo, hi = m.bounds()
    assert np.isclose(objects.canonical_scale(m) * np.max(hi - lo), objects.CANONICAL_EXTENT)


def test_vertex_normals_point_outward():
    m = objects.generate_object("bottle", {})
    # on the cylindrical body the outward normal is radial
    z = m.vertices[:, 2]
    body = (z > z.min() + 0.05) & (z < z.min() + 0.09)
    r = m.vertices[body, :2]
    radial = np.sum(m.normals[body, :2] * r, axis=1) / np.linalg.norm(r, axis=1)
    assert np.all(radial > 1 - 1e-9)
    assert np.all(np.linalg.norm(m.normals, axis=1) - 1 < 1e-9)
