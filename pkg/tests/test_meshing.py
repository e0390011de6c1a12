import numpy as np
import pytest
from scipy import ndimage
from skimage import measure

from anthrograsp import meshing
from anthrograsp.errors import EmptySurface, InvalidParams
from anthrograsp.volume import GridSpec, OccupancyGrid

from conftest import smooth_field, sphere_grid
from oracles import same_vertex_sets


def dense_field(occ, res):
    """Trilinear samples of ``occ`` on the final lattice, by scipy as an independent oracle."""
    n = occ.shape[0]
    idx = np.arange(res + 1) * (n - 1) / res
    pts = np.meshgrid(idx, idx, idx, indexing="ij")
    return ndimage.map_coordinates(occ.values, pts, order=1, mode="nearest")


def test_empty_field():
    spec = GridSpec()
    with pytest.raises(EmptySurface):
        meshing.extract_mesh_mise(OccupancyGrid(np.zeros((64,) * 3), spec.origin, spec.voxel_size))


@pytest.mark.parametrize("iso", [0.0, 1.0, -0.2])
def test_iso_out_of_range(iso):
    with pytest.raises(InvalidParams):
        meshing.extract_mesh_mise(sphere_grid(), iso)


def test_sphere_vertices_near_radius():
    occ = sphere_grid(0.25)
    m = meshing.extract_mesh_mise(occ)
    r = np.linalg.norm(m.vertices, axis=1)
    final_voxel = 1.0 / 128
    assert np.all(np.abs(r - 0.25) <= final_voxel)


def test_sphere_mesh_is_closed_and_outward():
    m = meshing.extract_mesh_mise(sphere_grid(0.25, center=(0.05, -0.1, 0.02)))
    assert m.is_closed()
    assert m.euler_characteristic() == 2
    assert m.signed_volume() > 0
    # normals point from high to low occupancy, i.e. away from the centre
    out = np.sum(m.normals * (m.vertices - [0.05, -0.1, 0.02]), axis=1)
    assert np.all(out > 0)


def test_iso_monotone_volume():
    occ = sphere_grid(0.3)
    v4 = meshing.extract_mesh_mise(occ, 0.4).signed_volume()
    v6 = meshing.extract_mesh_mise(occ, 0.6).signed_volume()
    assert v6 <= v4


@pytest.mark.parametrize("seed", [0, 1])
def test_mise_equals_dense(seed):
    occ = smooth_field(seed)
    a = meshing.extract_mesh_mise(occ, with_normals=False)
    b = meshing.extract_mesh_dense(occ, resolution=128)
    assert a.n_triangles == b.n_triangles
    assert same_vertex_sets(a.vertices, b.vertices)


@pytest.mark.parametrize("seed", [3, 4])
def test_vertex_set_matches_skimage(seed):
    occ = smooth_field(seed, n=32, sigma=2.5)
    res = 64
    field = dense_field(occ, res)
    step = occ.voxel_size * (occ.shape[0] - 1) / res
    verts, faces, _, _ = measure.marching_cubes(field, 0.5, spacing=(step,) * 3)
    ours = meshing.extract_mesh_dense(occ, resolution=res)
    # skimage interpolates in float32 and does not weld near-coincident vertices
    assert same_vertex_sets(ours.vertices, verts + occ.origin, tol=1e-5)


def test_mise_single_level_is_dense():
    occ = smooth_field(7, n=24, sigma=2.0)
    a = meshing.extract_mesh_mise(occ, initial_res=23, refinement_steps=0, with_normals=False)
    b = meshing.extract_mesh_dense(occ, resolution=23)
    assert a.n_triangles == b.n_triangles and same_vertex_sets(a.vertices, b.vertices)


def test_weld_merges_duplicates():
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1e-9, 0, 0], [1, 1, 0]], float)
    t = np.array([[0, 1, 2], [3, 4, 1]])
    m = meshing.weld(v, t)
    assert m.n_vertices == 4 and m.n_triangles == 2


def test_attach_confidence_matches_volume():
    from anthrograsp.volume import vertex_confidences
    occ = sphere_grid(0.25)
    m = meshing.attach_confidence(meshing.extract_mesh_mise(occ), occ)
    assert np.allclose(m.confidence, vertex_confidences(occ, m.vertices))
    assert np.all(m.confidence > 0)


def test_case_table_is_closed_per_cube():
    # every triangle vertex sits on an edge whose corners straddle the iso-level
    for case in range(1, 255):
        tris = meshing.TRI_TABLE[case]
        inside = [(case >> k) & 1 for k in range(8)]
        for tri in tris:
            for e in tri:
                a, b = meshing._EDGES[e]
                assert inside[a] != inside[b]
