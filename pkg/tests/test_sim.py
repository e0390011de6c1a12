from dataclasses import replace

import numpy as np

from anthrograsp.mesh import MW, NG, T, TriMesh
from anthrograsp.sim import Failure, finger_rays, palm_path, simulate_grasp
from anthrograsp.solver import ApproachType, GraspCandidate, WorkspaceConfig, plan_grasp

from shapes import box, cylinder

CFG = WorkspaceConfig()
CENTER = np.array([0.40, 0.30])
RADIUS = 0.040
HEIGHT = 0.120
Z0 = CFG.table_height
ANGLE = np.deg2rad(30.0)


def can():
    return cylinder(RADIUS, Z0, Z0 + HEIGHT, n=96, center=CENTER)


def side_plan(z, posture=MW, angle=ANGLE):
    n = np.array([np.cos(angle), np.sin(angle), 0.0])
    v = np.array([*(CENTER + RADIUS * n[:2]), z])
    return plan_grasp(GraspCandidate(v, n, 1.0, posture), CFG)


def plate(center, n, half=0.06, thick=0.002):
    """Axis-aligned slab facing +x, for normals along x."""
    assert np.allclose(n, [1, 0, 0])
    c = np.asarray(center, float)
    return box(c - [thick / 2, half, half], c + [thick / 2, half, half])


def test_side_mw_on_cylinder_feasible():
    p = side_plan(Z0 + HEIGHT / 2)
    assert p.approach is ApproachType.SIDE
    r = simulate_grasp(p, can(), CFG)
    assert r.feasible and r.failure_reason is None
    assert (r.contacts, r.required) == (5, 4)


def test_finger_rays_analytic_hits():
    # ray-cylinder oracle: every digit lies inside the silhouette and within reach
    p = side_plan(Z0 + HEIGHT / 2)
    origins, d, need = finger_rays(p, CFG)
    assert need == 4 and len(origins) == 5
    reach = CFG.finger_standoff + CFG.palm_to_fingertip
    for o in origins:
        rel = o[:2] - CENTER
        b = np.dot(rel, d[:2])
        disc = b * b - (np.dot(rel, rel) - RADIUS ** 2)
        assert disc > 0
        t = -b - np.sqrt(disc)
        assert 0 < t < reach
        assert Z0 < o[2] < Z0 + HEIGHT


def test_side_tripod_on_cylinder_feasible():
    r = simulate_grasp(side_plan(Z0 + HEIGHT / 2, T), can(), CFG)
    assert r.feasible and (r.contacts, r.required) == (3, 3)


def test_near_top_edge_insufficient():
    # the two upper fingers pass 10 and 30 mm over the rim
    r = simulate_grasp(side_plan(Z0 + HEIGHT - 0.01), can(), CFG)
    assert not r.feasible
    assert r.failure_reason == Failure.WEAK_CLOSURE.value
    assert (r.contacts, r.required) == (3, 4)


def test_table_collision():
    p = side_plan(Z0 - 0.01)
    r = simulate_grasp(p, can(), CFG)
    assert r.failure_reason == Failure.TABLE.value and not r.feasible


def test_no_object_no_contact():
    p = side_plan(Z0 + HEIGHT / 2)
    for obj in (None, TriMesh(np.zeros((0, 3)), np.zeros((0, 3)))):
        r = simulate_grasp(p, obj, CFG)
        assert r.failure_reason == Failure.NO_CONTACT.value
        assert r.contacts == 0


# idle pose behind the approach point so only the final leg can meet the plate
BEHIND = WorkspaceConfig(idle_position=(0.6, 0.2, 0.5))


def test_penetration_before_grasp():
    v = np.array([0.3, 0.2, 0.35])
    p = plan_grasp(GraspCandidate(v, [1, 0, 0], 1.0, MW), BEHIND)
    r = simulate_grasp(p, plate(v + [0.08, 0, 0], [1, 0, 0]), BEHIND)
    assert r.failure_reason == Failure.PENETRATION.value
    assert r.details["leg"] == 1
    assert abs(r.details["hit"] - (0.15 - 0.08 - 0.001)) < 1e-9


def test_clearance_allows_surface_at_grasp():
    v = np.array([0.3, 0.2, 0.35])
    p = plan_grasp(GraspCandidate(v, [1, 0, 0], 1.0, MW), BEHIND)
    r = simulate_grasp(p, plate(v + [0.004, 0, 0], [1, 0, 0]), BEHIND)
    assert r.failure_reason != Failure.PENETRATION.value
    assert r.feasible


def test_unsupported_posture():
    p = replace(side_plan(Z0 + HEIGHT / 2), grasp_type=NG)
    assert simulate_grasp(p, can(), CFG).failure_reason == Failure.BAD_POSTURE.value


def test_palm_path():
    p = side_plan(Z0 + HEIGHT / 2)
    path = palm_path(p, CFG)
    n = p.candidate.normal
    np.testing.assert_array_equal(path[0], CFG.idle_position)
    np.testing.assert_allclose(path[1], p.candidate.vertex + 0.15 * n, atol=1e-15)
    np.testing.assert_array_equal(path[2], p.candidate.vertex)


def test_result_dict():
    d = simulate_grasp(side_plan(Z0 + HEIGHT / 2), can(), CFG).to_dict()
    assert d == {"feasible": True, "failure_reason": None, "contacts": 5, "required": 4}
