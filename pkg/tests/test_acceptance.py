"""End-to-end acceptance checks. Each test records one PASS/FAIL line that
is printed in the terminal summary, then asserts it."""
import json
import time
from dataclasses import replace

import numpy as np
import pytest

from anthrograsp import meshing
from anthrograsp.bench import default_suite
from anthrograsp.cli import EXIT_OK, main
from anthrograsp.geometry import horizontal_projection
from anthrograsp.mesh import MW, T, TriMesh
from anthrograsp.metrics import shape_metrics
from anthrograsp.pipeline import run_pipeline
from anthrograsp.solver import (
    ApproachType, GraspCandidate, WorkspaceConfig, candidate_mask, classify_approach, compensation,
    plan_grasp, wrist_frame,
)

from conftest import random_units, smooth_field
from oracles import brute_metrics, random_surface, same_vertex_sets

TOL = 1e-9
Z = np.array([0.0, 0.0, 1.0])


# 1 ----------------------------------------------------------------------------

def test_compensation_identities(verdict):
    rng = np.random.default_rng(101)
    n_cases = 10_000
    gam = rng.uniform(0.0, np.pi / 2, n_cases)
    ls = rng.uniform(0.01, 1.0, n_cases)
    ns = random_units(rng, n_cases)
    t0 = time.perf_counter()
    c = np.array([compensation(g, l, n) for g, l, n in zip(gam, ls, ns)])
    ex = horizontal_projection(ns)
    axis = ex / np.linalg.norm(ex, axis=1, keepdims=True)
    worst = {
        "dex": np.abs(np.sum(c * axis, axis=1) - ls * (1 - np.cos(gam))).max(),
        "dz": np.abs(-c[:, 2] - ls * np.sin(gam)).max(),
        "axis": np.abs(ex - (ns - (ns @ Z)[:, None] * Z)).max(),
        "norm": np.abs(np.linalg.norm(c, axis=1) - 2 * ls * np.sin(gam / 2)).max(),
    }
    dt = time.perf_counter() - t0
    ok = max(worst.values()) <= TOL and dt < 1.0
    verdict(1, "compensation identities", ok,
            f"{n_cases} cases, max errors " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
            + f", {dt:.2f} s (tol {TOL:g}, < 1 s)")


# 2 ----------------------------------------------------------------------------

def test_wrist_frame_contract(verdict):
    rng = np.random.default_rng(202)
    ns = random_units(rng, 10_000)
    ns = ns[np.linalg.norm(ns[:, :2], axis=1) > 1e-6]
    worst = {"orthonormal": 0.0, "det": 0.0, "distal": 0.0, "side_plane": 0.0, "top_plane": 0.0}
    for n in ns:
        for kind in ApproachType:
            R = wrist_frame(n, kind)
            worst["orthonormal"] = max(worst["orthonormal"], np.abs(R.T @ R - np.eye(3)).max())
            worst["det"] = max(worst["det"], abs(np.linalg.det(R) - 1))
            worst["distal"] = max(worst["distal"], np.abs(R[:, 0] + n).max())
            key, col = ("side_plane", 2) if kind is ApproachType.SIDE else ("top_plane", 1)
            worst[key] = max(worst[key], abs(R[2, col]))
    verdict(2, "wrist-frame contract", max(worst.values()) <= TOL,
            f"{len(ns)} normals x 2 rules, max errors "
            + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f" (tol {TOL:g})")


# 3 ----------------------------------------------------------------------------

def test_mise_matches_dense(verdict):
    t0 = time.perf_counter()
    bad = []
    tris = []
    for seed in range(10):
        occ = smooth_field(1000 + seed)
        a = meshing.extract_mesh_mise(occ, with_normals=False)
        b = meshing.extract_mesh_dense(occ, resolution=128)
        tris.append(a.n_triangles)
        if a.n_triangles != b.n_triangles or not same_vertex_sets(a.vertices, b.vertices, 1e-6):
            bad.append(seed)
    dt = time.perf_counter() - t0
    verdict(3, "MISE equals dense marching cubes", not bad and dt < 30.0,
            f"10 fields, mismatches {bad or 'none'}, triangles {min(tris)}..{max(tris)}, {dt:.1f} s (< 30 s)")


# 4 ----------------------------------------------------------------------------

def test_metrics_match_brute_force(verdict):
    rng = np.random.default_rng(404)
    mismatches = 0
    axioms = True
    for _ in range(20):
        p, g = random_surface(rng), random_surface(rng)
        m = shape_metrics(p, g)
        if (m.chamfer_l1, m.accuracy, m.completeness, m.normal_consistency) != brute_metrics(p, g):
            mismatches += 1
        k = rng.uniform(0.1, 10)
        s = shape_metrics(p.scaled(k), g.scaled(k))
        axioms &= shape_metrics(p, p).chamfer_l1 == 0.0
        axioms &= bool(np.isclose(s.chamfer_l1, k * m.chamfer_l1, rtol=1e-12))
        axioms &= 0.0 <= m.normal_consistency <= 1.0
    verdict(4, "metric oracle equivalence", mismatches == 0 and axioms,
            f"20 cases of 50 points, exact mismatches {mismatches}, axioms {'hold' if axioms else 'violated'}")


# 5 ----------------------------------------------------------------------------

def test_completion_improves_reconstruction(verdict):
    t0 = time.perf_counter()
    firsts = {}
    for _, oid, cfg in default_suite().trial_configs():
        firsts.setdefault(oid, cfg)
    improved = 0
    ratios = []
    for oid, cfg in firsts.items():
        full = run_pipeline(replace(cfg, completer="revolution")).metrics
        part = run_pipeline(replace(cfg, completer="partial")).metrics
        ratios.append(full.chamfer_l1 / part.chamfer_l1)
        improved += (full.chamfer_l1 < part.chamfer_l1 and full.completeness < part.completeness
                     and full.normal_consistency > part.normal_consistency)
    dt = time.perf_counter() - t0
    mean_ratio = float(np.mean(ratios))
    ok = improved >= 4 and mean_ratio <= 0.6 and dt < 300
    verdict(5, "completion improves reconstruction", ok,
            f"{improved}/{len(firsts)} objects improve all metrics (need 4), mean chamfer ratio "
            f"{mean_ratio:.3f} (need <= 0.6), {dt:.0f} s")


# 6 and 8 share the benchmark runs ------------------------------------------------

@pytest.fixture(scope="module")
def bench_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("bench")
    times = []
    for name in ("a", "b"):
        t0 = time.perf_counter()
        assert main(["bench", "--out", str(root / name)]) == EXIT_OK
        times.append(time.perf_counter() - t0)
    return root, times


def test_feasibility_ablation(verdict, bench_runs):
    root, times = bench_runs
    agg = json.loads((root / "a" / "report.json").read_text())["aggregates"]
    full, part = agg["revolution/confidence"]["Total"], agg["partial/arbitrary"]["Total"]
    gap = 100 * (full["rate"] - part["rate"])
    ok = gap >= 15 and full["rate"] >= 0.70 and times[0] < 600
    verdict(6, "grasp-feasibility ablation", ok,
            f"completion {full['feasible']}/{full['trials']} = {100 * full['rate']:.1f}%, partial "
            f"{part['feasible']}/{part['trials']} = {100 * part['rate']:.1f}%, gap {gap:+.1f} pts (need >= 15), "
            f"completion >= 70%: {'yes' if full['rate'] >= 0.70 else 'no'}, {times[0]:.0f} s")


# 7 ----------------------------------------------------------------------------

def test_threshold_conformance(verdict):
    cfg = WorkspaceConfig()
    s2 = np.sqrt(0.5)
    checks = {}
    checks["45deg inclusive"] = (classify_approach([s2, 0, s2], cfg) is ApproachType.TOP
                                 and classify_approach([np.cos(0.785), 0, np.sin(0.785)], cfg)
                                 is ApproachType.SIDE)
    z0 = cfg.table_height
    mesh = TriMesh([[0.3, 0.2, z0 + 0.044], [0.3, 0.2, z0 + 0.046], [0.3, 0.2, z0 + 0.045]],
                   np.zeros((0, 3)), [[1, 0, 0]] * 3, [1.0] * 3, [MW] * 3)
    checks["45 mm z-gate"] = candidate_mask(mesh, cfg).tolist() == [False, True, True]
    side = plan_grasp(GraspCandidate([-0.40, 0.30, 0.12], [1, 0, 0], 1.0, MW), cfg)
    checks["50/150 mm waypoints"] = (np.allclose(side.approach_point, [-0.35, 0.30, 0.12], rtol=0, atol=1e-15)
                                     and np.allclose(side.grasp_point, [-0.50, 0.30, 0.12], rtol=0, atol=1e-15))
    top = plan_grasp(GraspCandidate([0.1, 0.2, 0.3], [s2, 0, s2], 1.0, T), cfg)
    checks["100/200 mm lifts"] = side.lift.tolist() == [0, 0, 0.1] and top.lift.tolist() == [0, 0, 0.2]
    failed = [k for k, v in checks.items() if not v]
    verdict(7, "threshold conformance", not failed,
            ", ".join(f"{k} {'ok' if v else 'FAILED'}" for k, v in checks.items()))


def test_bench_determinism(verdict, bench_runs):
    root, _ = bench_runs
    same = {name: (root / "a" / name).read_bytes() == (root / "b" / name).read_bytes()
            for name in ("report.json", "report.csv")}
    verdict(8, "bench determinism", all(same.values()),
            ", ".join(f"{k} {'identical' if v else 'DIFFERS'}" for k, v in same.items()))
