import json
import subprocess
import sys

import numpy as np
import pytest

from anthrograsp.cli import EXIT_CONFIG, EXIT_OK, EXIT_STAGE, OUT_ENV, main
from anthrograsp.mesh_io import load_mesh


def run(argv, capsys):
    rc = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return rc, (json.loads(out) if rc == EXIT_OK else None)


@pytest.fixture(scope="module")
def chain(tmp_path_factory):
    """render -> complete -> mesh -> label, shared by the stage tests."""
    root = tmp_path_factory.mktemp("cli")
    assert main(["render", "--seed", "3", "--out", str(root / "r")]) == EXIT_OK
    assert main(["complete", str(root / "r" / "view.json"), "--out", str(root / "c")]) == EXIT_OK
    assert main(["mesh", str(root / "c" / "occupancy.grid"), "--out", str(root / "m")]) == EXIT_OK
    assert main(["label", str(root / "m" / "mesh.ply"), "--out", str(root / "l")]) == EXIT_OK
    return root


def test_chain_outputs(chain):
    for rel in ("r/view.json", "r/view.depth.f32", "r/view.mask.u8", "r/object.ply", "c/tsdf.grid",
                "c/occupancy.grid", "m/mesh.ply", "l/mesh_labeled.ply"):
        assert (chain / rel).exists(), rel
    m = load_mesh(chain / "l" / "mesh_labeled.ply")
    assert m.posture is not None and m.confidence is not None


def test_plan_and_simulation(chain, capsys):
    rc, doc = run(["plan", chain / "l" / "mesh_labeled.ply", "--view", chain / "r" / "view.json",
                   "--out", chain / "p"], capsys)
    assert rc == EXIT_OK
    assert doc["approach"] in ("side", "top")
    assert set(doc["simulation"]) == {"feasible", "failure_reason", "contacts", "required"}
    assert (chain / "p" / "plan.json").exists() and (chain / "p" / "simulation.json").exists()


def test_metrics_self_converges(chain, capsys):
    # two independent surface samples of one mesh: the gap shrinks with density
    mesh = chain / "m" / "mesh.ply"
    rc, coarse = run(["metrics", mesh, mesh, "--samples", "1000", "--out", chain / "x"], capsys)
    assert rc == EXIT_OK
    assert coarse["n_samples"] == 1000
    assert json.loads((chain / "x" / "metrics.json").read_text()) == coarse
    _, fine = run(["metrics", mesh, mesh, "--samples", "16000", "--out", chain / "y"], capsys)
    assert fine["chamfer_l1"] < 0.5 * coarse["chamfer_l1"]


def test_pipeline_matches_staged_render(chain, tmp_path, capsys):
    rc, doc = run(["pipeline", "--seed", "3", "--out", tmp_path], capsys)
    assert rc == EXIT_OK
    assert doc["config"]["scene"]["seed"] == 3
    assert (tmp_path / "view.depth.f32").read_bytes() == (chain / "r" / "view.depth.f32").read_bytes()
    assert (tmp_path / "tsdf.grid").read_bytes() == (chain / "c" / "tsdf.grid").read_bytes()
    assert (tmp_path / "occupancy.grid").read_bytes() == (chain / "c" / "occupancy.grid").read_bytes()
    # PLY stores float32, so staged normals are rebuilt from rounded vertices
    a, b = load_mesh(tmp_path / "mesh_canonical.ply"), load_mesh(chain / "l" / "mesh_labeled.ply")
    np.testing.assert_array_equal(a.vertices, b.vertices)
    np.testing.assert_array_equal(a.triangles, b.triangles)
    np.testing.assert_array_equal(a.posture, b.posture)
    np.testing.assert_array_equal(a.confidence, b.confidence)
    np.testing.assert_allclose(a.normals, b.normals, atol=1e-6)


def test_out_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(OUT_ENV, str(tmp_path))
    rc, doc = run(["render"], capsys)
    assert rc == EXIT_OK
    assert doc["view"] == str(tmp_path / "render" / "view.json")


def test_bench_cli(tmp_path, capsys):
    suite = tmp_path / "suite.json"
    suite.write_text(json.dumps({"objects_per_category": 1, "trials": 1, "metric_samples": 1000}))
    rc, doc = run(["bench", "--config", suite, "--completer", "mirror", "--out", tmp_path / "b"], capsys)
    assert rc == EXIT_OK
    assert doc["rows"] == 1
    assert list(doc["aggregates"]) == ["mirror/confidence"]
    assert (tmp_path / "b" / "report.csv").exists()


def test_config_errors(tmp_path, capsys):
    assert main(["render", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"completer": "magic"}))
    assert main(["pipeline", "--config", str(bad), "--out", str(tmp_path)]) == EXIT_CONFIG
    bare = tmp_path / "bare"
    bare.mkdir()
    (bare / "v.json").write_text(json.dumps({"fx": 1}))
    assert main(["complete", str(bare / "v.json"), "--out", str(tmp_path)]) in (EXIT_CONFIG, EXIT_STAGE)
    with pytest.raises(SystemExit) as info:
        main(["render", "--completer", "magic"])
    assert info.value.code == 2


def test_stage_failure(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"metric_samples": 1000, "workspace": {"reach_radius": 0.01}}))
    assert main(["pipeline", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_STAGE
    assert "stage select failed" in capsys.readouterr().err
    assert main(["metrics", str(tmp_path / "a.ply"), str(tmp_path / "b.ply")]) == EXIT_STAGE


def test_console_entry(tmp_path):
    r = subprocess.run([sys.executable, "-m", "anthrograsp.cli", "render", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert json.loads(r.stdout)["foreground_pixels"] > 0
