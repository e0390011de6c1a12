"""Command-line entry point.

Each subcommand runs one slice of the pipeline and reads or writes the
file formats in ``docs/formats.md``. Exit codes: 0 success, 2 bad
configuration, 3 stage failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bench, meshing, metrics, objects, pipeline, posture, scene, solver, volume
from .errors import AnthroGraspError, ConfigError, StageError
from .geometry import SimilarityPose, rot_z
from .mesh_io import load_mesh, save_mesh
from .pipeline import PipelineConfig, write_json
from .sim import simulate_grasp

OUT_ENV = "ANTHROGRASP_OUT"
EXIT_OK, EXIT_CONFIG, EXIT_STAGE = 0, 2, 3
COMPLETERS = {"revolution": "revolution", "mirror": "mirror", "partial": "partial"}


def _out_dir(args) -> Path:
    if args.out:
        return Path(args.out)
    return Path(os.environ.get(OUT_ENV, "anthrograsp_out")) / args.command


def _config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    over = {}
    if args.completer:
        over["completer"] = COMPLETERS[args.completer]
    if args.criterion:
        over["criterion"] = args.criterion
    if args.seed is not None:
        over["scene"] = replace(cfg.scene, seed=args.seed)
    return replace(cfg, **over) if over else cfg


def _emit(doc) -> None:
    json.dump(doc, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _view_meta(path):
    depth, mask, intr, meta = scene.load_depth(path)
    for key in ("category", "object_pose", "canonical_pose"):
        if key not in meta:
            raise ConfigError(f"{path}: missing scene annotation {key!r}")
    return depth, mask, intr, meta


# -- subcommands ------------------------------------------------------------

def cmd_render(args) -> dict:
    cfg, out = _config(args), _out_dir(args)
    sc, ws = cfg.scene, cfg.workspace
    mesh_obj, _, _ = objects.build_object(sc.category, sc.params, sc.shape_seed)
    x, y, yaw = sc.placement()
    lo, _ = mesh_obj.bounds()
    pose = SimilarityPose(rot_z(yaw), np.array([x, y, ws.table_height - lo[2]]), 1.0)
    cam, intr = cfg.camera.frame(), cfg.camera.intr()
    depth, mask = scene.render_depth(mesh_obj, pose, cam, intr, cfg.camera.noise_sigma, sc.seed)
    cano = pipeline.canonical_pose(pose, cam, objects.canonical_scale(mesh_obj))
    out.mkdir(parents=True, exist_ok=True)
    scene.save_depth(depth, mask, intr, out / "view", extra=pipeline.view_extra(sc.category, pose, cano))
    save_mesh(mesh_obj.transformed(pose), out / "object.ply")
    return {"view": str(out / "view.json"), "object": str(out / "object.ply"),
            "foreground_pixels": int(mask.sum())}


def cmd_complete(args) -> dict:
    cfg, out = _config(args), _out_dir(args)
    depth, mask, intr, meta = _view_meta(args.view)
    cano = SimilarityPose.from_dict(meta["canonical_pose"])
    cloud = scene.backproject(depth, mask, intr)
    tsdf = volume.voxelize_tsdf(cano.apply(cloud.points), cano.apply(np.zeros(3)), cfg.grid_spec())
    occ = volume.complete(tsdf, volume.Completer(cfg.completer, meta["category"], dict(cfg.completer_params)))
    out.mkdir(parents=True, exist_ok=True)
    volume.save_grid(tsdf, out / "tsdf.grid")
    volume.save_grid(occ, out / "occupancy.grid")
    return {"tsdf": str(out / "tsdf.grid"), "occupancy": str(out / "occupancy.grid"),
            "completer": cfg.completer}


def cmd_mesh(args) -> dict:
    cfg, out = _config(args), _out_dir(args)
    occ = volume.load_grid(args.grid)
    if not isinstance(occ, volume.OccupancyGrid):
        raise ConfigError(f"{args.grid}: expected an occupancy grid")
    m = meshing.extract_mesh_mise(occ, cfg.mise.get("iso", 0.5), cfg.mise.get("initial_res", 32),
                                  cfg.mise.get("refinement_steps", 2))
    m = meshing.attach_confidence(m, occ)
    out.mkdir(parents=True, exist_ok=True)
    save_mesh(m, out / "mesh.ply")
    return {"mesh": str(out / "mesh.ply"), "vertices": m.n_vertices, "triangles": m.n_triangles}


def cmd_label(args) -> dict:
    cfg, out = _config(args), _out_dir(args)
    m = load_mesh(args.mesh)
    category = args.category or cfg.scene.category
    ref = posture.load_labeled_reference(args.reference, category) if args.reference \
        else posture.shipped_reference(category)
    m = posture.transfer_postures(m, ref, cfg.k)
    out.mkdir(parents=True, exist_ok=True)
    save_mesh(m, out / "mesh_labeled.ply")
    counts = {name: int(np.sum(m.posture == int(p))) for name, p in posture.Posture.__members__.items()}
    return {"mesh": str(out / "mesh_labeled.ply"), "labels": counts}


def cmd_metrics(args) -> dict:
    cfg, out = _config(args), _out_dir(args)
    pred, gt = load_mesh(args.pred), load_mesh(args.gt)
    seed = cfg.scene.seed if args.seed is None else args.seed
    n = args.samples or cfg.metric_samples
    res = metrics.mesh_metrics(pred, gt, n, seed).to_dict()
    res.update(n_samples=n, seed=seed)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "metrics.json", res)
    return res


def cmd_plan(args) -> dict:
    cfg, out = _config(args), _out_dir(args)
    ws = cfg.workspace
    _, _, _, meta = _view_meta(args.view)
    pose = SimilarityPose.from_dict(meta["object_pose"])
    s = float(meta["canonical_pose"]["scale"])
    m = load_mesh(args.mesh)
    if m.confidence is None or m.posture is None:
        raise ConfigError(f"{args.mesh}: plan needs a labeled mesh with confidence")
    mb = m.transformed(pipeline.base_from_canonical(pose, s)).with_(confidence=m.confidence * s)
    cand = solver.select_candidate(solver.filter_candidates(mb, ws), cfg.criterion, cfg.selection_seed)
    plan = solver.plan_grasp(cand, ws)
    out.mkdir(parents=True, exist_ok=True)
    solver.save_plan(plan, out / "plan.json")
    doc = {"plan": str(out / "plan.json"), "approach": plan.approach.value, "posture": int(plan.grasp_type)}
    obj = Path(args.object) if args.object else Path(args.view).parent / "object.ply"
    if obj.exists():
        doc["simulation"] = simulate_grasp(plan, load_mesh(obj), ws).to_dict()
        write_json(out / "simulation.json", doc["simulation"])
    return doc


def cmd_pipeline(args) -> dict:
    cfg, out = _config(args), _out_dir(args)
    pipeline.run_pipeline(cfg, out)
    return json.loads((out / "result.json").read_text())


def cmd_bench(args) -> dict:
    suite = bench.SuiteSpec.load(args.config) if args.config else bench.default_suite()
    if args.seed is not None:
        suite = replace(suite, seed=args.seed)
    if args.completer or args.criterion:
        suite = replace(suite, arms=(bench.Arm(COMPLETERS[args.completer or "revolution"],
                                               args.criterion or "confidence"),))
    report = bench.run_benchmark(suite, jobs=max(1, args.jobs))
    files = report.write(_out_dir(args))
    return {"files": files, "rows": len(report.rows), "aggregates": report.aggregates,
            "note": bench.FEASIBILITY_NOTE}


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config (a suite file for bench)")
    common.add_argument("--seed", type=int, help="scene seed (suite seed for bench)")
    common.add_argument("--completer", choices=sorted(COMPLETERS))
    common.add_argument("--criterion", choices=["confidence", "arbitrary"])
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV}/<command>)")
    common.add_argument("--jobs", type=int, default=1, help="benchmark worker processes")

    p = argparse.ArgumentParser(prog="anthrograsp", description="single-view grasp pipeline on synthetic scenes")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("render", parents=[common], help="render a depth view of a seeded scene")
    sp = sub.add_parser("complete", parents=[common], help="view -> TSDF and completed occupancy grids")
    sp.add_argument("view", help="view.json written by render")
    sp = sub.add_parser("mesh", parents=[common], help="occupancy grid -> mesh with confidence")
    sp.add_argument("grid")
    sp = sub.add_parser("label", parents=[common], help="transfer posture labels onto a canonical mesh")
    sp.add_argument("mesh")
    sp.add_argument("--category", choices=[c.value for c in objects.Category])
    sp.add_argument("--reference", help="labeled reference PLY (default: shipped)")
    sp = sub.add_parser("metrics", parents=[common], help="Chamfer-L1, completeness, normal consistency")
    sp.add_argument("pred")
    sp.add_argument("gt")
    sp.add_argument("--samples", type=int)
    sp = sub.add_parser("plan", parents=[common], help="select a vertex and plan the grasp")
    sp.add_argument("mesh", help="labeled canonical mesh")
    sp.add_argument("--view", required=True, help="view.json carrying the object pose")
    sp.add_argument("--object", help="true object mesh for the feasibility check")
    sub.add_parser("pipeline", parents=[common], help="run every stage and write all intermediates")
    sub.add_parser("bench", parents=[common], help="seeded feasibility benchmark")
    return p


COMMANDS = {"render": cmd_render, "complete": cmd_complete, "mesh": cmd_mesh, "label": cmd_label,
            "metrics": cmd_metrics, "plan": cmd_plan, "pipeline": cmd_pipeline, "bench": cmd_bench}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"stage {exc.stage} failed: {type(exc.cause).__name__}: {exc.cause}", file=sys.stderr)
        return EXIT_STAGE
    except (AnthroGraspError, ValueError, OSError) as exc:
        print(f"{args.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_STAGE
    _emit(doc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
