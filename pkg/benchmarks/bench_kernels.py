"""Time the compiled kernels against the numpy fallback on pipeline-sized inputs.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Both backends are imported directly, so the environment switch does not
matter here. Results are checked for agreement before timing.
"""
import argparse
import time

import numpy as np

from anthrograsp.geometry import SimilarityPose, rot_z
from anthrograsp.kernels import _pykernels
from anthrograsp.objects import build_object
from anthrograsp.pipeline import PipelineConfig

try:
    from anthrograsp.kernels import _ckernels
except ImportError:
    _ckernels = None


def workloads():
    cfg = PipelineConfig()
    mesh, _, _ = build_object("cup", None, 0)
    lo, _ = mesh.bounds()
    pose = SimilarityPose(rot_z(0.3), np.array([-0.45, 0.35, cfg.workspace.table_height - lo[2]]), 1.0)
    cam, intr = cfg.camera.frame(), cfg.camera.intr()
    tris_cam = cam.from_parent(pose.apply(mesh.vertices))[mesh.triangles]
    raster = (tris_cam, intr.fx, intr.fy, intr.cx, intr.cy, intr.width, intr.height, 0.05)

    rng = np.random.default_rng(0)
    grid = rng.random((64, 64, 64))
    queries = rng.uniform(0, 63, size=(200_000, 3))

    placed = pose.apply(mesh.vertices)[mesh.triangles]
    center = placed.reshape(-1, 3).mean(axis=0)
    origins = center + rng.normal(scale=0.2, size=(64, 3))
    dirs = center + rng.normal(scale=0.03, size=(64, 3)) - origins
    return {
        f"rasterize_depth ({len(tris_cam)} tris, {intr.width}x{intr.height})": ("rasterize_depth", raster),
        f"trilinear ({len(queries)} queries, 64^3)": ("trilinear", (grid, queries)),
        f"ray_first_hit ({len(origins)} rays, {len(placed)} tris)": ("ray_first_hit", (origins, dirs, placed)),
    }


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled kernels are not built; only the numpy fallback is available")
    print(f"{'kernel':58s} {'numpy [s]':>10s} {'cython [s]':>11s} {'speedup':>8s}")
    for label, (name, kargs) in workloads().items():
        py_fn = getattr(_pykernels, name)
        t_py = best_of(py_fn, kargs, args.repeat)
        if _ckernels is None:
            print(f"{label:58s} {t_py:10.4f} {'-':>11s} {'-':>8s}")
            continue
        c_fn = getattr(_ckernels, name)
        a, b = np.asarray(py_fn(*kargs)), np.asarray(c_fn(*kargs))
        finite = np.isfinite(a)
        assert np.array_equal(finite, np.isfinite(b)) and np.allclose(a[finite], b[finite], atol=1e-9), name
        t_c = best_of(c_fn, kargs, args.repeat)
        print(f"{label:58s} {t_py:10.4f} {t_c:11.4f} {t_py / t_c:7.1f}x")


if __name__ == "__main__":
    main()
