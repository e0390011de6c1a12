"""Seeded grasp-feasibility benchmark over synthetic scenes.

A suite names categories, instances per category, trials per instance and
the (completer, criterion) arms to compare. Every trial is one
:func:`run_pipeline` call; "success" is simulator feasibility. Rows keep
trial order regardless of how many workers ran them.
"""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

from .errors import AnthroGraspError, ConfigError, StageError
from .mesh import MW, NG, T
from .pipeline import PipelineConfig, SceneSpec, run_pipeline, write_json

POSTURE_NAMES = {NG: "NG", MW: "MW", T: "T"}
ROW_FIELDS = ("trial", "object_id", "category", "shape_seed", "seed", "completer", "criterion",
              "approach", "posture", "feasible", "failure_reason", "stage",
              "chamfer_l1", "accuracy", "completeness", "normal_consistency")
FEASIBILITY_NOTE = "success = simulator feasibility, not a physical grasp success rate"


@dataclass(frozen=True)
class Arm:
    completer: str
    criterion: str

    @property
    def name(self) -> str:
        return f"{self.completer}/{self.criterion}"


@dataclass(frozen=True)
class SuiteSpec:
    categories: tuple = ("cup",)
    objects_per_category: int = 5
    trials: int = 10
    arms: tuple = (Arm("revolution", "confidence"), Arm("partial", "arbitrary"))
    seed: int = 0
    metric_samples: int = 20000
    base: dict = field(default_factory=dict)      # PipelineConfig overrides

    def __post_init__(self):
        object.__setattr__(self, "categories", tuple(self.categories))
        arms = tuple(a if isinstance(a, Arm) else Arm(**a) for a in self.arms)
        object.__setattr__(self, "arms", arms)
        if self.objects_per_category < 0 or self.trials < 0:
            raise ConfigError("object and trial counts must be >= 0")
        for a in arms:
            PipelineConfig(completer=a.completer, criterion=a.criterion)
        for c in self.categories:
            SceneSpec(category=c)

    def trial_configs(self) -> list:
        """One (trial, object id, config) per run, in report order."""
        base = PipelineConfig.from_dict(dict(self.base))
        out = []
        for cat in self.categories:
            for obj in range(self.objects_per_category):
                for trial in range(self.trials):
                    sc = replace(base.scene, category=cat, shape_seed=obj,
                                 seed=self.seed + 100 * obj + trial)
                    for arm in self.arms:
                        cfg = replace(base, scene=sc, completer=arm.completer, criterion=arm.criterion,
                                      selection_seed=self.seed + trial, metric_samples=self.metric_samples)
                        out.append((len(out), f"{cat}-{obj}", cfg))
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        d["categories"] = list(self.categories)
        d["arms"] = [asdict(a) for a in self.arms]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SuiteSpec":
        if not isinstance(d, dict):
            raise ConfigError("suite must be a JSON object")
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown suite keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except (TypeError, ValueError, AnthroGraspError) as exc:
            raise ConfigError(f"suite: {exc}") from exc

    @classmethod
    def load(cls, path) -> "SuiteSpec":
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc


def default_suite_path() -> Path:
    return Path(str(resources.files("anthrograsp") / "data" / "default_suite.json"))


def default_suite() -> SuiteSpec:
    return SuiteSpec.load(default_suite_path())


def run_trial(job) -> dict:
    """One benchmark row. Stage failures become infeasible rows."""
    trial, object_id, cfg = job
    row = {"trial": trial, "object_id": object_id, "category": cfg.scene.category,
           "shape_seed": cfg.scene.shape_seed, "seed": cfg.scene.seed,
           "completer": cfg.completer, "criterion": cfg.criterion,
           "approach": None, "posture": None, "feasible": False, "failure_reason": None,
           "stage": None, "metrics": None}
    try:
        res = run_pipeline(cfg)
    except StageError as exc:
        res = exc.partial
        row["failure_reason"] = type(exc.cause).__name__
        row["stage"] = exc.stage
    if res is not None:
        if res.metrics is not None:
            row["metrics"] = res.metrics.to_dict()
        if res.plan is not None:
            row["approach"] = res.plan.approach.value
            row["posture"] = POSTURE_NAMES[int(res.plan.grasp_type)]
        if res.sim is not None:
            row["feasible"] = bool(res.sim.feasible)
            row["failure_reason"] = res.sim.failure_reason
    return row


def _rate(rows) -> dict:
    n = len(rows)
    ok = sum(1 for r in rows if r["feasible"])
    return {"trials": n, "feasible": ok, "rate": ok / n if n else None}


def aggregate(rows) -> dict:
    """Feasibility per arm, split by planned posture plus the arm total."""
    arms = []
    for r in rows:
        name = f"{r['completer']}/{r['criterion']}"
        if name not in arms:
            arms.append(name)
    out = {}
    for name in arms:
        mine = [r for r in rows if f"{r['completer']}/{r['criterion']}" == name]
        out[name] = {"MW": _rate([r for r in mine if r["posture"] == "MW"]),
                     "T": _rate([r for r in mine if r["posture"] == "T"]),
                     "Total": _rate(mine)}
    return out


@dataclass
class ExperimentReport:
    suite: dict
    rows: list

    @property
    def aggregates(self) -> dict:
        return aggregate(self.rows)

    def rate(self, completer: str, criterion: str) -> Optional[float]:
        return self.aggregates.get(f"{completer}/{criterion}", {}).get("Total", {}).get("rate")

    def to_dict(self) -> dict:
        return {"note": FEASIBILITY_NOTE, "suite": self.suite, "rows": self.rows,
                "aggregates": self.aggregates}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(ROW_FIELDS)
        for r in self.rows:
            m = r["metrics"] or {}
            vals = [r.get(k) for k in ROW_FIELDS[:12]] + [m.get(k) for k in ROW_FIELDS[12:]]
            w.writerow(["" if v is None else repr(v) if isinstance(v, float) else v for v in vals])
        return buf.getvalue()

    def write(self, out_dir) -> dict:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "report.json", self.to_dict())
        (out / "report.csv").write_text(self.to_csv())
        return {"json": str(out / "report.json"), "csv": str(out / "report.csv")}

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        return cls(d["suite"], d["rows"])


def run_benchmark(suite: SuiteSpec, jobs: int = 1) -> ExperimentReport:
    work = suite.trial_configs()
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(run_trial, work))
    else:
        rows = [run_trial(w) for w in work]
    return ExperimentReport(suite.to_dict(), rows)
