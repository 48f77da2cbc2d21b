"""Cross-validated experiment runner and report export.

Output directory layout written by :func:`export_report`::

    metrics.csv                      one row per dataset x model x fold, plus
                                     per-(dataset, model) means and the
                                     across-dataset "average" rows
    metrics.json                     the full RunResult, config echo included
    timing.json                      wall-clock seconds of the run
    curves/<dataset>_<model>.csv     epoch, mean_val_loss (mean over folds)
    curves/average_<model>.csv       the same curve averaged over datasets
    traces/<dataset>_<model>_fold<k>.csv   epoch, train_loss, val_loss
    models/<dataset>_<model>_fold<k>.json  trained model (see TrainedModel.to_dict)

With ``repeats > 1`` the per-fold file names gain an ``_r<repeat>`` part
before ``_fold``.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .data import BUNDLED, Split, apply_scaler, fit_scaler, load_dataset, stratified_k_fold
from .fox import A_SCHEDULES, EXPLORATION_MODES
from .metrics import MetricsReport, confusion, mean_report, report
from .mlp import build_topology
from .trainers import TrainConfig, TrainedModel, loss, train_backprop, train_foxann, train_logreg

log = logging.getLogger(__name__)

__all__ = [
    "MODELS",
    "ExperimentConfig",
    "FoldRecord",
    "AggregateRow",
    "RunResult",
    "ExperimentError",
    "derive_seed",
    "fold_splits",
    "run_experiment",
    "export_report",
    "load_result",
    "render_table",
    "read_config_file",
]

MODELS = ("foxann", "ann", "logreg")
MODEL_LABELS = {"foxann": "FOXANN", "ann": "ANN", "logreg": "LR"}
DATASET_LABELS = {
    "iris": "Iris Flower",
    "breast_cancer": "Breast Cancer Wisconsin",
    "wine": "Wine",
    "average": "Average results",
}
NORM_SCOPES = ("whole_dataset", "per_fold")
METRIC_COLUMNS = ["Accuracy", "Loss", "Precision", "Recall", "F-Score"]
PROVENANCE_COLUMNS = [
    "seed", "epochs", "population_size", "learning_rate", "weight_low", "weight_high",
    "normalization_scope", "a_schedule", "exploration",
]


class ExperimentError(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    datasets: List[str] = field(default_factory=lambda: list(BUNDLED))
    models: List[str] = field(default_factory=lambda: list(MODELS))
    folds: int = 10
    epochs: int = 100
    population_size: int = 30
    learning_rate: float = 0.1
    weight_low: float = -3.0
    weight_high: float = 3.0
    seed: int = 0
    normalization_scope: str = "whole_dataset"
    a_schedule: str = "decreasing"
    exploration: str = "scaled"
    repeats: int = 1
    n_jobs: int = 1

    def __post_init__(self):
        self.datasets = list(self.datasets)
        self.models = list(self.models)
        if not self.datasets:
            raise ValueError("at least one dataset is required")
        if not self.models:
            raise ValueError("at least one model is required")
        for d in self.datasets:
            if d not in BUNDLED and not (d.lower().endswith(".csv") and Path(d).exists()):
                raise ValueError(
                    f"unknown dataset {d!r}; valid names: {', '.join(BUNDLED)} "
                    "(or a path to an existing .csv file)"
                )
        for m in self.models:
            if m not in MODELS:
                raise ValueError(f"unknown model {m!r}; valid models: {', '.join(MODELS)}")
        if self.folds < 2:
            raise ValueError(f"folds must be >= 2, got {self.folds}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.repeats < 1:
            raise ValueError(f"repeats must be >= 1, got {self.repeats}")
        if self.normalization_scope not in NORM_SCOPES:
            raise ValueError(f"normalization_scope must be one of {NORM_SCOPES}")
        if self.a_schedule not in A_SCHEDULES:
            raise ValueError(f"a_schedule must be one of {A_SCHEDULES}")
        if self.exploration not in EXPLORATION_MODES:
            raise ValueError(f"exploration must be one of {EXPLORATION_MODES}")
        # validates the remaining numeric knobs
        self.train_config(0)

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            weight_low=self.weight_low,
            weight_high=self.weight_high,
            population_size=self.population_size,
            learning_rate=self.learning_rate,
            seed=seed,
            a_schedule=self.a_schedule,
            exploration=self.exploration,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**d)


@dataclass
class FoldRecord:
    dataset: str
    model: str
    repeat: int
    fold: int
    seed: int
    n_train: int
    n_val: int
    metrics: MetricsReport
    train_loss: List[float]
    val_loss: List[float]


@dataclass
class AggregateRow:
    dataset: str
    model: str
    metrics: MetricsReport
    mean_val_loss: List[float]


@dataclass
class RunResult:
    config: ExperimentConfig
    folds: List[FoldRecord]
    aggregates: List[AggregateRow]
    averages: List[AggregateRow]
    provenance: dict
    # trained models keyed by (dataset, model, repeat, fold); not part of metrics.json
    models: Dict[tuple, TrainedModel] = field(default_factory=dict, compare=False, repr=False)
    # kept out of metrics.json so repeated runs give byte-identical files
    wall_time_s: Optional[float] = field(default=None, compare=False)

    def aggregate(self, dataset: str, model: str) -> MetricsReport:
        for row in self.aggregates + self.averages:
            if row.dataset == dataset and row.model == model:
                return row.metrics
        raise KeyError((dataset, model))

    def fold_records(self, dataset: str, model: str) -> List[FoldRecord]:
        return [r for r in self.folds if r.dataset == dataset and r.model == model]

    def to_dict(self) -> dict:
        d = {
            "format": "foxann-run/1",
            "config": self.config.to_dict(),
            "provenance": self.provenance,
            "folds": [asdict(r) for r in self.folds],
            "aggregates": [asdict(r) for r in self.aggregates],
            "averages": [asdict(r) for r in self.averages],
        }
        return d

    @classmethod
    def from_dict(cls, d) -> "RunResult":
        def fold(r):
            return FoldRecord(**{**r, "metrics": MetricsReport.from_dict(r["metrics"])})

        def agg(r):
            return AggregateRow(**{**r, "metrics": MetricsReport.from_dict(r["metrics"])})

        return cls(
            config=ExperimentConfig.from_dict(d["config"]),
            folds=[fold(r) for r in d["folds"]],
            aggregates=[agg(r) for r in d["aggregates"]],
            averages=[agg(r) for r in d["averages"]],
            provenance=d["provenance"],
        )


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from arbitrary JSON-serializable parts."""
    digest = hashlib.sha256(json.dumps(parts).encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def _dataset_key(name: str) -> str:
    if name in BUNDLED:
        return name
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", Path(name).stem)


_DATASET_CACHE: dict = {}


def _load(name):
    if name not in _DATASET_CACHE:
        _DATASET_CACHE[name] = load_dataset(name)
    return _DATASET_CACHE[name]


def fold_splits(cfg: ExperimentConfig, dataset_name: str, repeat: int = 0):
    """The folds used for ``dataset_name`` in a given repeat.

    Shared by every model, so all models see the same partition.
    """
    key = _dataset_key(dataset_name)
    return stratified_k_fold(_load(dataset_name), cfg.folds,
                             derive_seed(cfg.seed, key, "folds", repeat))


def _run_job(cfg: ExperimentConfig, dataset_name: str, model: str, repeat: int, fold: int):
    ds = _load(dataset_name)
    key = _dataset_key(dataset_name)
    sp = fold_splits(cfg, dataset_name, repeat)[fold]
    if cfg.normalization_scope == "whole_dataset":
        scaler = fit_scaler(ds.features)
    else:
        scaler = fit_scaler(ds.features[sp.train_indices])
    X = apply_scaler(scaler, ds.features)
    train = Split(X[sp.train_indices], ds.labels[sp.train_indices], ds.n_classes)
    val = Split(X[sp.val_indices], ds.labels[sp.val_indices], ds.n_classes)

    seed = derive_seed(cfg.seed, key, model, repeat, fold)
    tcfg = cfg.train_config(seed)
    if model == "foxann":
        trained, trace = train_foxann(train, val, build_topology(ds.n_features, ds.n_classes), tcfg)
    elif model == "ann":
        trained, trace = train_backprop(train, val, build_topology(ds.n_features, ds.n_classes), tcfg)
    else:
        trained, trace = train_logreg(train, val, ds.n_classes, tcfg)

    val_loss = loss(val.targets, trained.predict_proba(val.features), "mean")
    cm = confusion(val.labels, trained.predict(val.features), ds.n_classes)
    trained.scaler = scaler
    trained.class_names = list(ds.class_names)
    trained.config = {**tcfg.__dict__, "dataset": key, "model": model,
                      "repeat": repeat, "fold": fold}
    rec = FoldRecord(
        dataset=key, model=model, repeat=repeat, fold=fold, seed=seed,
        n_train=len(sp.train_indices), n_val=len(sp.val_indices),
        metrics=report(cm, val_loss),
        train_loss=[float(v) for v in trace.train_loss],
        val_loss=[float(v) for v in trace.val_loss],
    )
    return rec, trained


def _guarded_job(args):
    cfg, dataset_name, model, repeat, fold = args
    try:
        return _run_job(cfg, dataset_name, model, repeat, fold)
    except Exception as exc:
        raise ExperimentError(
            f"{dataset_name}/{model}/repeat {repeat}/fold {fold} failed: "
            f"{type(exc).__name__}: {exc}"
        ) from exc


def _mean_curve(records):
    return [float(v) for v in np.mean([r.val_loss for r in records], axis=0)]


def run_experiment(cfg: ExperimentConfig) -> RunResult:
    """Train and evaluate every (dataset, model, repeat, fold) combination.

    Jobs run on a process pool when ``cfg.n_jobs > 1``; results do not
    depend on the worker count.
    """
    start = time.perf_counter()
    jobs = [
        (cfg, d, m, r, k)
        for d in cfg.datasets
        for m in cfg.models
        for r in range(cfg.repeats)
        for k in range(cfg.folds)
    ]
    if cfg.n_jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.n_jobs) as pool:
            outputs = list(pool.map(_guarded_job, jobs))
    else:
        outputs = []
        for job in jobs:
            log.info("training %s/%s repeat %d fold %d", *job[1:])
            outputs.append(_guarded_job(job))

    records = [rec for rec, _ in outputs]
    models = {(rec.dataset, rec.model, rec.repeat, rec.fold): m for rec, m in outputs}

    aggregates = []
    for d in cfg.datasets:
        key = _dataset_key(d)
        for m in cfg.models:
            recs = [r for r in records if r.dataset == key and r.model == m]
            aggregates.append(AggregateRow(key, m, mean_report(r.metrics for r in recs),
                                           _mean_curve(recs)))
    averages = []
    for m in cfg.models:
        rows = [a for a in aggregates if a.model == m]
        curve = [float(v) for v in np.mean([a.mean_val_loss for a in rows], axis=0)]
        averages.append(AggregateRow("average", m, mean_report(a.metrics for a in rows), curve))

    provenance = {"package_version": __version__, "seed": cfg.seed}
    return RunResult(cfg, records, aggregates, averages, provenance, models,
                     wall_time_s=round(time.perf_counter() - start, 3))


def _fmt(v) -> str:
    return repr(float(v))


def _metric_cells(m: MetricsReport):
    return [_fmt(m.accuracy), _fmt(m.loss), _fmt(m.precision), _fmt(m.recall), _fmt(m.f_score)]


def _write_csv(path: Path, header, rows):
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def export_report(result: RunResult, out_dir) -> List[Path]:
    """Write the run to ``out_dir`` (layout in the module docstring)."""
    out = Path(out_dir)
    cfg = result.config
    written = []
    try:
        for sub in ("curves", "traces", "models"):
            (out / sub).mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror or exc}") from exc

    prov = [cfg.seed, cfg.epochs, cfg.population_size, _fmt(cfg.learning_rate),
            _fmt(cfg.weight_low), _fmt(cfg.weight_high), cfg.normalization_scope,
            cfg.a_schedule, cfg.exploration]
    rows = []
    for r in result.folds:
        rows.append([r.dataset, r.model, r.repeat, r.fold, *_metric_cells(r.metrics), *prov])
    for a in result.aggregates + result.averages:
        rows.append([a.dataset, a.model, "all", "mean", *_metric_cells(a.metrics), *prov])
    path = out / "metrics.csv"
    _write_csv(path, ["dataset", "model", "repeat", "fold", *METRIC_COLUMNS, *PROVENANCE_COLUMNS],
               rows)
    written.append(path)

    path = out / "metrics.json"
    try:
        path.write_text(json.dumps(result.to_dict(), indent=2) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    written.append(path)

    if result.wall_time_s is not None:
        path = out / "timing.json"
        try:
            path.write_text(json.dumps({"wall_time_s": result.wall_time_s}) + "\n")
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
        written.append(path)

    for a in result.aggregates + result.averages:
        path = out / "curves" / f"{a.dataset}_{a.model}.csv"
        _write_csv(path, ["epoch", "mean_val_loss"],
                   [[e, _fmt(v)] for e, v in enumerate(a.mean_val_loss, start=1)])
        written.append(path)

    for r in result.folds:
        stem = f"{r.dataset}_{r.model}"
        if cfg.repeats > 1:
            stem += f"_r{r.repeat}"
        stem += f"_fold{r.fold}"
        path = out / "traces" / f"{stem}.csv"
        _write_csv(path, ["epoch", "train_loss", "val_loss"],
                   [[e, _fmt(t), _fmt(v)]
                    for e, (t, v) in enumerate(zip(r.train_loss, r.val_loss), start=1)])
        written.append(path)
        model = result.models.get((r.dataset, r.model, r.repeat, r.fold))
        if model is not None:
            path = out / "models" / f"{stem}.json"
            try:
                model.save(path)
            except OSError as exc:
                raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
            written.append(path)
    return written


def load_result(path) -> RunResult:
    """Read a RunResult back from ``metrics.json`` (or a directory holding it)."""
    path = Path(path)
    if path.is_dir():
        path = path / "metrics.json"
    return RunResult.from_dict(json.loads(path.read_text()))


def render_table(result: RunResult) -> str:
    """Aggregate metrics as a fixed-width text table."""
    header = ["Dataset", "Model", *METRIC_COLUMNS]
    lines = []
    for a in result.aggregates + result.averages:
        m = a.metrics
        lines.append([
            DATASET_LABELS.get(a.dataset, a.dataset),
            MODEL_LABELS.get(a.model, a.model),
            *(f"{v:.4f}" for v in (m.accuracy, m.loss, m.precision, m.recall, m.f_score)),
        ])
    widths = [max(len(str(x)) for x in col) for col in zip(header, *lines)]

    def fmt(row):
        return "  ".join(str(c).ljust(w) for c, w in zip(row, widths)).rstrip()

    out = [fmt(header), fmt(["-" * w for w in widths])]
    prev = None
    for row in lines:
        shown = list(row)
        if row[0] == prev:
            shown[0] = ""
        prev = row[0]
        out.append(fmt(shown))
    return "\n".join(out)


_CONFIG_ALIASES = {
    "dataset": "datasets",
    "model": "models",
    "pop": "population_size",
    "lr": "learning_rate",
    "norm_scope": "normalization_scope",
    "jobs": "n_jobs",
}
_LIST_KEYS = {"datasets", "models"}
_INT_KEYS = {"folds", "epochs", "population_size", "seed", "repeats", "n_jobs"}
_FLOAT_KEYS = {"learning_rate", "weight_low", "weight_high"}


def read_config_file(path) -> dict:
    """Parse a ``key = value`` config file into ExperimentConfig keyword arguments.

    Blank lines and ``#`` comments are ignored. Keys are ExperimentConfig
    field names (dashes allowed) or the CLI short forms ``dataset``,
    ``model``, ``pop``, ``lr``, ``norm_scope``, ``jobs``. ``datasets`` and
    ``models`` take comma-separated lists; ``bounds = LO:HI`` sets both
    weight bounds. ``out`` is returned as-is for the CLI.
    """
    out: dict = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        key = _CONFIG_ALIASES.get(key, key)
        try:
            if key == "bounds":
                out["weight_low"], out["weight_high"] = parse_bounds(value)
            elif key in _LIST_KEYS:
                out[key] = [v.strip() for v in value.split(",") if v.strip()]
            elif key in _INT_KEYS:
                out[key] = int(value)
            elif key in _FLOAT_KEYS:
                out[key] = float(value)
            elif key in ("normalization_scope", "a_schedule", "exploration", "out"):
                out[key] = value
            else:
                raise ValueError(f"unknown key {key!r}")
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return out


def parse_bounds(text: str):
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise ValueError(f"bounds must look like LO:HI, got {text!r}") from None
    if not lo < hi:
        raise ValueError(f"bounds need LO < HI, got {text!r}")
    return lo, hi
