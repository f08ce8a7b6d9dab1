"""Cross-validated benchmark harness with (epsilon, delta) grid search.

One experiment covers one or more datasets. Per repetition the data is split
4:1, the boosted base model is fitted once on the training part, and the
attention weights are refitted for every (epsilon, delta) grid point (the
trees do not depend on either parameter, only the softmax scores and the QP
do). The grid point maximizing the attention model's mean test R^2 is
selected per dataset, mirroring a single reported optimum.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import data as datamod
from .attention import (
    assemble_qp_from_features,
    discounted_softmax,
    rescaled_predictions,
    squared_distances,
    SOFTMAX_SIGNS,
)
from .boosting import GBMConfig, fit_gbm
from .data import DataMatrix, ManifestEntry, load_csv, load_manifest, split
from .simplex_qp import SolverConfig, solve
from .stats import MetricPair, TTestResult, mae, paired_t_test, r2
from .tree import TreeConfig

__all__ = [
    "DEFAULT_EPSILON_GRID",
    "DEFAULT_DELTA_GRID",
    "MODEL_NAMES",
    "GENERATORS",
    "DatasetSpec",
    "ExperimentConfig",
    "DatasetResult",
    "BenchmarkReport",
    "ExperimentError",
    "run_experiment",
    "run_dataset",
    "grid_search",
    "emit_report",
]

logger = logging.getLogger("agboost.benchmark")

DEFAULT_EPSILON_GRID = tuple(k / 9.0 for k in range(10))
DEFAULT_DELTA_GRID = (0.01, 0.1, 0.5, 0.9, 1.0)
MODEL_NAMES = ("gbm", "nonparam", "agboost")
BASE_LEARNERS = {"cart": "exact", "ert": "extra_random"}

GENERATORS = {
    "friedman1": lambda spec, seed: datamod.gen_friedman1(
        spec.n, 1.0 if spec.noise_sd is None else spec.noise_sd, seed
    ),
    "friedman2": lambda spec, seed: datamod.gen_friedman2(spec.n, spec.noise_sd, seed),
    "friedman3": lambda spec, seed: datamod.gen_friedman3(spec.n, spec.noise_sd, seed),
    "regression": lambda spec, seed: datamod.gen_regression(
        spec.n,
        spec.n_features,
        spec.n_informative,
        0.0 if spec.noise_sd is None else spec.noise_sd,
        seed,
    ),
    "sparse": lambda spec, seed: datamod.gen_sparse_uncorrelated(
        spec.n, 1.0 if spec.noise_sd is None else spec.noise_sd, seed
    ),
}


class ExperimentError(RuntimeError):
    """A benchmark run failed (bad config or failed repetitions)."""


@dataclass(frozen=True)
class DatasetSpec:
    """One dataset: either a named synthetic generator or an external CSV."""

    name: str
    generator: Optional[str] = None
    n: int = 100
    noise_sd: Optional[float] = None
    path: Optional[str] = None
    target_column: Union[str, int, None] = None
    has_header: bool = True
    delimiter: str = ","
    n_features: int = 100
    n_informative: int = 10

    def __post_init__(self):
        if self.generator is None and self.path is None:
            if self.name in GENERATORS:
                object.__setattr__(self, "generator", self.name)
            else:
                raise ExperimentError(
                    f"dataset {self.name!r}: no generator of that name and no CSV path"
                )
        if self.generator is not None and self.generator not in GENERATORS:
            raise ExperimentError(f"unknown generator {self.generator!r}")
        if self.path is not None and self.target_column is None:
            raise ExperimentError(f"dataset {self.name!r}: CSV needs target_column")

    def load(self, seed: int) -> DataMatrix:
        if self.path is not None:
            return load_csv(self.path, self.target_column, self.has_header, self.delimiter)
        return GENERATORS[self.generator](self, seed)

    def to_dict(self) -> dict:
        out: dict = {"name": self.name}
        if self.path is not None:
            out.update(
                path=str(self.path),
                target_column=self.target_column,
                has_header=self.has_header,
                delimiter=self.delimiter,
            )
        else:
            out.update(generator=self.generator, n=self.n, noise_sd=self.noise_sd)
            if self.generator == "regression":
                out.update(n_features=self.n_features, n_informative=self.n_informative)
        return out

    @classmethod
    def from_dict(cls, payload: dict, base_dir: Optional[Path] = None) -> "DatasetSpec":
        payload = dict(payload)
        manifest = payload.pop("manifest", None)
        if manifest is not None:
            manifest_path = Path(manifest)
            if base_dir is not None and not manifest_path.is_absolute():
                manifest_path = base_dir / manifest_path
            entries = load_manifest(manifest_path)
            name = payload["name"]
            if name not in entries:
                raise ExperimentError(f"dataset {name!r} not in manifest {manifest_path}")
            entry = entries[name]
            return cls.from_manifest_entry(entry)
        path = payload.get("path")
        if path is not None and base_dir is not None and not Path(path).is_absolute():
            payload["path"] = str(base_dir / path)
        known = {
            "name",
            "generator",
            "n",
            "noise_sd",
            "path",
            "target_column",
            "has_header",
            "delimiter",
            "n_features",
            "n_informative",
        }
        unknown = set(payload) - known
        if unknown:
            raise ExperimentError(f"unknown dataset keys: {sorted(unknown)}")
        return cls(**payload)

    @classmethod
    def from_manifest_entry(cls, entry: ManifestEntry) -> "DatasetSpec":
        return cls(
            name=entry.name,
            path=str(entry.path),
            target_column=entry.target_column,
            has_header=entry.has_header,
            delimiter=entry.delimiter,
        )


@dataclass(frozen=True)
class ExperimentConfig:
    datasets: tuple[DatasetSpec, ...]
    base_learner: str = "cart"
    iterations: int = 200
    repetitions: int = 100
    min_samples_leaf: int = 10
    max_depth: Optional[int] = None
    shrinkage: float = 1.0
    epsilon_grid: tuple[float, ...] = DEFAULT_EPSILON_GRID
    delta_grid: tuple[float, ...] = DEFAULT_DELTA_GRID
    seed: int = 0
    models: tuple[str, ...] = MODEL_NAMES
    softmax_sign: str = "negated"
    standardize: bool = False
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        object.__setattr__(self, "datasets", tuple(self.datasets))
        object.__setattr__(self, "epsilon_grid", tuple(float(e) for e in self.epsilon_grid))
        object.__setattr__(self, "delta_grid", tuple(float(d) for d in self.delta_grid))
        object.__setattr__(self, "models", tuple(self.models))
        if not self.datasets:
            raise ExperimentError("config needs at least one dataset")
        if self.base_learner not in BASE_LEARNERS:
            raise ExperimentError(
                f"base_learner must be one of {sorted(BASE_LEARNERS)}, got {self.base_learner!r}"
            )
        if self.iterations < 0:
            raise ExperimentError("iterations must be >= 0")
        if self.repetitions < 1:
            raise ExperimentError("repetitions must be >= 1")
        if not self.epsilon_grid or not self.delta_grid:
            raise ExperimentError("epsilon_grid and delta_grid must be nonempty")
        if any(not (0.0 <= e <= 1.0) for e in self.epsilon_grid):
            raise ExperimentError("epsilon grid values must lie in [0, 1]")
        if any(not (0.0 < d <= 1.0) for d in self.delta_grid):
            raise ExperimentError("delta grid values must lie in (0, 1]")
        if not self.models:
            raise ExperimentError("models must be a nonempty subset of " + str(MODEL_NAMES))
        unknown = set(self.models) - set(MODEL_NAMES)
        if unknown:
            raise ExperimentError(f"unknown models: {sorted(unknown)}")
        if self.softmax_sign not in SOFTMAX_SIGNS:
            raise ExperimentError(f"softmax_sign must be one of {SOFTMAX_SIGNS}")

    @property
    def tree_split_mode(self) -> str:
        return BASE_LEARNERS[self.base_learner]

    def to_dict(self) -> dict:
        return {
            "datasets": [spec.to_dict() for spec in self.datasets],
            "base_learner": self.base_learner,
            "iterations": self.iterations,
            "repetitions": self.repetitions,
            "min_samples_leaf": self.min_samples_leaf,
            "max_depth": self.max_depth,
            "shrinkage": self.shrinkage,
            "epsilon_grid": list(self.epsilon_grid),
            "delta_grid": list(self.delta_grid),
            "seed": self.seed,
            "models": list(self.models),
            "softmax_sign": self.softmax_sign,
            "standardize": self.standardize,
            "solver": {"tol": self.solver.tol, "max_iter": self.solver.max_iter},
        }

    @classmethod
    def from_dict(cls, payload: dict, base_dir: Optional[Path] = None) -> "ExperimentConfig":
        payload = dict(payload)
        raw_datasets = payload.pop("datasets", None)
        single = payload.pop("dataset", None)
        if raw_datasets is None:
            raw_datasets = [single] if single is not None else []
        elif single is not None:
            raise ExperimentError("config cannot set both 'dataset' and 'datasets'")
        datasets = tuple(
            DatasetSpec.from_dict(item, base_dir=base_dir) for item in raw_datasets
        )
        solver_raw = payload.pop("solver", None)
        solver = (
            SolverConfig(**solver_raw) if isinstance(solver_raw, dict) else SolverConfig()
        )
        known = {
            "base_learner",
            "iterations",
            "repetitions",
            "min_samples_leaf",
            "max_depth",
            "shrinkage",
            "epsilon_grid",
            "delta_grid",
            "seed",
            "models",
            "softmax_sign",
            "standardize",
        }
        unknown = set(payload) - known
        if unknown:
            raise ExperimentError(f"unknown config keys: {sorted(unknown)}")
        return cls(datasets=datasets, solver=solver, **payload)

    @classmethod
    def from_json_file(cls, path: Union[str, Path]) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise ExperimentError(f"config file not found: {path}")
        return cls.from_dict(json.loads(path.read_text()), base_dir=path.parent)


@dataclass(frozen=True)
class DatasetResult:
    """Selected grid point and per-model mean metrics for one dataset."""

    name: str
    repetitions: int
    metrics: dict[str, MetricPair]
    epsilon_opt: Optional[float] = None
    delta_opt: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "repetitions": self.repetitions,
            "epsilon_opt": self.epsilon_opt,
            "delta_opt": self.delta_opt,
            "metrics": {name: pair.to_dict() for name, pair in self.metrics.items()},
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "DatasetResult":
        return cls(
            name=payload["name"],
            repetitions=int(payload["repetitions"]),
            metrics={
                name: MetricPair.from_dict(raw)
                for name, raw in payload["metrics"].items()
            },
            epsilon_opt=payload.get("epsilon_opt"),
            delta_opt=payload.get("delta_opt"),
        )


@dataclass(frozen=True)
class BenchmarkReport:
    datasets: tuple[DatasetResult, ...]
    ttests: dict[str, TTestResult]
    models: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "datasets": [res.to_dict() for res in self.datasets],
            "ttests": {name: t.to_dict() for name, t in self.ttests.items()},
            "models": list(self.models),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "BenchmarkReport":
        return cls(
            datasets=tuple(DatasetResult.from_dict(d) for d in payload["datasets"]),
            ttests={
                name: TTestResult.from_dict(raw)
                for name, raw in payload["ttests"].items()
            },
            models=tuple(payload["models"]),
        )


@dataclass
class GridOutcome:
    """Per-repetition metrics over the whole (epsilon, delta) grid."""

    r2_gbm: np.ndarray
    mae_gbm: np.ndarray
    r2_att: dict[str, np.ndarray]
    mae_att: dict[str, np.ndarray]


def _attention_models(config: ExperimentConfig) -> list[str]:
    return [m for m in config.models if m in ("nonparam", "agboost")]


def _run_dataset_grids(config: ExperimentConfig, spec: DatasetSpec) -> GridOutcome:
    data = spec.load(config.seed)
    reps = config.repetitions
    n_eps = len(config.epsilon_grid)
    n_del = len(config.delta_grid)
    att_models = _attention_models(config)

    r2_gbm = np.full(reps, np.nan)
    mae_gbm = np.full(reps, np.nan)
    r2_att = {m: np.full((reps, n_eps, n_del), np.nan) for m in att_models}
    mae_att = {m: np.full((reps, n_eps, n_del), np.nan) for m in att_models}

    failures: list[str] = []
    for rep in range(reps):
        try:
            _run_repetition(
                config, data, rep, r2_gbm, mae_gbm, r2_att, mae_att, att_models
            )
        except Exception as exc:  # noqa: BLE001 - repetition isolation is the contract
            logger.error("dataset %s repetition %d failed: %r", spec.name, rep, exc)
            failures.append(f"repetition {rep}: {exc!r}")
    if failures:
        raise ExperimentError(
            f"dataset {spec.name!r}: {len(failures)} of {reps} repetitions failed: "
            + "; ".join(failures[:5])
        )
    return GridOutcome(r2_gbm=r2_gbm, mae_gbm=mae_gbm, r2_att=r2_att, mae_att=mae_att)


def _run_repetition(config, data, rep, r2_gbm, mae_gbm, r2_att, mae_att, att_models):
    idx = split(data.n, config.seed + rep)
    train = data.subset(idx.train_idx)
    test = data.subset(idx.test_idx)
    tree_cfg = TreeConfig(
        min_samples_leaf=config.min_samples_leaf,
        max_depth=config.max_depth,
        split_mode=config.tree_split_mode,
        seed=config.seed + rep,
    )
    model = fit_gbm(
        train,
        GBMConfig(iterations=config.iterations, tree=tree_cfg, shrinkage=config.shrinkage),
    )
    gbm_preds = model.predict_many(test.features)
    r2_gbm[rep] = r2(test.targets, gbm_preds)
    mae_gbm[rep] = mae(test.targets, gbm_preds)
    if not att_models:
        return

    T = model.iterations
    if T == 0:
        const = np.full(test.n, model.h0)
        for m in att_models:
            r2_att[m][rep, :, :] = r2(test.targets, const)
            mae_att[m][rep, :, :] = mae(test.targets, const)
        return

    loc = scale = None
    if config.standardize:
        loc = train.features.mean(axis=0)
        scale = train.features.std(axis=0)
        scale = np.where(scale == 0.0, 1.0, scale)

    B_tr = rescaled_predictions(model, train.features)
    B_te = rescaled_predictions(model, test.features)
    dist_tr = squared_distances(model, train.features, loc, scale)
    dist_te = squared_distances(model, test.features, loc, scale)
    uniform = np.full(T, 1.0 / T)

    for i_del, delta in enumerate(config.delta_grid):
        D_tr = discounted_softmax(dist_tr, delta, config.softmax_sign)
        D_te = discounted_softmax(dist_te, delta, config.softmax_sign)
        soft_te = (D_te * B_te).sum(axis=1)
        mean_te = B_te.mean(axis=1)
        for i_eps, eps in enumerate(config.epsilon_grid):
            if "nonparam" in att_models:
                preds = model.h0 + (1.0 - eps) * soft_te + eps * mean_te
                r2_att["nonparam"][rep, i_eps, i_del] = r2(test.targets, preds)
                mae_att["nonparam"][rep, i_eps, i_del] = mae(test.targets, preds)
            if "agboost" in att_models:
                if eps == 0.0:
                    w = uniform
                else:
                    qp = assemble_qp_from_features(
                        B_tr, D_tr, train.targets, model.h0, eps
                    )
                    w = solve(qp, config.solver)
                preds = model.h0 + (1.0 - eps) * soft_te + eps * (B_te @ w)
                r2_att["agboost"][rep, i_eps, i_del] = r2(test.targets, preds)
                mae_att["agboost"][rep, i_eps, i_del] = mae(test.targets, preds)


def _select_grid_point(config: ExperimentConfig, outcome: GridOutcome) -> tuple[int, int]:
    """Indices of the grid point maximizing the lead model's mean test R^2.

    The lead model is agboost when requested, else nonparam. Ties resolve to
    the earliest point in (epsilon, delta) scan order.
    """
    lead = "agboost" if "agboost" in outcome.r2_att else "nonparam"
    mean_r2 = outcome.r2_att[lead].mean(axis=0)
    flat = int(np.argmax(mean_r2))
    return flat // mean_r2.shape[1], flat % mean_r2.shape[1]


def run_dataset(config: ExperimentConfig, spec: DatasetSpec) -> DatasetResult:
    """Run all repetitions for one dataset and reduce to a DatasetResult."""
    outcome = _run_dataset_grids(config, spec)
    metrics: dict[str, MetricPair] = {}
    eps_opt = delta_opt = None
    if "gbm" in config.models:
        metrics["gbm"] = MetricPair(
            r2=float(outcome.r2_gbm.mean()), mae=float(outcome.mae_gbm.mean())
        )
    att_models = _attention_models(config)
    if att_models:
        i_eps, i_del = _select_grid_point(config, outcome)
        eps_opt = config.epsilon_grid[i_eps]
        delta_opt = config.delta_grid[i_del]
        for m in att_models:
            metrics[m] = MetricPair(
                r2=float(outcome.r2_att[m][:, i_eps, i_del].mean()),
                mae=float(outcome.mae_att[m][:, i_eps, i_del].mean()),
            )
    return DatasetResult(
        name=spec.name,
        repetitions=config.repetitions,
        metrics=metrics,
        epsilon_opt=eps_opt,
        delta_opt=delta_opt,
    )


def grid_search(config: ExperimentConfig, spec: DatasetSpec) -> np.ndarray:
    """Mean test R^2 of the lead attention model over the full grid.

    Returns a len(epsilon_grid) x len(delta_grid) matrix.
    """
    if not _attention_models(config):
        raise ExperimentError("grid search needs an attention model (nonparam/agboost)")
    outcome = _run_dataset_grids(config, spec)
    lead = "agboost" if "agboost" in outcome.r2_att else "nonparam"
    return outcome.r2_att[lead].mean(axis=0)


def run_experiment(config: ExperimentConfig) -> BenchmarkReport:
    """Run every dataset in the config and attach cross-dataset t-tests."""
    results = tuple(run_dataset(config, spec) for spec in config.datasets)
    ttests: dict[str, TTestResult] = {}
    if len(results) >= 2 and "agboost" in config.models:
        for other in ("gbm", "nonparam"):
            if other not in config.models:
                continue
            diffs = [
                res.metrics["agboost"].r2 - res.metrics[other].r2 for res in results
            ]
            ttests[f"agboost_vs_{other}"] = paired_t_test(diffs)
    return BenchmarkReport(datasets=results, ttests=ttests, models=config.models)


def _report_markdown(report: BenchmarkReport) -> str:
    models = [m for m in MODEL_NAMES if m in report.models]
    header = (
        ["Dataset", "eps_opt", "delta_opt"]
        + [f"R2 {m}" for m in models]
        + [f"MAE {m}" for m in models]
    )
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    for res in report.datasets:
        cells = [
            res.name,
            "-" if res.epsilon_opt is None else f"{res.epsilon_opt:.3f}",
            "-" if res.delta_opt is None else f"{res.delta_opt:.3f}",
        ]
        cells += [f"{res.metrics[m].r2:.3f}" for m in models]
        cells += [f"{res.metrics[m].mae:.3f}" for m in models]
        lines.append("| " + " | ".join(cells) + " |")
    for name, t in report.ttests.items():
        lines.append("")
        lines.append(
            f"t-test {name}: mean diff {t.mean_diff:.4f}, p = {t.p_value:.4f}, "
            f"95% CI [{t.ci95[0]:.4f}, {t.ci95[1]:.4f}]"
        )
    return "\n".join(lines) + "\n"


def _report_csv(report: BenchmarkReport) -> str:
    models = [m for m in MODEL_NAMES if m in report.models]
    header = ["dataset", "epsilon_opt", "delta_opt"]
    for m in models:
        header += [f"r2_{m}", f"mae_{m}"]
    rows = [",".join(header)]
    for res in report.datasets:
        cells = [
            res.name,
            "" if res.epsilon_opt is None else repr(res.epsilon_opt),
            "" if res.delta_opt is None else repr(res.delta_opt),
        ]
        for m in models:
            cells += [repr(res.metrics[m].r2), repr(res.metrics[m].mae)]
        rows.append(",".join(cells))
    return "\n".join(rows) + "\n"


REPORT_FORMATS = ("json", "markdown", "csv")


def emit_report(report: BenchmarkReport, fmt: str, path: Union[str, Path]) -> Path:
    """Serialize the report deterministically to the given path."""
    if fmt not in REPORT_FORMATS:
        raise ValueError(f"format must be one of {REPORT_FORMATS}, got {fmt!r}")
    if not report.datasets:
        raise ValueError("refusing to emit an empty report")
    if fmt == "json":
        text = json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    elif fmt == "markdown":
        text = _report_markdown(report)
    else:
        text = _report_csv(report)
    path = Path(path)
    path.write_text(text)
    return path
