"""Command-line interface: generate data, benchmark, grid-search, train, predict."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .attention import AttentionModel, fit_attention
from .benchmark import (
    DEFAULT_DELTA_GRID,
    DEFAULT_EPSILON_GRID,
    BASE_LEARNERS,
    DatasetSpec,
    ExperimentConfig,
    GENERATORS,
    emit_report,
    grid_search,
    run_experiment,
)
from .boosting import GBMConfig, GBMModel, fit_gbm
from .data import DataMatrix, load_csv
from .tree import TreeConfig

__all__ = ["main", "build_parser"]


def _write_csv(data: DataMatrix, path: Path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{j + 1}" for j in range(data.m)] + ["target"])
        for i in range(data.n):
            writer.writerow(
                [repr(float(v)) for v in data.features[i]] + [repr(float(data.targets[i]))]
            )


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip() != ""]


def _dataset_spec_from_args(args) -> DatasetSpec:
    if getattr(args, "csv", None):
        if args.target_column is None:
            raise SystemExit("--target-column is required with --csv")
        target = args.target_column
        if isinstance(target, str) and target.lstrip("-").isdigit():
            target = int(target)
        return DatasetSpec(
            name=Path(args.csv).stem,
            path=args.csv,
            target_column=target,
            has_header=not args.no_header,
        )
    return DatasetSpec(name=args.dataset, n=args.n, noise_sd=args.noise)


def _add_dataset_args(parser: argparse.ArgumentParser, require: bool = True):
    group = parser.add_mutually_exclusive_group(required=require)
    group.add_argument("--dataset", choices=sorted(GENERATORS), help="synthetic dataset")
    group.add_argument("--csv", help="path to a CSV dataset")
    parser.add_argument("--target-column", help="target column name or index (with --csv)")
    parser.add_argument(
        "--no-header", action="store_true", help="the CSV has no header row"
    )
    parser.add_argument("--n", type=int, default=100, help="synthetic sample count")
    parser.add_argument(
        "--noise", type=float, default=None, help="noise level (generator default if omitted)"
    )


def _cmd_generate(args) -> int:
    spec = DatasetSpec(name=args.dataset, n=args.n, noise_sd=args.noise)
    data = spec.load(args.seed)
    _write_csv(data, Path(args.out))
    print(f"wrote {data.n} x {data.m} dataset to {args.out}")
    return 0


def _cmd_benchmark(args) -> int:
    config = ExperimentConfig.from_json_file(args.config)
    out_dir = Path(os.environ.get("AGBOOST_OUT_DIR", args.out_dir))
    out_dir.mkdir(parents=True, exist_ok=True)
    report = run_experiment(config)
    paths = [
        emit_report(report, "json", out_dir / "report.json"),
        emit_report(report, "markdown", out_dir / "report.md"),
        emit_report(report, "csv", out_dir / "report.csv"),
    ]
    print((out_dir / "report.md").read_text())
    print("reports: " + ", ".join(str(p) for p in paths))
    return 0


def _cmd_gridsearch(args) -> int:
    spec = _dataset_spec_from_args(args)
    config = ExperimentConfig(
        datasets=(spec,),
        base_learner=args.base_learner,
        iterations=args.iterations,
        repetitions=args.repetitions,
        min_samples_leaf=args.min_samples_leaf,
        epsilon_grid=tuple(args.epsilon_grid),
        delta_grid=tuple(args.delta_grid),
        seed=args.seed,
        models=("gbm", "agboost"),
    )
    mean_r2 = grid_search(config, spec)
    lines = ["epsilon," + ",".join(repr(float(d)) for d in config.delta_grid)]
    for i, eps in enumerate(config.epsilon_grid):
        lines.append(
            repr(float(eps)) + "," + ",".join(repr(float(v)) for v in mean_r2[i])
        )
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote grid to {args.out}")
    else:
        print(text, end="")
    return 0


def _fit_from_args(args, data: DataMatrix):
    tree_cfg = TreeConfig(
        min_samples_leaf=args.min_samples_leaf,
        split_mode=BASE_LEARNERS[args.base_learner],
        seed=args.seed,
    )
    gbm = fit_gbm(data, GBMConfig(iterations=args.iterations, tree=tree_cfg))
    if args.model == "gbm":
        return {"kind": "gbm", "model": gbm.to_dict()}
    if args.model == "nonparam":
        amodel = AttentionModel(
            base=gbm,
            w=np.full(gbm.iterations, 1.0 / max(gbm.iterations, 1)),
            epsilon=args.epsilon,
            delta=args.delta,
            qp_degenerate=True,
        )
    else:
        amodel = fit_attention(gbm, data, args.epsilon, args.delta)
    return {"kind": "attention", "model": amodel.to_dict()}


def _cmd_train(args) -> int:
    spec = _dataset_spec_from_args(args)
    data = spec.load(args.seed)
    payload = _fit_from_args(args, data)
    Path(args.out).write_text(json.dumps(payload, sort_keys=True) + "\n")
    print(f"trained {args.model} on {data.n} instances; model written to {args.out}")
    return 0


def _cmd_predict(args) -> int:
    payload = json.loads(Path(args.model_file).read_text())
    if payload["kind"] == "gbm":
        model = GBMModel.from_dict(payload["model"])
        predict_many = model.predict_many
    else:
        model = AttentionModel.from_dict(payload["model"])
        predict_many = model.predict_many
    if args.target_column is not None:
        target = args.target_column
        if isinstance(target, str) and target.lstrip("-").isdigit():
            target = int(target)
        data = load_csv(args.csv, target, has_header=not args.no_header)
        X = data.features
        preds = predict_many(X)
        from .stats import mae, r2

        print(f"r2 = {r2(data.targets, preds):.6f}, mae = {mae(data.targets, preds):.6f}")
    else:
        # Features-only file: reuse the loader, then put column 0 back in front.
        data = load_csv(args.csv, 0, has_header=not args.no_header)
        X = np.column_stack([data.targets, data.features])
        preds = predict_many(X)
    out = Path(args.out)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["prediction"])
        for v in preds:
            writer.writerow([repr(float(v))])
    print(f"wrote {preds.shape[0]} predictions to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="agboost",
        description="Attention-weighted gradient boosting: data, benchmarks, models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset to CSV")
    p.add_argument("dataset", choices=sorted(GENERATORS))
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--noise", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("benchmark", help="run a full experiment from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument(
        "--out-dir", default=".", help="report directory (env AGBOOST_OUT_DIR overrides)"
    )
    p.set_defaults(func=_cmd_benchmark)

    p = sub.add_parser("gridsearch", help="mean R^2 heat map over the (epsilon, delta) grid")
    _add_dataset_args(p)
    p.add_argument("--base-learner", choices=sorted(BASE_LEARNERS), default="cart")
    p.add_argument("--iterations", type=int, default=200)
    p.add_argument("--repetitions", type=int, default=10)
    p.add_argument("--min-samples-leaf", type=int, default=10)
    p.add_argument("--epsilon-grid", type=_float_list, default=list(DEFAULT_EPSILON_GRID))
    p.add_argument("--delta-grid", type=_float_list, default=list(DEFAULT_DELTA_GRID))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_gridsearch)

    p = sub.add_parser("train", help="fit one model on a dataset and save it as JSON")
    _add_dataset_args(p)
    p.add_argument("--model", choices=("gbm", "nonparam", "agboost"), default="agboost")
    p.add_argument("--base-learner", choices=sorted(BASE_LEARNERS), default="cart")
    p.add_argument("--iterations", type=int, default=200)
    p.add_argument("--min-samples-leaf", type=int, default=10)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="score a CSV with a saved model")
    p.add_argument("--model-file", required=True)
    p.add_argument("--csv", required=True)
    p.add_argument("--target-column", default=None)
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_predict)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary maps errors to exit codes
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
