"""Gradient boosting regression with trainable attention over iterations."""

from .attention import (
    AttentionFeatures,
    AttentionModel,
    assemble_qp,
    attention_features,
    attention_weights,
    compute_B,
    compute_D,
    fit_attention,
    predict_attention,
)
from .benchmark import (
    BenchmarkReport,
    DatasetResult,
    DatasetSpec,
    ExperimentConfig,
    ExperimentError,
    emit_report,
    grid_search,
    run_dataset,
    run_experiment,
)
from .boosting import GBMConfig, GBMModel, fit_gbm, line_search_gamma
from .data import (
    DataMatrix,
    DatasetError,
    SplitIndices,
    gen_friedman1,
    gen_friedman2,
    gen_friedman3,
    gen_regression,
    gen_sparse_uncorrelated,
    load_csv,
    load_manifest,
    split,
    train_test_split,
)
from .simplex_qp import (
    QPNonConvergence,
    SimplexQP,
    SolverConfig,
    objective,
    project_simplex,
    solve,
)
from .stats import MetricPair, TTestResult, mae, paired_t_test, r2
from .tree import DecisionTree, TreeConfig, TreeFitError, fit_tree

__version__ = "0.1.0"

__all__ = [
    "AttentionFeatures",
    "AttentionModel",
    "BenchmarkReport",
    "DataMatrix",
    "DatasetError",
    "DatasetResult",
    "DatasetSpec",
    "DecisionTree",
    "ExperimentConfig",
    "ExperimentError",
    "GBMConfig",
    "GBMModel",
    "MetricPair",
    "QPNonConvergence",
    "SimplexQP",
    "SolverConfig",
    "SplitIndices",
    "TTestResult",
    "TreeConfig",
    "TreeFitError",
    "assemble_qp",
    "attention_features",
    "attention_weights",
    "compute_B",
    "compute_D",
    "emit_report",
    "fit_attention",
    "fit_gbm",
    "fit_tree",
    "gen_friedman1",
    "gen_friedman2",
    "gen_friedman3",
    "gen_regression",
    "gen_sparse_uncorrelated",
    "grid_search",
    "line_search_gamma",
    "load_csv",
    "load_manifest",
    "mae",
    "objective",
    "paired_t_test",
    "predict_attention",
    "project_simplex",
    "r2",
    "run_dataset",
    "run_experiment",
    "solve",
    "split",
    "train_test_split",
]
