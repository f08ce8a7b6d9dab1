"""Stage-wise gradient boosting for squared error with regression-tree bases.

The model is ``g(x) = h0 + sum_t nu * gamma_t * h_t(x)`` where h0 is the
training-target mean, each tree h_t is fitted to the current residuals
``y - g(x)`` and gamma_t comes from the closed-form least-squares line
search. ``rescaled_pred`` exposes the per-iteration contribution scaled by
gamma_t * T, so that averaging the rescaled trees with uniform weights 1/T
reproduces the plain model exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import DataMatrix
from .tree import DecisionTree, TreeConfig, fit_tree

__all__ = ["GBMConfig", "GBMModel", "fit_gbm", "line_search_gamma"]


@dataclass(frozen=True)
class GBMConfig:
    iterations: int = 200
    tree: TreeConfig = field(default_factory=TreeConfig)
    shrinkage: float = 1.0

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if not (0.0 < self.shrinkage <= 1.0):
            raise ValueError("shrinkage must be in (0, 1]")


def line_search_gamma(residuals: np.ndarray, tree_preds: np.ndarray) -> float:
    """Closed-form minimizer of sum((r - gamma*h)^2): sum(r*h) / sum(h^2).

    Returns 0 when the tree predicts identically zero.
    """
    r = np.asarray(residuals, dtype=np.float64)
    h = np.asarray(tree_preds, dtype=np.float64)
    if r.shape != h.shape:
        raise ValueError(f"length mismatch: {r.shape} vs {h.shape}")
    denom = float(h @ h)
    if denom == 0.0:
        return 0.0
    return float(r @ h) / denom


@dataclass
class GBMModel:
    """Fitted boosting ensemble: constant h0 plus T trees with step sizes."""

    h0: float
    trees: list[DecisionTree]
    gammas: np.ndarray
    shrinkage: float = 1.0

    def __post_init__(self):
        self.gammas = np.asarray(self.gammas, dtype=np.float64)
        if len(self.trees) != self.gammas.shape[0]:
            raise ValueError("trees and gammas must have equal length")

    @property
    def iterations(self) -> int:
        return len(self.trees)

    @property
    def n_features(self) -> int:
        return self.trees[0].n_features if self.trees else -1

    def predict(self, x: np.ndarray) -> float:
        out = self.h0
        for tree, gamma in zip(self.trees, self.gammas):
            out += self.shrinkage * gamma * tree.predict(x)
        return float(out)

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = np.full(X.shape[0], self.h0)
        for tree, gamma in zip(self.trees, self.gammas):
            out += self.shrinkage * gamma * tree.predict_many(X)
        return out

    def _check_t(self, t: int):
        if not (1 <= t <= self.iterations):
            raise ValueError(
                f"iteration index t={t} out of range 1..{self.iterations}"
            )

    def rescaled_pred(self, t: int, x: np.ndarray) -> float:
        """Contribution of iteration t (1-based) scaled by gamma_t * T."""
        self._check_t(t)
        gamma = self.gammas[t - 1]
        return float(
            self.shrinkage * gamma * self.iterations * self.trees[t - 1].predict(x)
        )

    def rescaled_pred_many(self, t: int, X: np.ndarray) -> np.ndarray:
        self._check_t(t)
        gamma = self.gammas[t - 1]
        return self.shrinkage * gamma * self.iterations * self.trees[t - 1].predict_many(X)

    def to_dict(self) -> dict:
        return {
            "h0": self.h0,
            "shrinkage": self.shrinkage,
            "gammas": [float(g) for g in self.gammas],
            "trees": [tree.to_dict() for tree in self.trees],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "GBMModel":
        return cls(
            h0=float(payload["h0"]),
            trees=[DecisionTree.from_dict(t) for t in payload["trees"]],
            gammas=np.asarray(payload["gammas"], dtype=np.float64),
            shrinkage=float(payload.get("shrinkage", 1.0)),
        )


def fit_gbm(train: DataMatrix, config: GBMConfig = GBMConfig()) -> GBMModel:
    """Fit the boosting ensemble on a training DataMatrix.

    Residuals are ``y - g(x)`` (the squared-loss negative gradient up to the
    factor 2 absorbed by the line search). ExtraRandom trees get per-iteration
    seeds ``config.tree.seed + t`` so iterations draw distinct thresholds.
    """
    X = train.features
    y = train.targets
    h0 = float(y.mean())
    preds = np.full(train.n, h0)
    trees: list[DecisionTree] = []
    gammas = np.empty(config.iterations)
    tree_cfg = config.tree
    for t in range(config.iterations):
        if tree_cfg.split_mode == "extra_random":
            cfg_t = TreeConfig(
                min_samples_leaf=tree_cfg.min_samples_leaf,
                max_depth=tree_cfg.max_depth,
                split_mode=tree_cfg.split_mode,
                seed=tree_cfg.seed + t,
            )
        else:
            cfg_t = tree_cfg
        residuals = y - preds
        tree = fit_tree(X, residuals, cfg_t)
        h = tree.predict_many(X)
        gamma = line_search_gamma(residuals, h)
        preds += config.shrinkage * gamma * h
        trees.append(tree)
        gammas[t] = gamma
    return GBMModel(h0=h0, trees=trees, gammas=gammas, shrinkage=config.shrinkage)
