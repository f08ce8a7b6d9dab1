"""Attention reweighting of boosting iterations with trainable mixing weights.

Each fitted tree t supplies a key A_t(x) (mean training feature vector of
x's leaf) and a value B_t(x) (mean rescaled prediction of that leaf). A
query x attends over iterations with

    alpha_t = (1 - epsilon) * D_t(x, delta) + epsilon * w_t,

where D is a discounted softmax of squared distances to the keys and w is a
probability vector trained by simplex-constrained least squares. The
prediction is ``h0 + sum_t alpha_t * B_t(x)``; with epsilon=1 and uniform w
it collapses to the plain boosted model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .boosting import GBMModel
from .data import DataMatrix
from .simplex_qp import SimplexQP, SolverConfig, solve

__all__ = [
    "AttentionModel",
    "AttentionFeatures",
    "SOFTMAX_SIGNS",
    "compute_B",
    "compute_D",
    "attention_weights",
    "predict_attention",
    "assemble_qp",
    "assemble_qp_from_features",
    "fit_attention",
    "attention_features",
    "rescaled_predictions",
    "squared_distances",
    "discounted_softmax",
]

# "negated" scores closer keys higher (Gaussian-kernel reading); "literal"
# keeps the displayed sign, which favours more distant keys.
SOFTMAX_SIGNS = ("negated", "literal")


def _check_unit_interval(value: float, name: str) -> float:
    value = float(value)
    if not (0.0 <= value <= 1.0):
        raise ValueError(f"{name} must be in [0, 1], got {value}")
    return value


def _check_sign(softmax_sign: str) -> str:
    if softmax_sign not in SOFTMAX_SIGNS:
        raise ValueError(
            f"softmax_sign must be one of {SOFTMAX_SIGNS}, got {softmax_sign!r}"
        )
    return softmax_sign


def _standardizer(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    loc = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0.0] = 1.0
    return loc, scale


def rescaled_predictions(model: GBMModel, X: np.ndarray) -> np.ndarray:
    """n x T matrix of per-iteration rescaled predictions B_t(x_s)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    T = model.iterations
    out = np.empty((X.shape[0], T))
    for t in range(T):
        out[:, t] = model.rescaled_pred_many(t + 1, X)
    return out


def squared_distances(
    model: GBMModel,
    X: np.ndarray,
    loc: Optional[np.ndarray] = None,
    scale: Optional[np.ndarray] = None,
) -> np.ndarray:
    """n x T matrix of ||x_s - A_t(x_s)||^2 against the stored leaf keys."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if loc is not None:
        X = (X - loc) / scale
    out = np.empty((X.shape[0], model.iterations))
    for t, tree in enumerate(model.trees):
        keys = tree.leaf_keys(X)
        if loc is not None:
            keys = (keys - loc) / scale
        diff = X - keys
        out[:, t] = (diff * diff).sum(axis=1)
    return out


def discounted_softmax(
    dist: np.ndarray, delta: float, softmax_sign: str = "negated"
) -> np.ndarray:
    """Row-wise softmax of the discounted distance scores.

    Scores are ``-(delta**t) * d_t / 2`` for t = 1..T ("negated"), or the
    same magnitude with positive sign ("literal").
    """
    _check_unit_interval(delta, "delta")
    _check_sign(softmax_sign)
    dist = np.atleast_2d(np.asarray(dist, dtype=np.float64))
    T = dist.shape[1]
    if T == 0:
        return dist.copy()
    powers = delta ** np.arange(1, T + 1)
    scores = 0.5 * dist * powers
    if softmax_sign == "negated":
        scores = -scores
    scores -= scores.max(axis=1, keepdims=True)
    e = np.exp(scores)
    return e / e.sum(axis=1, keepdims=True)


def compute_B(model: GBMModel, train: DataMatrix, x: np.ndarray, t: int) -> float:
    """Leaf value B_t(x): mean rescaled prediction over the training rows
    sharing x's leaf in tree t (1-based).

    Recomputed from the training data by routing, independently of the
    stored leaf statistics; equals ``model.rescaled_pred(t, x)`` because the
    rescaled tree is constant on each leaf.
    """
    model._check_t(t)
    tree = model.trees[t - 1]
    x = np.asarray(x, dtype=np.float64).ravel()
    leaf = tree.apply(x[None, :])[0]
    members = tree.apply(train.features) == leaf
    if not members.any():
        raise ValueError("no training instances share the query's leaf")
    return float(model.rescaled_pred_many(t, train.features[members]).mean())


def compute_D(
    model: GBMModel,
    train: DataMatrix,
    x: np.ndarray,
    delta: float,
    softmax_sign: str = "negated",
    loc: Optional[np.ndarray] = None,
    scale: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Discounted softmax scores D_t(x) for t = 1..T.

    Keys A_t(x) are recomputed as the mean training feature vector of x's
    leaf in tree t, independently of the stored leaf keys.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    T = model.iterations
    dist = np.empty((1, T))
    xq = x if loc is None else (x - loc) / scale
    for t, tree in enumerate(model.trees):
        leaf = tree.apply(x[None, :])[0]
        members = tree.apply(train.features) == leaf
        key = train.features[members].mean(axis=0)
        if loc is not None:
            key = (key - loc) / scale
        diff = xq - key
        dist[0, t] = float(diff @ diff)
    return discounted_softmax(dist, delta, softmax_sign)[0]


def attention_weights(D_row: np.ndarray, w: np.ndarray, epsilon: float) -> np.ndarray:
    """Contaminated mixture (1 - epsilon) * D + epsilon * w."""
    epsilon = _check_unit_interval(epsilon, "epsilon")
    D_row = np.asarray(D_row, dtype=np.float64).ravel()
    w = np.asarray(w, dtype=np.float64).ravel()
    if D_row.shape != w.shape:
        raise ValueError(f"shape mismatch: D {D_row.shape} vs w {w.shape}")
    for name, vec in (("D_row", D_row), ("w", w)):
        if (vec < -1e-9).any() or abs(vec.sum() - 1.0) > 1e-6:
            raise ValueError(f"{name} is not on the probability simplex")
    return (1.0 - epsilon) * D_row + epsilon * w


@dataclass
class AttentionModel:
    """A boosted base model plus trained attention parameters."""

    base: GBMModel
    w: np.ndarray
    epsilon: float
    delta: float
    softmax_sign: str = "negated"
    feature_loc: Optional[np.ndarray] = None
    feature_scale: Optional[np.ndarray] = None
    qp_degenerate: bool = False

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64).ravel()
        if self.w.shape[0] != self.base.iterations:
            raise ValueError(
                f"w has length {self.w.shape[0]}, expected {self.base.iterations}"
            )
        if self.w.shape[0] > 0:
            if (self.w < -1e-9).any() or abs(self.w.sum() - 1.0) > 1e-9 * max(
                1, self.w.shape[0]
            ):
                raise ValueError("w is not on the probability simplex")
        _check_unit_interval(self.epsilon, "epsilon")
        _check_unit_interval(self.delta, "delta")
        _check_sign(self.softmax_sign)

    @property
    def iterations(self) -> int:
        return self.base.iterations

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if self.iterations == 0:
            return np.full(X.shape[0], self.base.h0)
        B = rescaled_predictions(self.base, X)
        dist = squared_distances(self.base, X, self.feature_loc, self.feature_scale)
        D = discounted_softmax(dist, self.delta, self.softmax_sign)
        alpha = (1.0 - self.epsilon) * D + self.epsilon * self.w
        return self.base.h0 + (alpha * B).sum(axis=1)

    def predict(self, x: np.ndarray) -> float:
        return float(self.predict_many(np.asarray(x, dtype=np.float64)[None, :])[0])

    def to_dict(self) -> dict:
        return {
            "base": self.base.to_dict(),
            "w": [float(v) for v in self.w],
            "epsilon": self.epsilon,
            "delta": self.delta,
            "softmax_sign": self.softmax_sign,
            "feature_loc": None
            if self.feature_loc is None
            else [float(v) for v in self.feature_loc],
            "feature_scale": None
            if self.feature_scale is None
            else [float(v) for v in self.feature_scale],
            "qp_degenerate": self.qp_degenerate,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "AttentionModel":
        loc = payload.get("feature_loc")
        scale = payload.get("feature_scale")
        return cls(
            base=GBMModel.from_dict(payload["base"]),
            w=np.asarray(payload["w"], dtype=np.float64),
            epsilon=float(payload["epsilon"]),
            delta=float(payload["delta"]),
            softmax_sign=payload.get("softmax_sign", "negated"),
            feature_loc=None if loc is None else np.asarray(loc, dtype=np.float64),
            feature_scale=None if scale is None else np.asarray(scale, dtype=np.float64),
            qp_degenerate=bool(payload.get("qp_degenerate", False)),
        )


def predict_attention(amodel: AttentionModel, train: DataMatrix, x: np.ndarray) -> float:
    """Attention prediction h0 + sum_t alpha_t * B_t(x).

    ``train`` must be the data the base model was fitted on; it feeds the
    definitional key/value recomputation rather than the stored leaf stats.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    base = amodel.base
    if base.iterations == 0:
        return float(base.h0)
    D = compute_D(
        base,
        train,
        x,
        amodel.delta,
        amodel.softmax_sign,
        amodel.feature_loc,
        amodel.feature_scale,
    )
    alpha = attention_weights(D, amodel.w, amodel.epsilon)
    B = np.array(
        [compute_B(base, train, x, t) for t in range(1, base.iterations + 1)]
    )
    return float(base.h0 + alpha @ B)


@dataclass(frozen=True)
class AttentionFeatures:
    """Per-instance softmax scores, leaf values and the constant offset."""

    D: np.ndarray
    B: np.ndarray
    h0_preds: np.ndarray


def attention_features(
    model: GBMModel,
    X: np.ndarray,
    delta: float,
    softmax_sign: str = "negated",
    loc: Optional[np.ndarray] = None,
    scale: Optional[np.ndarray] = None,
) -> AttentionFeatures:
    """Batched D and B matrices for the rows of X."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    B = rescaled_predictions(model, X)
    dist = squared_distances(model, X, loc, scale)
    D = discounted_softmax(dist, delta, softmax_sign)
    return AttentionFeatures(D=D, B=B, h0_preds=np.full(X.shape[0], model.h0))


def assemble_qp_from_features(
    B: np.ndarray, D: np.ndarray, targets: np.ndarray, h0: float, epsilon: float
) -> SimplexQP:
    """QP pieces from precomputed feature matrices.

    With M[s, t] = epsilon * B_t(x_s) and
    r[s] = y_s - h0 - (1 - epsilon) * sum_t D_t(x_s) * B_t(x_s),
    the objective equals ||r - M w||^2 for every simplex w.
    """
    epsilon = _check_unit_interval(epsilon, "epsilon")
    M = epsilon * B
    r = targets - h0 - (1.0 - epsilon) * (D * B).sum(axis=1)
    return SimplexQP(M=M, r=r)


def assemble_qp(
    model: GBMModel,
    train_fit: DataMatrix,
    epsilon: float,
    delta: float,
    softmax_sign: str = "negated",
    loc: Optional[np.ndarray] = None,
    scale: Optional[np.ndarray] = None,
) -> SimplexQP:
    """Linearize the attention training objective in w."""
    feats = attention_features(model, train_fit.features, delta, softmax_sign, loc, scale)
    return assemble_qp_from_features(
        feats.B, feats.D, train_fit.targets, model.h0, epsilon
    )


def fit_attention(
    model: GBMModel,
    data: DataMatrix,
    epsilon: float,
    delta: float,
    solver_config: SolverConfig = SolverConfig(),
    softmax_sign: str = "negated",
    standardize: bool = False,
) -> AttentionModel:
    """Train the mixing weights w on ``data`` at the given (epsilon, delta).

    epsilon=0 makes the objective constant in w; the uniform vector is
    returned and flagged via ``qp_degenerate``.
    """
    epsilon = _check_unit_interval(epsilon, "epsilon")
    _check_unit_interval(delta, "delta")
    _check_sign(softmax_sign)
    loc = scale = None
    if standardize:
        loc, scale = _standardizer(data.features)
    T = model.iterations
    if T == 0:
        w = np.empty(0)
        degenerate = True
    elif epsilon == 0.0:
        w = np.full(T, 1.0 / T)
        degenerate = True
    else:
        qp = assemble_qp(model, data, epsilon, delta, softmax_sign, loc, scale)
        w = solve(qp, solver_config)
        degenerate = False
    return AttentionModel(
        base=model,
        w=w,
        epsilon=epsilon,
        delta=delta,
        softmax_sign=softmax_sign,
        feature_loc=loc,
        feature_scale=scale,
        qp_degenerate=degenerate,
    )
