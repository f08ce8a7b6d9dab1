"""Squared-error regression trees whose leaves carry attention statistics.

Each leaf stores the mean fitted target (its value), the mean feature vector
of the training rows routed to it (its attention key) and the routed-row
count. Split selection is either exact CART (all midpoints between
consecutive distinct sorted values per feature) or extremely randomized
(one uniform threshold per feature per node, best of those kept).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = ["TreeConfig", "DecisionTree", "TreeFitError", "fit_tree"]

SPLIT_MODES = ("exact", "extra_random")


class TreeFitError(ValueError):
    """Raised when a tree cannot be fitted under the given configuration."""


@dataclass(frozen=True)
class TreeConfig:
    min_samples_leaf: int = 10
    max_depth: Optional[int] = None
    split_mode: str = "exact"
    seed: int = 0

    def __post_init__(self):
        if self.min_samples_leaf < 1:
            raise TreeFitError("min_samples_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise TreeFitError("max_depth must be >= 0")
        if self.split_mode not in SPLIT_MODES:
            raise TreeFitError(
                f"split_mode must be one of {SPLIT_MODES}, got {self.split_mode!r}"
            )


@dataclass
class DecisionTree:
    """Fitted tree stored as a node arena of parallel arrays.

    ``feature[i] == -1`` marks node i as a leaf. Internal nodes route a query
    left iff ``x[feature] <= threshold``. ``value``/``key``/``count`` are the
    leaf statistics; internal entries of ``value`` and ``key`` are NaN.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    key: np.ndarray
    count: np.ndarray
    n_features: int

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def _check_dim(self, m: int):
        if m != self.n_features:
            raise ValueError(
                f"dimension mismatch: tree expects {self.n_features} features, got {m}"
            )

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf node index for every row of X."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        self._check_dim(X.shape[1])
        node = np.zeros(X.shape[0], dtype=np.intp)
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                return node
            rows = np.flatnonzero(active)
            cur = node[rows]
            go_left = X[rows, feat[rows]] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])

    def predict(self, x: np.ndarray) -> float:
        """Leaf value reached by routing a single m-vector."""
        x = np.asarray(x, dtype=np.float64).ravel()
        self._check_dim(x.shape[0])
        i = 0
        while self.feature[i] >= 0:
            if x[self.feature[i]] <= self.threshold[i]:
                i = self.left[i]
            else:
                i = self.right[i]
        return float(self.value[i])

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def leaf_key(self, x: np.ndarray) -> np.ndarray:
        """Attention key (mean training feature vector) of x's leaf."""
        x = np.asarray(x, dtype=np.float64).ravel()
        self._check_dim(x.shape[0])
        return self.key[self.apply(x[None, :])[0]].copy()

    def leaf_keys(self, X: np.ndarray) -> np.ndarray:
        return self.key[self.apply(X)]

    def to_dict(self) -> dict:
        """Debug serialization: explicit node list with child indices."""
        nodes = []
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                nodes.append(
                    {
                        "id": i,
                        "feature": int(self.feature[i]),
                        "threshold": float(self.threshold[i]),
                        "left": int(self.left[i]),
                        "right": int(self.right[i]),
                    }
                )
            else:
                nodes.append(
                    {
                        "id": i,
                        "value": float(self.value[i]),
                        "key": [float(v) for v in self.key[i]],
                        "count": int(self.count[i]),
                    }
                )
        return {"n_features": self.n_features, "nodes": nodes}

    @classmethod
    def from_dict(cls, payload: dict) -> "DecisionTree":
        nodes = payload["nodes"]
        m = int(payload["n_features"])
        n = len(nodes)
        feature = np.full(n, -1, dtype=np.intp)
        threshold = np.full(n, np.nan)
        left = np.full(n, -1, dtype=np.intp)
        right = np.full(n, -1, dtype=np.intp)
        value = np.full(n, np.nan)
        key = np.full((n, m), np.nan)
        count = np.zeros(n, dtype=np.intp)
        for node in nodes:
            i = int(node["id"])
            if "feature" in node:
                feature[i] = node["feature"]
                threshold[i] = node["threshold"]
                left[i] = node["left"]
                right[i] = node["right"]
            else:
                value[i] = node["value"]
                key[i] = node["key"]
                count[i] = node["count"]
        return cls(feature, threshold, left, right, value, key, count, m)


def _best_split_exact(X: np.ndarray, y: np.ndarray, msl: int):
    """Best (sse, feature, threshold) over all midpoint candidates, or None.

    Ties are broken toward the lowest feature index, then lowest threshold
    (argmin returns the first minimum; features scanned in index order with
    strict improvement required).
    """
    n = y.shape[0]
    best = None
    counts = np.arange(1, n)
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ys = y[order]
        valid = (xs[1:] > xs[:-1]) & (counts >= msl) & (n - counts >= msl)
        if not valid.any():
            continue
        csum = np.cumsum(ys)
        csq = np.cumsum(ys * ys)
        k = counts[valid]
        sum_l = csum[k - 1]
        sq_l = csq[k - 1]
        sse_l = sq_l - sum_l * sum_l / k
        sse_r = (csq[-1] - sq_l) - (csum[-1] - sum_l) ** 2 / (n - k)
        scores = sse_l + sse_r
        j = int(np.argmin(scores))
        score = float(scores[j])
        if best is None or score < best[0]:
            pos = int(k[j])
            thr = 0.5 * (xs[pos - 1] + xs[pos])
            # Midpoint can round up onto the right value; pin it down so the
            # "<= goes left" rule reproduces the counted partition.
            if thr >= xs[pos]:
                thr = xs[pos - 1]
            best = (score, f, float(thr))
    return best


def _best_split_random(X: np.ndarray, y: np.ndarray, msl: int, rng: np.random.Generator):
    """Best (sse, feature, threshold) among one uniform draw per feature."""
    n = y.shape[0]
    best = None
    for f in range(X.shape[1]):
        col = X[:, f]
        lo = col.min()
        hi = col.max()
        if lo == hi:
            continue
        thr = float(rng.uniform(lo, hi))
        mask = col <= thr
        n_l = int(mask.sum())
        if n_l < msl or n - n_l < msl:
            continue
        y_l = y[mask]
        y_r = y[~mask]
        sse = float(
            (y_l * y_l).sum()
            - y_l.sum() ** 2 / n_l
            + (y_r * y_r).sum()
            - y_r.sum() ** 2 / (n - n_l)
        )
        if best is None or sse < best[0]:
            best = (sse, f, thr)
    return best


class _Builder:
    def __init__(self, X, y, config: TreeConfig):
        self.X = X
        self.y = y
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.value = []
        self.key = []
        self.count = []

    def _new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(np.nan)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(np.nan)
        self.key.append(None)
        self.count.append(0)
        return len(self.feature) - 1

    def build(self, idx: np.ndarray, depth: int) -> int:
        # Explicit stack: depth-first, left child first, so node ids come out
        # in pre-order and the ExtraRandom draws are reproducible for a seed.
        cfg = self.config
        root = self._new_node()
        stack = [(root, idx, depth)]
        while stack:
            node, idx, depth = stack.pop()
            y = self.y[idx]
            splittable = (
                idx.shape[0] >= 2 * cfg.min_samples_leaf
                and (cfg.max_depth is None or depth < cfg.max_depth)
                and y.min() < y.max()
            )
            best = None
            if splittable:
                X = self.X[idx]
                if cfg.split_mode == "exact":
                    best = _best_split_exact(X, y, cfg.min_samples_leaf)
                else:
                    best = _best_split_random(X, y, cfg.min_samples_leaf, self.rng)
            if best is None:
                self.value[node] = float(y.mean())
                self.key[node] = self.X[idx].mean(axis=0)
                self.count[node] = int(idx.shape[0])
                continue
            _, f, thr = best
            self.feature[node] = f
            self.threshold[node] = thr
            mask = self.X[idx, f] <= thr
            left = self._new_node()
            right = self._new_node()
            self.left[node] = left
            self.right[node] = right
            stack.append((right, idx[~mask], depth + 1))
            stack.append((left, idx[mask], depth + 1))
        return root

    def finish(self, m: int) -> DecisionTree:
        n = len(self.feature)
        key = np.full((n, m), np.nan)
        for i, k in enumerate(self.key):
            if k is not None:
                key[i] = k
        return DecisionTree(
            feature=np.asarray(self.feature, dtype=np.intp),
            threshold=np.asarray(self.threshold, dtype=np.float64),
            left=np.asarray(self.left, dtype=np.intp),
            right=np.asarray(self.right, dtype=np.intp),
            value=np.asarray(self.value, dtype=np.float64),
            key=key,
            count=np.asarray(self.count, dtype=np.intp),
            n_features=m,
        )


def fit_tree(X: np.ndarray, targets: np.ndarray, config: TreeConfig = TreeConfig()) -> DecisionTree:
    """Fit a greedy top-down regression tree minimizing child SSE.

    Splitting stops when no candidate leaves at least ``min_samples_leaf``
    rows on both sides, when the node's targets are constant, or at
    ``max_depth``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if X.ndim != 2:
        raise TreeFitError(f"X must be 2-D, got shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise TreeFitError(
            f"targets shape {y.shape} does not match {X.shape[0]} rows"
        )
    if X.shape[0] < config.min_samples_leaf:
        raise TreeFitError(
            f"cannot fit: {X.shape[0]} rows < min_samples_leaf={config.min_samples_leaf}"
        )
    builder = _Builder(X, y, config)
    builder.build(np.arange(X.shape[0], dtype=np.intp), 0)
    return builder.finish(X.shape[1])
