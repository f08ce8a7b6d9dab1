"""Synthetic regression benchmark generators, CSV ingestion and CV splitting.

All randomness goes through numpy's PCG64 generator (``np.random.default_rng``)
seeded with an explicit 64-bit integer, so every generator and the splitter are
pure functions of their arguments.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "DataMatrix",
    "SplitIndices",
    "DatasetError",
    "CsvParseError",
    "ManifestEntry",
    "gen_friedman1",
    "gen_friedman2",
    "gen_friedman3",
    "gen_regression",
    "gen_sparse_uncorrelated",
    "friedman1_formula",
    "friedman2_formula",
    "friedman3_formula",
    "sparse_uncorrelated_formula",
    "load_csv",
    "load_manifest",
    "split",
    "train_test_split",
]

_MAX_SEED = 2**64


class DatasetError(ValueError):
    """Raised for malformed datasets or invalid generator arguments."""


class CsvParseError(DatasetError):
    """CSV cell that cannot be parsed; keeps 1-based file coordinates."""

    def __init__(self, message: str, row: int | None = None, column: int | None = None):
        super().__init__(message)
        self.row = row
        self.column = column


def _rng(seed: int) -> np.random.Generator:
    if not (0 <= int(seed) < _MAX_SEED):
        raise DatasetError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.default_rng(int(seed))


@dataclass(frozen=True)
class DataMatrix:
    """An n x m feature matrix plus an n-vector of regression targets.

    Immutable after construction: the backing arrays are marked read-only, so
    instances are safe to share across concurrent readers.
    """

    features: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        targets = np.asarray(self.targets, dtype=np.float64)
        if features.ndim != 2:
            raise DatasetError(f"features must be 2-D, got shape {features.shape}")
        if targets.ndim != 1:
            raise DatasetError(f"targets must be 1-D, got shape {targets.shape}")
        if features.shape[0] != targets.shape[0]:
            raise DatasetError(
                f"row mismatch: {features.shape[0]} feature rows vs {targets.shape[0]} targets"
            )
        if features.shape[0] == 0:
            raise DatasetError("empty dataset: need at least one instance")
        if not np.isfinite(features).all() or not np.isfinite(targets).all():
            raise DatasetError("dataset contains NaN or infinite values")
        features = features.copy()
        targets = targets.copy()
        features.setflags(write=False)
        targets.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "targets", targets)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def m(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "DataMatrix":
        """New DataMatrix restricted to the given row indices."""
        idx = np.asarray(idx, dtype=np.intp)
        return DataMatrix(self.features[idx], self.targets[idx])


@dataclass(frozen=True)
class SplitIndices:
    """Disjoint train/test row indices covering 0..n-1 exactly once."""

    train_idx: np.ndarray
    test_idx: np.ndarray

    def __post_init__(self):
        train = np.asarray(self.train_idx, dtype=np.intp)
        test = np.asarray(self.test_idx, dtype=np.intp)
        train.setflags(write=False)
        test.setflags(write=False)
        object.__setattr__(self, "train_idx", train)
        object.__setattr__(self, "test_idx", test)


def friedman1_formula(X: np.ndarray) -> np.ndarray:
    """Noiseless Friedman #1 target for rows of a (n, >=5) matrix."""
    X = np.asarray(X, dtype=np.float64)
    return (
        10.0 * np.sin(np.pi * X[:, 0] * X[:, 1])
        + 20.0 * (X[:, 2] - 0.5) ** 2
        + 10.0 * X[:, 3]
        + 5.0 * X[:, 4]
    )


def friedman2_formula(X: np.ndarray) -> np.ndarray:
    """Noiseless Friedman #2 target for rows of a (n, 4) matrix."""
    X = np.asarray(X, dtype=np.float64)
    return np.sqrt(X[:, 0] ** 2 + (X[:, 1] * X[:, 2] - 1.0 / (X[:, 1] * X[:, 3])) ** 2)


def friedman3_formula(X: np.ndarray) -> np.ndarray:
    """Noiseless Friedman #3 target for rows of a (n, 4) matrix."""
    X = np.asarray(X, dtype=np.float64)
    return np.arctan((X[:, 1] * X[:, 2] - 1.0 / (X[:, 1] * X[:, 3])) / X[:, 0])


def sparse_uncorrelated_formula(X: np.ndarray) -> np.ndarray:
    """Noiseless sparse-uncorrelated target: x1 + 2*x2 - 2*x3 - 1.5*x4."""
    X = np.asarray(X, dtype=np.float64)
    return X[:, 0] + 2.0 * X[:, 1] - 2.0 * X[:, 2] - 1.5 * X[:, 3]


def _check_n(n: int) -> int:
    n = int(n)
    if n < 1:
        raise DatasetError("empty dataset: n must be >= 1")
    return n


def gen_friedman1(n: int, noise_sd: float = 1.0, seed: int = 0) -> DataMatrix:
    """Friedman #1: 10 features uniform on [0, 1], 5 of them informative.

    y = 10*sin(pi*x1*x2) + 20*(x3 - 0.5)^2 + 10*x4 + 5*x5 + noise_sd*N(0, 1)
    """
    n = _check_n(n)
    if noise_sd < 0:
        raise DatasetError("noise_sd must be >= 0")
    rng = _rng(seed)
    X = rng.uniform(0.0, 1.0, size=(n, 10))
    y = friedman1_formula(X) + noise_sd * rng.standard_normal(n)
    return DataMatrix(X, y)


def _friedman23_features(n: int, rng: np.random.Generator) -> np.ndarray:
    X = np.empty((n, 4))
    X[:, 0] = rng.uniform(0.0, 100.0, size=n)
    X[:, 1] = rng.uniform(40.0 * np.pi, 560.0 * np.pi, size=n)
    X[:, 2] = rng.uniform(0.0, 1.0, size=n)
    X[:, 3] = rng.uniform(1.0, 11.0, size=n)
    return X


def _noise_from_signal(y_clean: np.ndarray, noise_sd: float | None) -> float:
    # Default convention: noise standard deviation is a third of the signal's.
    if noise_sd is None:
        return float(np.std(y_clean)) / 3.0
    if noise_sd < 0:
        raise DatasetError("noise_sd must be >= 0")
    return float(noise_sd)


def gen_friedman2(n: int, noise_sd: float | None = None, seed: int = 0) -> DataMatrix:
    """Friedman #2: 4 features, y = sqrt(x1^2 + (x2*x3 - 1/(x2*x4))^2) + noise.

    ``noise_sd=None`` uses a third of the noiseless target's standard
    deviation on the generated sample.
    """
    n = _check_n(n)
    rng = _rng(seed)
    X = _friedman23_features(n, rng)
    y_clean = friedman2_formula(X)
    sd = _noise_from_signal(y_clean, noise_sd)
    y = y_clean + sd * rng.standard_normal(n)
    return DataMatrix(X, y)


def gen_friedman3(n: int, noise_sd: float | None = None, seed: int = 0) -> DataMatrix:
    """Friedman #3: same feature ranges as #2, arctan-shaped target."""
    n = _check_n(n)
    rng = _rng(seed)
    X = _friedman23_features(n, rng)
    y_clean = friedman3_formula(X)
    sd = _noise_from_signal(y_clean, noise_sd)
    y = y_clean + sd * rng.standard_normal(n)
    return DataMatrix(X, y)


def gen_regression(
    n: int,
    n_features: int = 100,
    n_informative: int = 10,
    noise_sd: float = 0.0,
    seed: int = 0,
) -> DataMatrix:
    """Linear regression problem on standard-normal features.

    ``n_informative`` randomly placed columns get coefficients drawn uniformly
    from (0, 100); the rest do not enter the target.
    """
    n = _check_n(n)
    if n_informative > n_features:
        raise DatasetError(
            f"n_informative={n_informative} exceeds n_features={n_features}"
        )
    if noise_sd < 0:
        raise DatasetError("noise_sd must be >= 0")
    rng = _rng(seed)
    X = rng.standard_normal((n, n_features))
    coef = np.zeros(n_features)
    informative = rng.permutation(n_features)[:n_informative]
    coef[informative] = 100.0 * rng.uniform(size=n_informative)
    y = X @ coef + noise_sd * rng.standard_normal(n)
    return DataMatrix(X, y)


def gen_sparse_uncorrelated(n: int, noise_sd: float = 1.0, seed: int = 0) -> DataMatrix:
    """10 standard-normal features, only the first 4 informative.

    y = x1 + 2*x2 - 2*x3 - 1.5*x4 + noise_sd*N(0, 1)
    """
    n = _check_n(n)
    if noise_sd < 0:
        raise DatasetError("noise_sd must be >= 0")
    rng = _rng(seed)
    X = rng.standard_normal((n, 10))
    y = sparse_uncorrelated_formula(X) + noise_sd * rng.standard_normal(n)
    return DataMatrix(X, y)


def load_csv(
    path: str | Path,
    target_column: str | int,
    has_header: bool = True,
    delimiter: str = ",",
) -> DataMatrix:
    """Load a numeric delimited file into a DataMatrix.

    ``target_column`` is a header name (requires ``has_header``) or a 0-based
    column index. The remaining columns become features in file order.
    Parse failures report 1-based file row and column numbers.
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"dataset file not found: {path}")

    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        rows = [row for row in reader if row]

    if not rows:
        raise DatasetError(f"empty dataset: {path} has no rows")

    header: list[str] | None = None
    if has_header:
        header = [cell.strip() for cell in rows[0]]
        rows = rows[1:]
        if not rows:
            raise DatasetError(f"empty dataset: {path} has a header but no data rows")

    n_cols = len(rows[0])
    if isinstance(target_column, str):
        if header is None:
            raise DatasetError(
                "target_column given by name but the file has no header row"
            )
        if target_column not in header:
            raise DatasetError(
                f"target column {target_column!r} not found in header {header}"
            )
        target_idx = header.index(target_column)
    else:
        target_idx = int(target_column)
        if not (0 <= target_idx < n_cols):
            raise DatasetError(
                f"target column index {target_idx} out of range for {n_cols} columns"
            )

    values = np.empty((len(rows), n_cols))
    header_offset = 1 if has_header else 0
    for i, row in enumerate(rows):
        if len(row) != n_cols:
            raise CsvParseError(
                f"row {i + 1 + header_offset}: expected {n_cols} cells, got {len(row)}",
                row=i + 1 + header_offset,
            )
        for j, cell in enumerate(row):
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise CsvParseError(
                    f"row {i + 1 + header_offset}, column {j + 1}: "
                    f"cannot parse {cell.strip()!r} as a number",
                    row=i + 1 + header_offset,
                    column=j + 1,
                ) from None

    feature_cols = [j for j in range(n_cols) if j != target_idx]
    return DataMatrix(values[:, feature_cols], values[:, target_idx])


@dataclass(frozen=True)
class ManifestEntry:
    """One external CSV dataset: where it lives and which column is the target."""

    name: str
    path: Path
    target_column: str | int
    has_header: bool = True
    delimiter: str = ","

    def load(self) -> DataMatrix:
        return load_csv(self.path, self.target_column, self.has_header, self.delimiter)


def load_manifest(path: str | Path) -> dict[str, ManifestEntry]:
    """Read a JSON dataset manifest: a list of {name, path, target_column}.

    Relative dataset paths are resolved against the manifest's directory.
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"manifest not found: {path}")
    raw = json.loads(path.read_text())
    if isinstance(raw, dict):
        raw = raw.get("datasets", [])
    entries: dict[str, ManifestEntry] = {}
    for item in raw:
        if "name" not in item or "path" not in item or "target_column" not in item:
            raise DatasetError(
                f"manifest entry must define name, path and target_column: {item}"
            )
        csv_path = Path(item["path"])
        if not csv_path.is_absolute():
            csv_path = path.parent / csv_path
        entries[item["name"]] = ManifestEntry(
            name=item["name"],
            path=csv_path,
            target_column=item["target_column"],
            has_header=bool(item.get("has_header", True)),
            delimiter=item.get("delimiter", ","),
        )
    return entries


def split(n: int, seed: int = 0) -> SplitIndices:
    """Random 4:1 partition of 0..n-1; |train| = round(4n/5) with ties up."""
    n = int(n)
    if n < 5:
        raise DatasetError(f"too few instances to split 4:1: n={n} < 5")
    n_train = int(math.floor(4.0 * n / 5.0 + 0.5))
    perm = _rng(seed).permutation(n)
    return SplitIndices(np.sort(perm[:n_train]), np.sort(perm[n_train:]))


def train_test_split(data: DataMatrix, seed: int = 0) -> tuple[DataMatrix, DataMatrix]:
    """Split a DataMatrix into (train, test) with the 4:1 convention."""
    idx = split(data.n, seed)
    return data.subset(idx.train_idx), data.subset(idx.test_idx)
