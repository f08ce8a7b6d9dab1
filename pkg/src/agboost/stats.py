"""Regression metrics and the paired t-test used for cross-dataset comparison.

The Student-t CDF is computed from the regularized incomplete beta function
(continued fraction, Lentz's method) so results are bit-reproducible without
a statistics dependency; quantiles come from bisection on the CDF.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MetricError",
    "MetricPair",
    "TTestResult",
    "r2",
    "mae",
    "paired_t_test",
    "student_t_cdf",
    "student_t_ppf",
    "reg_inc_beta",
]


class MetricError(ValueError):
    """Raised when a metric or test is undefined for the given inputs."""


def _as_pair(y_true, y_pred) -> tuple[np.ndarray, np.ndarray]:
    yt = np.asarray(y_true, dtype=np.float64).ravel()
    yp = np.asarray(y_pred, dtype=np.float64).ravel()
    if yt.shape != yp.shape:
        raise MetricError(f"length mismatch: {yt.shape[0]} vs {yp.shape[0]}")
    return yt, yp


def r2(y_true, y_pred) -> float:
    """Coefficient of determination 1 - SS_res / SS_tot."""
    yt, yp = _as_pair(y_true, y_pred)
    if yt.shape[0] < 2:
        raise MetricError("r2 needs at least 2 observations")
    ss_tot = float(((yt - yt.mean()) ** 2).sum())
    if ss_tot == 0.0:
        raise MetricError("r2 undefined: y_true is constant")
    ss_res = float(((yt - yp) ** 2).sum())
    return 1.0 - ss_res / ss_tot


def mae(y_true, y_pred) -> float:
    """Mean absolute error."""
    yt, yp = _as_pair(y_true, y_pred)
    if yt.shape[0] < 1:
        raise MetricError("mae needs at least 1 observation")
    return float(np.abs(yt - yp).mean())


@dataclass(frozen=True)
class MetricPair:
    """R^2 and MAE of one model on one evaluation."""

    r2: float
    mae: float

    def __post_init__(self):
        if self.mae < 0.0:
            raise MetricError(f"mae must be >= 0, got {self.mae}")
        if self.r2 > 1.0:
            raise MetricError(f"r2 cannot exceed 1, got {self.r2}")

    def to_dict(self) -> dict:
        return {"r2": self.r2, "mae": self.mae}

    @classmethod
    def from_dict(cls, payload: dict) -> "MetricPair":
        return cls(r2=float(payload["r2"]), mae=float(payload["mae"]))


_BETA_MAX_ITER = 300
_BETA_EPS = 3e-16
_BETA_FPMIN = 1e-300


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _BETA_FPMIN:
        d = _BETA_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_FPMIN:
            d = _BETA_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _BETA_FPMIN:
            c = _BETA_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_FPMIN:
            d = _BETA_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _BETA_FPMIN:
            c = _BETA_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_EPS:
            return h
    raise MetricError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if not (0.0 <= x <= 1.0):
        raise MetricError(f"x must be in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # Use the continued fraction on whichever side converges fast.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_cdf(t: float, dof: float) -> float:
    """CDF of Student's t distribution with ``dof`` degrees of freedom."""
    if dof <= 0:
        raise MetricError("degrees of freedom must be > 0")
    if t == 0.0:
        return 0.5
    x = dof / (dof + t * t)
    tail = 0.5 * reg_inc_beta(0.5 * dof, 0.5, x)
    return 1.0 - tail if t > 0 else tail


def student_t_ppf(q: float, dof: float) -> float:
    """Quantile of Student's t via bisection on the CDF."""
    if not (0.0 < q < 1.0):
        raise MetricError(f"quantile level must be in (0, 1), got {q}")
    if q == 0.5:
        return 0.0
    if q < 0.5:
        return -student_t_ppf(1.0 - q, dof)
    lo, hi = 0.0, 1.0
    while student_t_cdf(hi, dof) < q:
        hi *= 2.0
        if hi > 1e300:
            raise MetricError("quantile bracket blew up")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if student_t_cdf(mid, dof) < q:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class TTestResult:
    mean_diff: float
    p_value: float
    ci95: tuple[float, float]
    dof: int
    t_stat: float

    def to_dict(self) -> dict:
        return {
            "mean_diff": self.mean_diff,
            "p_value": self.p_value,
            "ci95": [self.ci95[0], self.ci95[1]],
            "dof": self.dof,
            "t_stat": self.t_stat,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "TTestResult":
        return cls(
            mean_diff=float(payload["mean_diff"]),
            p_value=float(payload["p_value"]),
            ci95=(float(payload["ci95"][0]), float(payload["ci95"][1])),
            dof=int(payload["dof"]),
            t_stat=float(payload["t_stat"]),
        )


def paired_t_test(diffs) -> TTestResult:
    """Two-sided one-sample t-test of mean(diffs) against zero.

    Returns the mean difference, the p-value from Student's t with k-1
    degrees of freedom, and the 95% confidence interval for the mean.
    """
    d = np.asarray(diffs, dtype=np.float64).ravel()
    k = d.shape[0]
    if k < 2:
        raise MetricError("paired t-test needs at least 2 differences")
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        raise MetricError("degenerate t-test: differences have zero variance")
    se = sd / math.sqrt(k)
    t = mean / se
    dof = k - 1
    p = reg_inc_beta(0.5 * dof, 0.5, dof / (dof + t * t))
    t_crit = student_t_ppf(0.975, dof)
    return TTestResult(
        mean_diff=mean,
        p_value=p,
        ci95=(mean - t_crit * se, mean + t_crit * se),
        dof=dof,
        t_stat=t,
    )
