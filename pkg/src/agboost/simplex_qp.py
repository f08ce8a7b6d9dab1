"""Least squares over the probability simplex: min ||r - M w||^2, w in Delta_T.

Solved by an exact active-set method on the KKT system (a Lawson-Hanson
style loop adapted to the sum-to-one constraint). The Frank-Wolfe gap
g(w)^T w - min_t g(w)_t upper-bounds f(w) - f*, so termination certifies the
objective is within ``tol * (1 + |f|)`` of optimal. The uniform vector is
checked first and the best iterate is tracked throughout, so the result is
never worse than uniform weights. Columns of M with wildly different scales
(the usual case when early boosting iterations carry large residuals) are
handled exactly, where fixed-step projected gradient stalls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SimplexQP",
    "SolverConfig",
    "QPNonConvergence",
    "project_simplex",
    "objective",
    "solve",
]


class QPNonConvergence(RuntimeError):
    """Solver hit max_iter; carries the best iterate and a gap estimate."""

    def __init__(self, message: str, w_best: np.ndarray, gap: float):
        super().__init__(message)
        self.w_best = w_best
        self.gap = gap


@dataclass(frozen=True)
class SimplexQP:
    M: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.M, dtype=np.float64)
        r = np.asarray(self.r, dtype=np.float64)
        if M.ndim != 2:
            raise ValueError(f"M must be 2-D, got shape {M.shape}")
        if r.shape != (M.shape[0],):
            raise ValueError(f"r shape {r.shape} does not match M rows {M.shape[0]}")
        if M.shape[1] < 1:
            raise ValueError("need at least one column (T >= 1)")
        if not np.isfinite(M).all() or not np.isfinite(r).all():
            raise ValueError("M and r must be finite")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "r", r)

    @property
    def dim(self) -> int:
        return self.M.shape[1]


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-8
    max_iter: int = 10000

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {w : w_t >= 0, sum w_t = 1}.

    Sorting/threshold algorithm: with u the descending sort of v, find the
    largest j with u_j + (1 - sum_{i<=j} u_i)/j > 0 and clip at that offset.
    """
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.shape[0] == 0:
        raise ValueError("cannot project an empty vector")
    u = np.sort(v)[::-1]
    cumsum = np.cumsum(u)
    j = np.arange(1, v.shape[0] + 1)
    rho = int(np.nonzero(u + (1.0 - cumsum) / j > 0)[0][-1])
    lam = (1.0 - cumsum[rho]) / (rho + 1.0)
    return np.maximum(v + lam, 0.0)


def _check_simplex(w: np.ndarray, dim: int, atol: float = 1e-9) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64).ravel()
    if w.shape[0] != dim:
        raise ValueError(f"w has length {w.shape[0]}, expected {dim}")
    if (w < -atol).any() or abs(w.sum() - 1.0) > max(atol, 1e-9 * dim):
        raise ValueError("w is not on the probability simplex")
    return w


def objective(qp: SimplexQP, w: np.ndarray) -> float:
    """||r - M w||^2 for a simplex-feasible w."""
    w = _check_simplex(w, qp.dim)
    diff = qp.r - qp.M @ w
    return float(diff @ diff)


def _constrained_lstsq(M: np.ndarray, r: np.ndarray, passive: np.ndarray) -> np.ndarray:
    """Minimizer of ||r - M[:, passive] z||^2 subject to sum z = 1.

    The sum constraint is eliminated through the null-space substitution
    z = e_1 + N u with N spanning {d : sum d = 0}, leaving a plain least
    squares in u. This keeps every column in data units (a KKT system would
    mix Gram-scale entries with the unit constraint row and lose it to
    rcond truncation) and the minimum-norm solve resolves rank-deficient
    passive sets deterministically.
    """
    A = M[:, passive]
    k = A.shape[1]
    if k == 1:
        return np.ones(1)
    base = A[:, 0]
    u = np.linalg.lstsq(A[:, 1:] - base[:, None], r - base, rcond=None)[0]
    z = np.empty(k)
    z[1:] = u
    z[0] = 1.0 - u.sum()
    return z


def solve(qp: SimplexQP, config: SolverConfig = SolverConfig()) -> np.ndarray:
    """Minimize ||r - M w||^2 over the probability simplex.

    Active-set iterations: solve the sum-to-one constrained least squares on
    the passive set; clip back along the segment while any coordinate would
    go negative (dropping it); otherwise admit the most promising inactive
    coordinate, until the Frank-Wolfe gap certifies optimality within
    ``tol * (1 + |f|)``. Raises QPNonConvergence when max_iter is exhausted.
    """
    T = qp.dim
    uniform = np.full(T, 1.0 / T)
    if T == 1:
        return uniform

    G = qp.M.T @ qp.M
    h = qp.M.T @ qp.r
    c = float(qp.r @ qp.r)

    def f(w: np.ndarray) -> float:
        return float(w @ (G @ w) - 2.0 * (h @ w) + c)

    def fw_gap(w: np.ndarray, grad: np.ndarray) -> float:
        return float(grad @ w - grad.min())

    w = uniform.copy()
    f_w = f(w)
    grad = 2.0 * (G @ w - h)
    gap = fw_gap(w, grad)
    best_w, best_f = w.copy(), f_w
    if gap <= config.tol * (1.0 + abs(f_w)):
        return w

    # Start the active-set loop from the best vertex under the current
    # gradient; the uniform iterate above stays the fallback.
    enter = int(np.argmin(grad))
    passive = np.array([enter], dtype=np.intp)
    w = np.zeros(T)
    w[enter] = 1.0

    stall = 0
    f_prev = np.inf
    for _ in range(config.max_iter):
        z_p = _constrained_lstsq(qp.M, qp.r, passive)
        # Inner clipping loop: pull the target point back to feasibility,
        # dropping coordinates that hit zero.
        while (z_p < -1e-12).any():
            x_p = w[passive]
            shrink = z_p < x_p
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(shrink, x_p / (x_p - z_p), np.inf)
            ratios[z_p >= 0.0] = np.inf
            alpha = float(ratios.min())
            x_p = x_p + alpha * (z_p - x_p)
            keep = x_p > 1e-12
            if keep.all():
                # Guard against a stuck ratio due to rounding.
                keep[int(np.argmin(ratios))] = False
            w[passive] = x_p
            w[passive[~keep]] = 0.0
            passive = passive[keep]
            if passive.shape[0] == 0:
                raise QPNonConvergence(
                    "active set emptied out (numerically degenerate problem)",
                    w_best=best_w,
                    gap=fw_gap(best_w, 2.0 * (G @ best_w - h)),
                )
            z_p = _constrained_lstsq(qp.M, qp.r, passive)
        w = np.zeros(T)
        w[passive] = np.maximum(z_p, 0.0)
        f_w = f(w)
        # Stall tracks the trajectory's own progress: each admitted
        # coordinate should strictly lower the constrained optimum, so a
        # run of non-decreases means float64 is out of resolution.
        if f_w < f_prev - config.tol * (1.0 + abs(f_w)):
            stall = 0
        else:
            stall += 1
        f_prev = f_w
        if f_w < best_f:
            best_w, best_f = w.copy(), f_w
        grad = 2.0 * (G @ w - h)
        gap = fw_gap(w, grad)
        inactive = np.setdiff1d(np.arange(T), passive, assume_unique=False)
        if gap <= config.tol * (1.0 + abs(f_w)) or stall >= 50 or inactive.shape[0] == 0:
            # The best iterate is never worse than the uniform warm start,
            # so it wins any remaining float-noise race with the certified
            # point.
            return _check_simplex(best_w if best_f < f_w else w, T)
        enter = int(inactive[np.argmin(grad[inactive])])
        passive = np.sort(np.append(passive, enter))

    grad = 2.0 * (G @ best_w - h)
    raise QPNonConvergence(
        f"no convergence in {config.max_iter} iterations "
        f"(gap estimate {fw_gap(best_w, grad):.3e})",
        w_best=best_w,
        gap=fw_gap(best_w, grad),
    )
