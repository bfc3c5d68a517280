"""Entropic optimal-transport plans between two point clouds.

The plan W between clouds X (m points) and Y (n points) minimizes

    sum_ij ||x_i - y_j||^2 W_ij + epsilon * sum_ij W_ij log W_ij

over nonnegative matrices whose rows each sum to sqrt(n/m) and whose columns
each sum to sqrt(m/n) (so the total mass is sqrt(m*n)).  The minimizer
factorizes as W_ij = alpha_i * K_ij * beta_j with K = exp(-||x_i-y_j||^2 /
epsilon); ``sinkhorn`` computes the scalings by alternate marginal matching
in the log domain, which stays stable for small bandwidths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceError,
    DegenerateBandwidthError,
    InputError,
    NumericalError,
)
from .linalg import DataMatrix, as_matrix

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10000


def squared_distance_matrix(X, Y) -> np.ndarray:
    """Pairwise squared Euclidean distances, shape (m, n).

    Computed by the usual norm expansion; tiny negative values from
    cancellation are clipped to zero.
    """
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    if X.shape[1] != Y.shape[1]:
        raise InputError(
            f"X and Y must share a feature dimension, got {X.shape[1]} and {Y.shape[1]}"
        )
    sq_x = np.einsum("ij,ij->i", X, X)
    sq_y = np.einsum("ij,ij->i", Y, Y)
    D2 = sq_x[:, None] + sq_y[None, :] - 2.0 * (X @ Y.T)
    return np.maximum(D2, 0.0)


def median_bandwidth(D2) -> float:
    """Median of all squared distances (even counts average the central pair)."""
    D2 = as_matrix(D2, "D2")
    if (D2 < 0).any():
        raise InputError("D2 must be nonnegative")
    med = float(np.median(D2))
    if med <= 0.0:
        raise DegenerateBandwidthError(
            "median of squared distances is zero; bandwidth would be degenerate"
        )
    return med


@dataclass(frozen=True)
class TransportPlan:
    """A converged entropic plan together with its kernel scalings.

    Attributes
    ----------
    W : (m, n) strictly positive plan matrix
    alpha, beta : scaling vectors with W_ij = alpha_i * K_ij * beta_j and
        ||alpha||_1 == ||beta||_1
    epsilon : bandwidth used to build the kernel, or None when the kernel
        was supplied directly
    iterations : number of full sweeps performed
    marginal_residual : max absolute deviation of row/column sums from their
        targets, measured on W as returned
    swapped : True when the stored orientation is (Y, X) because the caller's
        X had more rows than Y
    """

    W: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    epsilon: float | None
    iterations: int
    marginal_residual: float
    swapped: bool = False

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float)
        if W.ndim != 2 or W.size == 0:
            raise InputError("W must be a non-empty 2-D array")
        if not np.isfinite(W).all():
            raise InputError("W contains non-finite entries")
        if (W <= 0).any():
            raise InputError("W must be strictly positive")
        if self.alpha.shape != (W.shape[0],) or self.beta.shape != (W.shape[1],):
            raise InputError("alpha/beta shapes do not match W")

    @property
    def shape(self) -> tuple[int, int]:
        return self.W.shape


def _logsumexp_rows(M: np.ndarray) -> np.ndarray:
    """log(sum(exp(M), axis=1)) for finite M, stabilized by the row max."""
    mx = M.max(axis=1, keepdims=True)
    return (mx + np.log(np.exp(M - mx).sum(axis=1, keepdims=True))).ravel()


def sinkhorn(
    logK,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    epsilon: float | None = None,
) -> TransportPlan:
    """Scale a positive kernel (given in the log domain) onto the plan marginals.

    Parameters
    ----------
    logK : (m, n) finite array, elementwise log of the kernel
    tol : convergence threshold on the relative marginal violation
        max(|row_sum/row_target - 1|, |col_sum/col_target - 1|) measured
        after a full sweep (row update, then column update)
    max_iter : sweep budget; exhausting it raises ConvergenceError
    epsilon : optional bandwidth to record on the plan (provenance only)

    Returns
    -------
    TransportPlan with scalings normalized so ||alpha||_1 == ||beta||_1.
    """
    logK = as_matrix(logK, "logK")
    m, n = logK.shape
    if not (np.isscalar(tol) and np.isfinite(tol)) or tol <= 0:
        raise InputError(f"tol must be a positive number, got {tol!r}")
    if not isinstance(max_iter, (int, np.integer)) or max_iter < 1:
        raise InputError(f"max_iter must be a positive integer, got {max_iter!r}")

    log_row_target = 0.5 * (np.log(n) - np.log(m))
    log_col_target = -log_row_target
    row_target = np.exp(log_row_target)
    col_target = np.exp(log_col_target)

    f = np.zeros(m)
    g = np.zeros(n)
    W = None
    residual_rel = np.inf
    for sweep in range(1, max_iter + 1):
        f = log_row_target - _logsumexp_rows(logK + g[None, :])
        g = log_col_target - _logsumexp_rows(logK.T + f[None, :])
        if not (np.isfinite(f).all() and np.isfinite(g).all()):
            raise NumericalError("Sinkhorn scalings became non-finite")
        W = np.exp(f[:, None] + logK + g[None, :])
        residual_rel = max(
            np.abs(W.sum(axis=1) / row_target - 1.0).max(),
            np.abs(W.sum(axis=0) / col_target - 1.0).max(),
        )
        if residual_rel <= tol:
            break
    else:
        raise ConvergenceError(
            f"Sinkhorn did not reach tol={tol:g} in {max_iter} sweeps "
            f"(residual {residual_rel:.3e})",
            residual=float(residual_rel),
        )

    # Balance the scalings (||alpha||_1 == ||beta||_1) without touching W:
    # shift the duals by +/- the same constant and rebuild W from them.
    shift = 0.5 * (_logsumexp_rows(g[None, :]) - _logsumexp_rows(f[None, :]))[0]
    f = f + shift
    g = g - shift
    W = np.exp(f[:, None] + logK + g[None, :])
    if (W <= 0).any():
        raise NumericalError(
            "plan entries underflowed to zero; the kernel's dynamic range is too "
            "large for a dense strictly-positive plan"
        )
    residual_abs = max(
        np.abs(W.sum(axis=1) - row_target).max(),
        np.abs(W.sum(axis=0) - col_target).max(),
    )
    return TransportPlan(
        W=W,
        alpha=np.exp(f),
        beta=np.exp(g),
        epsilon=epsilon,
        iterations=sweep,
        marginal_residual=float(residual_abs),
        swapped=False,
    )


def transport_plan(
    X,
    Y,
    epsilon="median",
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> TransportPlan:
    """Entropic plan between two clouds with a Gaussian kernel.

    ``epsilon`` is either a positive number or ``"median"`` (bandwidth set to
    the median of all squared pairwise distances).  The stored plan always
    has at most as many rows as columns; when the caller's X is the larger
    cloud the computation runs on (Y, X) and ``swapped`` is set.
    """
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    if X.shape[1] != Y.shape[1]:
        raise InputError(
            f"X and Y must share a feature dimension, got {X.shape[1]} and {Y.shape[1]}"
        )

    swapped = X.shape[0] > Y.shape[0]
    A, B = (Y, X) if swapped else (X, Y)
    D2 = squared_distance_matrix(A, B)

    if isinstance(epsilon, str):
        if epsilon != "median":
            raise InputError(f'epsilon must be a positive number or "median", got {epsilon!r}')
        eps = median_bandwidth(D2)
    else:
        eps = float(epsilon)
        if not np.isfinite(eps) or eps <= 0:
            raise InputError(f"epsilon must be positive and finite, got {epsilon!r}")

    plan = sinkhorn(-D2 / eps, tol=tol, max_iter=max_iter, epsilon=eps)
    if swapped:
        return TransportPlan(
            W=plan.W,
            alpha=plan.alpha,
            beta=plan.beta,
            epsilon=plan.epsilon,
            iterations=plan.iterations,
            marginal_residual=plan.marginal_residual,
            swapped=True,
        )
    return plan


__all__ = [
    "DataMatrix",
    "TransportPlan",
    "squared_distance_matrix",
    "median_bandwidth",
    "sinkhorn",
    "transport_plan",
    "DEFAULT_TOL",
    "DEFAULT_MAX_ITER",
]
