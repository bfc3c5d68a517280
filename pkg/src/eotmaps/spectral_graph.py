"""Bipartite graph operators induced by a transport plan, and their spectra.

The plan W couples the m rows and n columns into one bipartite graph on
m + n vertices with adjacency

    W_hat = [[0, W], [W^T, 0]],      L = I - W_hat,

and the degree-like rescaling D = diag(sqrt(m) I_m, sqrt(n) I_n) turns L
into the similar operator L_tilde = D L D^{-1} whose complement
P = I - L_tilde is row-stochastic.  The entire spectrum of L is a known
function of the plan's singular values, and the eigenvectors are assembled
from the plan's singular vectors; ``predicted_spectrum`` builds both.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedding import SpectralModel
from .errors import DimensionError, InputError, InvariantError, NumericalError
from .transport import TransportPlan

DEFAULT_MAX_SIZE = 5000
_MARGINAL_GATE = 1e-10
_ROW_STOCHASTIC_TOL = 1e-10
_AGREEMENT_TOL = 1e-8


@dataclass(frozen=True)
class BipartiteOperators:
    """Dense operator bundle for one plan: adjacency, Laplacian-like L, and P."""

    What: np.ndarray  # (m+n, m+n) bipartite adjacency
    L: np.ndarray  # I - What
    D: np.ndarray  # diagonal rescaling as a vector of length m+n
    Ltilde: np.ndarray  # D L D^{-1}
    P: np.ndarray  # I - Ltilde, row-stochastic
    m: int
    n: int


def build_operators(plan: TransportPlan, max_size: int = DEFAULT_MAX_SIZE) -> BipartiteOperators:
    """Assemble the dense bipartite operators for a converged plan.

    Requires m + n <= max_size (these are dense (m+n)^2 matrices) and a plan
    whose relative marginal violation is at or below 1e-10, since the
    row-stochasticity of P inherits exactly that violation.
    """
    if not isinstance(plan, TransportPlan):
        raise InputError("plan must be a TransportPlan")
    m, n = plan.shape
    if m + n > max_size:
        raise DimensionError(
            f"dense operators need m+n <= {max_size}, got {m + n}; raise max_size "
            "explicitly if you really want this"
        )
    row_target = np.sqrt(n / m)
    col_target = np.sqrt(m / n)
    violation = max(
        np.abs(plan.W.sum(axis=1) / row_target - 1.0).max(),
        np.abs(plan.W.sum(axis=0) / col_target - 1.0).max(),
    )
    if violation > _MARGINAL_GATE:
        raise InvariantError(
            f"plan marginals are violated at {violation:.3e} (> {_MARGINAL_GATE:g}); "
            "re-solve with a tighter tolerance before building graph operators"
        )

    N = m + n
    What = np.zeros((N, N))
    What[:m, m:] = plan.W
    What[m:, :m] = plan.W.T
    L = np.eye(N) - What
    D = np.concatenate([np.full(m, np.sqrt(m)), np.full(n, np.sqrt(n))])
    Ltilde = (D[:, None] * L) / D[None, :]
    P = np.eye(N) - Ltilde

    row_err = np.abs(P.sum(axis=1) - 1.0).max()
    if row_err > _ROW_STOCHASTIC_TOL:
        raise InvariantError(f"P is not row-stochastic within {_ROW_STOCHASTIC_TOL:g} ({row_err:.3e})")
    return BipartiteOperators(What=What, L=L, D=D, Ltilde=Ltilde, P=P, m=m, n=n)


def predicted_spectrum(model: SpectralModel, m: int, n: int):
    """Closed-form spectrum of L from the plan's full set of singular triplets.

    Parameters
    ----------
    model : SpectralModel holding all m triplets of an (m, n) plan, m <= n
    m, n : the plan's shape

    Returns
    -------
    values : (m+n,) eigenvalues of L in ascending order:
        0, 1-s_2, ..., 1-s_m, then 1 with multiplicity n-m, then
        1+s_m, ..., 1+s_2, 2
    vectors : (m+n, m+n) matching eigenvectors as columns; the first m are
        [u_k; v_k]/sqrt(2), the middle n-m are [0; w] for an orthonormal
        completion w of the plan's right singular subspace, and the last m
        are [u_k; -v_k]/sqrt(2) in reverse order.

    The middle band is degenerate, so only its eigenvalues (or residuals
    against L) are comparable across implementations; the completion used
    here is the deterministic QR completion of span(V).
    """
    if not isinstance(model, SpectralModel):
        raise InputError("model must be a SpectralModel")
    if m > n:
        raise InputError(f"expected the stored orientation m <= n, got {m} > {n}")
    if model.U.shape != (m, m) or model.V.shape != (n, m):
        raise DimensionError(
            f"model must hold all {m} triplets of an ({m}, {n}) plan; "
            f"got U {model.U.shape}, V {model.V.shape}"
        )
    s, U, V = model.s, model.U, model.V

    values = np.concatenate([1.0 - s, np.ones(n - m), (1.0 + s)[::-1]])

    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    top = np.vstack([U * inv_sqrt2, V * inv_sqrt2])  # columns k=1..m
    bottom = np.vstack([U[:, ::-1] * inv_sqrt2, -V[:, ::-1] * inv_sqrt2])
    if n > m:
        Q, _ = np.linalg.qr(np.concatenate([V, np.eye(n)], axis=1))
        middle = np.vstack([np.zeros((m, n - m)), Q[:, m:n]])
        vectors = np.concatenate([top, middle, bottom], axis=1)
    else:
        vectors = np.concatenate([top, bottom], axis=1)
    return values, vectors


def quadratic_form(ops: BipartiteOperators, f) -> float:
    """Evaluate f^T L f two ways and return the matrix-form value.

    The second route rewrites the form as the plan-weighted sum of squared
    rescaled differences across the bipartition:

        (1/sqrt(mn)) * sum_ij (sqrt(m) f_i - sqrt(n) f_{m+j})^2 W_ij

    The two evaluations must agree to 1e-8 relative to the scale of the
    form; disagreement raises NumericalError.
    """
    if not isinstance(ops, BipartiteOperators):
        raise InputError("ops must be a BipartiteOperators")
    f = np.asarray(f, dtype=float)
    if f.shape != (ops.m + ops.n,):
        raise InputError(f"f must have length {ops.m + ops.n}, got {f.shape}")
    if not np.isfinite(f).all():
        raise InputError("f contains non-finite entries")

    matrix_value = float(f @ (ops.L @ f))

    W = ops.What[: ops.m, ops.m :]
    g = f[: ops.m]
    h = f[ops.m :]
    diffs = np.sqrt(ops.m) * g[:, None] - np.sqrt(ops.n) * h[None, :]
    weighted_value = float((diffs**2 * W).sum() / np.sqrt(ops.m * ops.n))

    scale = max(abs(matrix_value), abs(weighted_value), float(f @ f))
    if abs(matrix_value - weighted_value) > _AGREEMENT_TOL * max(scale, 1e-300):
        raise NumericalError(
            f"quadratic-form routes disagree: {matrix_value!r} vs {weighted_value!r}"
        )
    return matrix_value


__all__ = [
    "BipartiteOperators",
    "build_operators",
    "predicted_spectrum",
    "quadratic_form",
    "DEFAULT_MAX_SIZE",
]
