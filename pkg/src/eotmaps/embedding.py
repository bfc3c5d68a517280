"""Joint spectral embeddings built from a transport plan's singular triplets.

A converged plan W (m <= n orientation) has the all-ones pair as its leading
singular triplet: s_1 = 1 with u_1 = 1/sqrt(m) and v_1 = 1/sqrt(n).  The
coordinates that align the two clouds come from the next q triplets:

    x~_i[k] = sqrt(m) * s_{k+1}^t * u_{k+1}[i]
    y~_j[k] = sqrt(n) * s_{k+1}^t * v_{k+1}[j]        (k = 1..q)

At t = 0 these are, among all pairs of zero-mean, unit-second-moment,
uncorrelated-coordinate configurations, the minimizers of the plan-weighted
alignment cost sum_ij ||x'_i - y'_j||^2 W_ij.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionError, InputError, PlanNotConvergedError
from .linalg import truncated_svd
from .transport import TransportPlan, transport_plan

DEFAULT_GAP_THRESHOLD = 0.02
_LEADING_VALUE_TOL = 1e-6
_TRIVIAL_VECTOR_TOL = 1e-6
_TIE_TOL = 1e-12


@dataclass(frozen=True)
class SpectralModel:
    """Leading singular triplets of a plan, with the trivial pair certified.

    ``s`` is descending with s[0] == 1 up to the certification tolerance;
    U and V carry the matching singular vectors as columns.
    """

    s: np.ndarray  # (k,)
    U: np.ndarray  # (m, k)
    V: np.ndarray  # (n, k)
    trivial_certified: bool


class DimensionSelection(NamedTuple):
    q: int
    degenerate: bool


@dataclass(frozen=True)
class JointEmbedding:
    """Aligned coordinates for both clouds.

    Xt has one row per point of the caller's X, Yt per point of Y; column k
    (0-based) is coordinate k+1 of the shared diffusion space.  ``s_used``
    are the q singular values behind the coordinates.
    """

    Xt: np.ndarray
    Yt: np.ndarray
    q: int
    t: int
    s_used: np.ndarray


def spectral_model(plan: TransportPlan, k: int) -> SpectralModel:
    """Compute k singular triplets of the plan and certify the leading pair.

    Raises PlanNotConvergedError when the leading singular value is not 1
    within 1e-6 or the leading vectors deviate entrywise by more than 1e-6
    from the constant vectors they must equal for a converged plan.
    """
    if not isinstance(plan, TransportPlan):
        raise InputError("plan must be a TransportPlan")
    m, n = plan.shape
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool):
        raise InputError(f"k must be an integer, got {k!r}")
    if k < 1 or k > min(m, n):
        raise DimensionError(f"k must be in [1, {min(m, n)}], got {k}")

    s, U, V = truncated_svd(plan.W, k)
    if abs(s[0] - 1.0) > _LEADING_VALUE_TOL:
        raise PlanNotConvergedError(
            f"leading singular value {s[0]:.12g} is not 1 within {_LEADING_VALUE_TOL:g}; "
            "the plan's marginals are off"
        )
    du = np.abs(U[:, 0] - 1.0 / np.sqrt(m)).max()
    dv = np.abs(V[:, 0] - 1.0 / np.sqrt(n)).max()
    if max(du, dv) > _TRIVIAL_VECTOR_TOL:
        raise PlanNotConvergedError(
            f"leading singular vectors deviate from the constant pair by {max(du, dv):.3e}"
        )
    return SpectralModel(s=s, U=U, V=V, trivial_certified=True)


def select_dimension(s, threshold: float = DEFAULT_GAP_THRESHOLD) -> DimensionSelection:
    """Pick the embedding dimension from consecutive singular-value ratios.

    Returns the largest index i (1-based, over the descending spectrum
    including the trivial leading value) with s_i / s_{i+1} >= 1 + threshold.
    A zero denominator under a positive numerator counts as an infinite
    ratio.  When no index qualifies the selection is reported as q=1 with
    the ``degenerate`` flag set.
    """
    s = np.asarray(s, dtype=float)
    if s.ndim != 1 or s.size < 2:
        raise InputError("s must be a 1-D spectrum with at least two values")
    if not np.isfinite(s).all():
        raise InputError("s contains non-finite values")
    if (s < 0).any() or (np.diff(s) > 0).any():
        raise InputError("s must be nonnegative and non-increasing")
    if not np.isfinite(threshold) or threshold <= 0:
        raise InputError(f"threshold must be positive, got {threshold!r}")

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ratios = s[:-1] / s[1:]
    qualifying = np.where(np.isnan(ratios), False, ratios >= 1.0 + threshold)
    if not qualifying.any():
        return DimensionSelection(q=1, degenerate=True)
    return DimensionSelection(q=int(np.nonzero(qualifying)[0][-1] + 1), degenerate=False)


def embed_from_model(model: SpectralModel, plan: TransportPlan, q: int, t: int) -> JointEmbedding:
    """Assemble embedding coordinates from an existing spectral model.

    Equivalent to :func:`eot_eigenmaps` with a precomputed plan and model;
    useful when the model is also needed for other purposes (spectra,
    diffusion distances) and should only be computed once.
    """
    if not isinstance(model, SpectralModel):
        raise InputError("model must be a SpectralModel")
    if not isinstance(plan, TransportPlan):
        raise InputError("plan must be a TransportPlan")
    if not isinstance(t, (int, np.integer)) or isinstance(t, bool) or t < 0:
        raise InputError(f"t must be a nonnegative integer, got {t!r}")
    m, n = plan.shape
    if model.U.shape[0] != m or model.V.shape[0] != n:
        raise InputError("model does not match the plan's shape")
    if not isinstance(q, (int, np.integer)) or isinstance(q, bool):
        raise InputError(f"q must be an integer, got {q!r}")
    if q < 1 or q > m - 1:
        raise DimensionError(f"q must be in [1, {m - 1}], got {q}")
    return _embed_from_model(model, q=int(q), t=int(t), m=m, n=n, swapped=plan.swapped)


def _embed_from_model(
    model: SpectralModel, q: int, t: int, m: int, n: int, swapped: bool
) -> JointEmbedding:
    """Assemble coordinates from triplets 2..q+1 of a certified model."""
    if model.s.size < q + 1:
        raise DimensionError(f"model holds {model.s.size} triplets, need {q + 1}")
    if model.s.size >= q + 2 and abs(model.s[q] - model.s[q + 1]) <= _TIE_TOL:
        warnings.warn(
            f"singular values {q + 1} and {q + 2} coincide within {_TIE_TOL:g}; "
            "the last embedding coordinate is only defined up to rotation",
            RuntimeWarning,
            stacklevel=3,
        )
    factors = model.s[1 : q + 1] ** t
    A = np.sqrt(m) * model.U[:, 1 : q + 1] * factors[None, :]
    B = np.sqrt(n) * model.V[:, 1 : q + 1] * factors[None, :]
    Xt, Yt = (B, A) if swapped else (A, B)
    return JointEmbedding(Xt=Xt, Yt=Yt, q=q, t=t, s_used=model.s[1 : q + 1].copy())


def eot_eigenmaps(
    X,
    Y,
    q="auto",
    t: int = 0,
    epsilon="median",
    tol: float = 1e-10,
    max_iter: int = 10000,
    gap_threshold: float = DEFAULT_GAP_THRESHOLD,
    plan: TransportPlan | None = None,
) -> JointEmbedding:
    """Jointly embed two clouds via the spectrum of their entropic plan.

    Parameters
    ----------
    X, Y : point clouds with a shared feature dimension
    q : embedding dimension (1 <= q <= min(m,n)-1), or "auto" to pick it by
        the spectral-ratio rule (emits a warning when the spectrum is too
        flat to choose and q falls back to 1)
    t : diffusion time, a nonnegative integer; t=0 gives the
        constraint-optimal alignment coordinates
    epsilon : kernel bandwidth, a positive number or "median"
    tol, max_iter : Sinkhorn convergence controls
    plan : optionally, a precomputed plan for these clouds (epsilon/tol/
        max_iter are then ignored)

    Returns
    -------
    JointEmbedding in the caller's order (Xt aligns with X's rows).
    """
    if not isinstance(t, (int, np.integer)) or isinstance(t, bool) or t < 0:
        raise InputError(f"t must be a nonnegative integer, got {t!r}")
    if plan is None:
        plan = transport_plan(X, Y, epsilon=epsilon, tol=tol, max_iter=max_iter)
    m, n = plan.shape

    if isinstance(q, str):
        if q != "auto":
            raise InputError(f'q must be a positive integer or "auto", got {q!r}')
        model = spectral_model(plan, k=m)
        selection = select_dimension(model.s, threshold=gap_threshold)
        if selection.degenerate:
            warnings.warn(
                "no singular-value ratio clears the selection threshold; "
                "falling back to q=1",
                RuntimeWarning,
                stacklevel=2,
            )
        q = selection.q
    else:
        if not isinstance(q, (int, np.integer)) or isinstance(q, bool):
            raise InputError(f'q must be a positive integer or "auto", got {q!r}')
        if q < 1 or q > m - 1:
            raise DimensionError(f"q must be in [1, {m - 1}], got {q}")
        model = spectral_model(plan, k=min(m, q + 2))

    sw = plan.swapped
    x_rows, y_rows = (n, m) if sw else (m, n)
    emb = _embed_from_model(model, q=q, t=int(t), m=m, n=n, swapped=sw)
    if emb.Xt.shape[0] != x_rows or emb.Yt.shape[0] != y_rows:  # pragma: no cover
        raise InputError("embedding rows do not match the input clouds")
    return emb


def embedding_cost(emb: JointEmbedding, plan: TransportPlan) -> float:
    """Plan-weighted alignment cost sum_ij ||x~_i - y~_j||^2 W_ij."""
    if not isinstance(emb, JointEmbedding):
        raise InputError("emb must be a JointEmbedding")
    if not isinstance(plan, TransportPlan):
        raise InputError("plan must be a TransportPlan")
    A = emb.Yt if plan.swapped else emb.Xt  # rows side of the stored W
    B = emb.Xt if plan.swapped else emb.Yt
    m, n = plan.shape
    if A.shape[0] != m or B.shape[0] != n:
        raise InputError("embedding does not match the plan's shape")
    if A.shape[1] != B.shape[1]:
        raise InputError("embedding blocks must share their dimension")
    row_sums = plan.W.sum(axis=1)
    col_sums = plan.W.sum(axis=0)
    cross = np.einsum("ik,ij,jk->", A, plan.W, B)
    return float(
        row_sums @ np.einsum("ij,ij->i", A, A)
        + col_sums @ np.einsum("ij,ij->i", B, B)
        - 2.0 * cross
    )


__all__ = [
    "SpectralModel",
    "DimensionSelection",
    "JointEmbedding",
    "spectral_model",
    "select_dimension",
    "eot_eigenmaps",
    "embed_from_model",
    "embedding_cost",
    "DEFAULT_GAP_THRESHOLD",
]
