"""Dense linear-algebra primitives with deterministic sign conventions.

Everything downstream (plan factorization, spectra, embeddings) funnels
through the two decompositions here, so their conventions are pinned once:

* singular triplets and eigenpairs come out in deterministic order
  (descending values) with deterministic signs, so repeated runs on the same
  input are bitwise identical;
* the sign of each singular/eigen vector is fixed by making its
  largest-magnitude entry positive (first such entry on ties); for singular
  pairs the right vector is then aligned so that ``u^T A v >= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InputError, NumericalError

# Singular values at or below this are treated as numerically zero when a
# sign can no longer be inferred from u^T A v.
SINGULAR_FLOOR = 1e-12

_ORTHONORMALITY_TOL = 1e-10
_RESIDUAL_TOL = 1e-8
_SYMMETRY_TOL = 1e-12


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` (array-like or DataMatrix) to a validated float64 2-D array."""
    if isinstance(a, DataMatrix):
        return a.values
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2:
        raise InputError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InputError(f"{name} must have at least one row and one column, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise InputError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class DataMatrix:
    """A validated dense real matrix; rows are points, columns are features."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float, copy=True)
        if arr.ndim != 2:
            raise InputError(f"DataMatrix must be 2-D, got ndim={arr.ndim}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InputError(f"DataMatrix must be non-empty, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise InputError("DataMatrix contains non-finite entries")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class SymmetricEigen:
    """Leading eigenpairs of a symmetric matrix, values descending."""

    values: np.ndarray  # (k,)
    vectors: np.ndarray  # (n, k), orthonormal columns


def _fix_singular_signs(A: np.ndarray, s: np.ndarray, U: np.ndarray, V: np.ndarray):
    """Apply the deterministic sign convention in place.

    For each triplet the entry of u with the largest magnitude is made
    positive (u and v flip together, preserving the pair).  When s is above
    SINGULAR_FLOOR the pair already satisfies u^T A v = s >= 0; below it the
    residual product carries no sign information, so v gets the
    largest-entry rule independently.
    """
    k = s.size
    idx = np.argmax(np.abs(U), axis=0)
    flips = np.where(U[idx, np.arange(k)] < 0, -1.0, 1.0)
    U *= flips
    V *= flips
    degenerate = s <= SINGULAR_FLOOR
    if degenerate.any():
        Vd = V[:, degenerate]
        idx = np.argmax(np.abs(Vd), axis=0)
        vflips = np.where(Vd[idx, np.arange(Vd.shape[1])] < 0, -1.0, 1.0)
        V[:, degenerate] *= vflips
    else:
        # Defensive: realign any pair whose product came out negative.
        d = np.einsum("ij,ij->j", U, A @ V)
        V *= np.where(d < 0, -1.0, 1.0)


def truncated_svd(A, k: int):
    """Leading ``k`` singular triplets of a dense matrix.

    Parameters
    ----------
    A : array-like or DataMatrix, shape (m, n)
    k : int, 1 <= k <= min(m, n)

    Returns
    -------
    s : (k,) singular values, descending
    U : (m, k) left singular vectors, orthonormal columns
    V : (n, k) right singular vectors, orthonormal columns

    Signs follow the module convention, so results are reproducible
    bit-for-bit on identical input.
    """
    A = as_matrix(A, "A")
    m, n = A.shape
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool):
        raise InputError(f"k must be an integer, got {k!r}")
    if k < 1 or k > min(m, n):
        raise DimensionError(f"k must be in [1, {min(m, n)}], got {k}")

    if m <= n:
        U_full, s_full, Vt_full = np.linalg.svd(A, full_matrices=False)
        V_full = Vt_full.T
    else:
        # Work on the transpose so the small side drives the decomposition,
        # then swap the factors back.
        V_full, s_full, Ut_full = np.linalg.svd(A.T, full_matrices=False)
        U_full = Ut_full.T

    s = np.ascontiguousarray(s_full[:k])
    U = np.ascontiguousarray(U_full[:, :k])
    V = np.ascontiguousarray(V_full[:, :k])
    _fix_singular_signs(A, s, U, V)

    if not (np.isfinite(s).all() and np.isfinite(U).all() and np.isfinite(V).all()):
        raise NumericalError("SVD produced non-finite factors")
    return s, U, V


def symmetric_eigen(A, k: int) -> SymmetricEigen:
    """Leading ``k`` eigenpairs (by algebraic value, descending) of a symmetric matrix.

    The input must be symmetric to within 1e-12 entrywise.  Vector signs
    follow the largest-entry convention.
    """
    A = as_matrix(A, "A")
    n, n2 = A.shape
    if n != n2:
        raise InputError(f"A must be square, got shape {A.shape}")
    if np.abs(A - A.T).max() > _SYMMETRY_TOL:
        raise InputError("A is not symmetric to within 1e-12")
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool):
        raise InputError(f"k must be an integer, got {k!r}")
    if k < 1 or k > n:
        raise DimensionError(f"k must be in [1, {n}], got {k}")

    w, Q = np.linalg.eigh(A)
    w = np.ascontiguousarray(w[::-1][:k])
    Q = np.ascontiguousarray(Q[:, ::-1][:, :k])
    idx = np.argmax(np.abs(Q), axis=0)
    Q *= np.where(Q[idx, np.arange(k)] < 0, -1.0, 1.0)

    gram = Q.T @ Q
    if np.abs(gram - np.eye(k)).max() > _ORTHONORMALITY_TOL:
        raise NumericalError("eigenvectors lost orthonormality")
    scale = max(np.abs(A).max(), 1e-300)
    if np.abs(A @ Q - Q * w).max() > _RESIDUAL_TOL * scale:
        raise NumericalError("eigen-decomposition residual too large")
    return SymmetricEigen(values=w, vectors=Q)
