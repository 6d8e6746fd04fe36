"""Small dense linear-algebra kernels shared by the samplers.

Everything here wraps LAPACK through numpy; the wrappers add input
validation, symmetrization and a fixed sign convention for eigenvectors so
that parameter preprocessing is reproducible for a given input.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ConvergenceFailure, NotPositiveDefinite, NotSymmetric

SYM_TOL = 1e-8


class SymEigen(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


class SignedSvd3(NamedTuple):
    u: np.ndarray
    delta: np.ndarray
    v: np.ndarray


def symmetrize(a, tol: float = SYM_TOL) -> np.ndarray:
    """Return ``(a + a.T) / 2`` after checking ``a`` is square and symmetric.

    Works on a single matrix or a stack of matrices (last two axes).
    """
    a = np.asarray(a, dtype=float)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError(f"expected square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    at = np.swapaxes(a, -1, -2)
    scale = np.max(np.abs(a)) if a.size else 0.0
    if np.max(np.abs(a - at), initial=0.0) > tol * scale:
        raise NotSymmetric("matrix is not symmetric within tolerance")
    return 0.5 * (a + at)


def _fix_signs(v: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of every column made positive (first one on ties)
    idx = np.argmax(np.abs(v), axis=-2)
    pivots = np.take_along_axis(v, idx[..., None, :], axis=-2)
    return v * np.where(pivots < 0, -1.0, 1.0)


def sym_eigen(a) -> SymEigen:
    """Eigendecomposition of a real symmetric matrix.

    Eigenvalues are returned in ascending order, eigenvectors as the
    columns of an orthogonal matrix.  Each eigenvector is normalised so its
    largest-magnitude entry is positive.

    Raises
    ------
    NotSymmetric
        If ``a`` is asymmetric beyond ``1e-8 * max|a|``.
    ConvergenceFailure
        If LAPACK fails to converge.
    """
    a = symmetrize(a)
    if a.ndim != 2 or a.shape[0] < 2:
        raise ValueError("sym_eigen needs a single q x q matrix with q >= 2")
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return SymEigen(w, _fix_signs(v))


def chol_lower(a) -> np.ndarray:
    """Lower Cholesky factor ``L`` with ``L @ L.T == a``."""
    a = symmetrize(a)
    try:
        low = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    if np.any(np.diagonal(low, axis1=-2, axis2=-1) <= 0):
        raise NotPositiveDefinite("non-positive pivot")
    return low


def sym_inv_sqrt(a) -> np.ndarray:
    """Inverse symmetric square root ``a^{-1/2}`` of an SPD matrix.

    Accepts a stack of matrices; the result has the same shape.
    """
    a = symmetrize(a)
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    if np.any(w <= 0):
        raise NotPositiveDefinite("matrix has a non-positive eigenvalue")
    return (v / np.sqrt(w)[..., None, :]) @ np.swapaxes(v, -1, -2)


def signed_svd3(f) -> SignedSvd3:
    """Signed SVD ``f = u @ diag(delta) @ v.T`` with ``u, v`` in SO(3).

    ``delta[0] >= delta[1] >= |delta[2]|`` and ``delta[2] < 0`` exactly
    when ``det(f) < 0``.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError("matrix has non-finite entries")
    try:
        u, d, vt = np.linalg.svd(f)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    v = vt.T.copy()
    d = d.copy()
    if np.linalg.det(u) < 0:
        u[:, 2] *= -1
        d[2] *= -1
    if np.linalg.det(v) < 0:
        v[:, 2] *= -1
        d[2] *= -1
    if d[2] == 0.0:
        d[2] = 0.0  # no negative zero
    return SignedSvd3(u, d, v)
