"""Shared dense/sparse linear-algebra helpers.

Everything here works on plain numpy arrays / scipy sparse matrices; the
operator-level wrappers live in :mod:`commutant_lab.operators`.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

#: absolute tolerance on max-norm hermiticity deviations
TOL_HERM = 1e-10
#: relative tolerance for rank / linear-independence decisions
TOL_RANK = 1e-9
#: relative eigenvalue cutoff for PSD nullspace extraction
TOL_NULL = 1e-9
#: absolute eigenvalue-merging tolerance for unit-norm central elements
TOL_EIG = 1e-7
#: principal-angle threshold: subspaces agree where cos(theta) >= 1 - this
TOL_ANGLE = 1e-8


class SolverLimitError(RuntimeError):
    """A solve was requested above the configured size limit."""


def numerical_rank(a: np.ndarray, rtol: float = TOL_RANK) -> int:
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rtol * s[0]))


def orthonormal_columns(a: np.ndarray, rtol: float = TOL_RANK) -> np.ndarray:
    """Orthonormal basis for the column space of ``a`` (may be empty)."""
    if a.size == 0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    return np.ascontiguousarray(u[:, s > rtol * s[0]])


def _diagonal_part(p: sp.spmatrix):
    """Return (diag, offdiag_max) of a sparse matrix."""
    d = np.asarray(p.diagonal())
    q = p.tocoo(copy=True)
    mask = q.row != q.col
    off = np.max(np.abs(q.data[mask])) if np.any(mask) else 0.0
    return d, off


def nullspace_psd(
    p,
    cutoff_rel: float = TOL_NULL,
    dense_limit: int = 4096,
    k_hint: int = 32,
) -> np.ndarray:
    """Orthonormal nullspace basis of a positive-semidefinite matrix.

    Dense eigendecomposition below ``dense_limit``; otherwise shift-invert
    Lanczos from the bottom of the spectrum, doubling the block size until a
    clearly nonzero eigenvalue has been seen.  A diagonal matrix short-circuits
    to exact coordinate vectors.
    """
    n = p.shape[0]
    if sp.issparse(p):
        diag, off = _diagonal_part(p)
        scale = max(np.max(np.abs(diag)), off, 1.0)
        if off <= 1e-14 * scale:
            # exactly diagonal constraint matrix: read the nullspace off
            idx = np.flatnonzero(np.abs(diag) <= cutoff_rel * scale)
            basis = np.zeros((n, idx.size), dtype=complex)
            basis[idx, np.arange(idx.size)] = 1.0
            return basis
        if n <= dense_limit:
            p = p.toarray()
    if not sp.issparse(p):
        w, v = np.linalg.eigh((p + p.conj().T) / 2.0)
        wmax = max(w[-1], 0.0)
        cutoff = cutoff_rel * max(wmax, 1.0)
        return np.ascontiguousarray(v[:, w <= cutoff])

    # sparse iterative path
    p = p.tocsc()
    wmax = float(
        spla.eigsh(p, k=1, which="LA", return_eigenvectors=False, tol=1e-3)[0]
    )
    cutoff = cutoff_rel * max(wmax, 1.0)
    k = min(max(k_hint, 8), n - 2)
    while True:
        w, v = spla.eigsh(p, k=k, sigma=-1e-6 * max(wmax, 1.0), which="LM")
        order = np.argsort(w)
        w, v = w[order], v[:, order]
        if w[-1] > cutoff or k >= n - 2:
            break
        k = min(2 * k, n - 2)
    keep = w <= cutoff
    return orthonormal_columns(v[:, keep]) if np.any(keep) else np.zeros(
        (n, 0), dtype=complex
    )


def subspace_intersection(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Orthonormal basis of span(u) ∩ span(v) via principal angles.

    Both inputs must have orthonormal columns.  Directions with principal
    angle cos(theta) >= 1 - TOL_ANGLE are counted as shared.
    """
    if u.shape[1] == 0 or v.shape[1] == 0:
        return np.zeros((u.shape[0], 0), dtype=complex)
    y, s, _ = np.linalg.svd(u.conj().T @ v, full_matrices=False)
    shared = s >= 1.0 - TOL_ANGLE
    return orthonormal_columns(u @ y[:, shared]) if np.any(shared) else np.zeros(
        (u.shape[0], 0), dtype=complex
    )


def subspaces_equal(u: np.ndarray, v: np.ndarray) -> bool:
    if u.shape[1] != v.shape[1]:
        return False
    if u.shape[1] == 0:
        return True
    s = np.linalg.svd(u.conj().T @ v, compute_uv=False)
    return bool(np.min(s) >= 1.0 - TOL_ANGLE)


def project_out(vectors: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Remove the span of ``basis`` (orthonormal columns) from each column."""
    if basis.shape[1] == 0:
        return vectors
    r = vectors - basis @ (basis.conj().T @ vectors)
    # one re-orthogonalization pass for numerical hygiene
    return r - basis @ (basis.conj().T @ r)
