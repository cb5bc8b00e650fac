"""Codimension diagnostics: overlap matrices, missing symmetry directions.

The central objects are the overlap matrix ``S`` between a basis of the
center and the gate-set generators, and the two codimension counts

* ``codim_weak``  -- dimension of the center minus the rank of ``S``,
* ``codim_exact`` -- dimension of the bond algebra minus the dimension of
  the dynamical Lie algebra,

both with the identity direction excluded consistently.  A strictly
positive ``codim_weak`` certifies missing symmetry directions (central
elements orthogonal to every generator); ``missing_scar_basis`` returns
an orthonormal basis of them and ``missing_unitary`` exponentiates one
into a symmetry unitary that no circuit built from the gate set can
realize.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
import scipy.sparse as sp

from ._linalg import TOL_RANK, orthonormal_columns
from .catalog import GateSet
from .closure import OperatorBasis, empty_basis
from .operators import Operator

__all__ = [
    "overlap_matrix",
    "codim_weak",
    "codim_exact",
    "missing_scar_basis",
    "missing_unitary",
]


def _identity_vector(dim: int) -> np.ndarray:
    """Vectorized, HS-normalized identity on a ``dim``-dimensional space."""
    vec = np.zeros(dim * dim, dtype=complex)
    vec[:: dim + 1] = 1.0
    return vec / np.sqrt(dim)


def _without_identity(basis: OperatorBasis) -> np.ndarray:
    """Orthonormal basis of ``span(basis)`` with the identity direction removed.

    Returns a ``(dim**2, m)`` column matrix.  If the identity is not in the
    span the result simply spans the same space as ``basis``.
    """
    dim = basis.geometry.dim
    idv = _identity_vector(dim)
    mat = basis.matrix
    # Project the identity component out of every column, then re-orthonormalize.
    deflated = mat - np.outer(idv, idv.conj() @ mat)
    return orthonormal_columns(deflated)


def overlap_matrix(center: OperatorBasis, gates: GateSet) -> np.ndarray:
    """Overlap matrix ``S[l, a] = <Z_l, h_a>`` (HS inner product).

    Rows run over the elements of ``center`` in basis order, columns over
    the generators of ``gates``.  No identity handling is applied here;
    the codimension helpers deflate the identity themselves.
    """
    if center.geometry.dim != gates.geometry.dim:
        raise ValueError("center basis and gate set live on different spaces")
    rows = center.dimension
    cols = len(gates.generators)
    out = np.empty((rows, cols), dtype=complex)
    for a, gen in enumerate(gates.generators):
        out[:, a] = center.matrix.conj().T @ gen.dense().ravel()
    return out


def _overlap_from_columns(columns: np.ndarray, gates: GateSet) -> np.ndarray:
    cols = [g.dense().ravel() for g in gates.generators]
    gmat = np.column_stack(cols) if cols else np.zeros((columns.shape[0], 0))
    return columns.conj().T @ gmat


def _overlap_rank(smat: np.ndarray, gates: GateSet) -> int:
    """Rank of an overlap matrix with an absolute noise floor.

    A purely relative threshold miscounts an overlap matrix that is zero
    up to rounding (largest singular value ~1e-16) as rank one.  Since the
    rows come from orthonormal center elements, every true overlap is
    bounded by a generator norm, so generator norms set the scale.
    """
    if smat.size == 0:
        return 0
    svals = np.linalg.svd(smat, compute_uv=False)
    gen_scale = max((g.norm() for g in gates.generators), default=1.0)
    floor = TOL_RANK * max(svals[0], gen_scale, 1.0)
    return int(np.count_nonzero(svals > floor))


def codim_weak(center: OperatorBasis, gates: GateSet) -> int:
    """Number of central directions invisible to the gate set.

    Computed as ``dim(center') - rank(S')`` where the prime denotes that
    the identity direction has been projected out of the center (and
    thereby out of the overlap rows).  Zero means every non-trivial
    central direction overlaps some generator.
    """
    columns = _without_identity(center)
    if columns.shape[1] == 0:
        return 0
    smat = _overlap_from_columns(columns, gates)
    return int(columns.shape[1] - _overlap_rank(smat, gates))


def codim_exact(bond: OperatorBasis, dla: OperatorBasis) -> int:
    """Dimension gap between the bond algebra and the dynamical Lie algebra.

    The identity direction is excluded from both sides: each span is first
    augmented with the identity and the difference of the augmented
    dimensions is returned, so sets whose Lie closure misses only the
    identity (or global phases) count as gap zero.
    """
    if bond.geometry.dim != dla.geometry.dim:
        raise ValueError("bond and Lie-algebra bases live on different spaces")
    dim = bond.geometry.dim
    idv = _identity_vector(dim)
    bond_aug = orthonormal_columns(np.column_stack([bond.matrix, idv]))
    dla_aug = orthonormal_columns(np.column_stack([dla.matrix, idv]))
    gap = bond_aug.shape[1] - dla_aug.shape[1]
    if gap < 0:
        raise ValueError(
            "Lie algebra span exceeds the bond algebra span; "
            "the inputs are inconsistent"
        )
    return int(gap)


def missing_scar_basis(center: OperatorBasis, gates: GateSet) -> OperatorBasis:
    """Orthonormal basis of central directions orthogonal to all generators.

    The identity direction is excluded first, so a traceless gate set does
    not report the identity as a missing direction.  The returned basis
    has ``codim_weak(center, gates)`` elements and every element ``Z``
    satisfies ``<Z, h_a> = 0`` for all generators ``h_a``.
    """
    columns = _without_identity(center)
    geometry = center.geometry
    if columns.shape[1] == 0:
        return empty_basis(geometry, "missing-scars")
    smat = _overlap_from_columns(columns, gates)
    # A combination Z = sum_l c_l Z_l has <Z, h_a> = sum_l conj(c_l) S[l, a];
    # vanishing for all a means conj(c) lies in the left null space of S.
    _, svals, vh = np.linalg.svd(smat.conj().T, full_matrices=True)
    gen_scale = max((g.norm() for g in gates.generators), default=1.0)
    floor = TOL_RANK * max(svals[0] if svals.size else 0.0, gen_scale, 1.0)
    rank = int(np.sum(svals > floor))
    coeffs = vh[rank:].conj().T  # columns: null combinations, orthonormal
    vectors = columns @ coeffs
    return OperatorBasis(geometry, np.ascontiguousarray(vectors), "missing-scars")


def missing_unitary(
    scar: Operator,
    theta: float,
    projectors: Sequence[Operator] | None = None,
) -> Operator:
    """Symmetry unitary ``exp(i * theta * scar)`` for a Hermitian scar.

    When ``projectors`` (the joint spectral projectors of the center, e.g.
    from ``sector_projectors``) are supplied, the exponential is assembled
    sector by sector as ``sum_lambda exp(i theta c_lambda) Pi_lambda``
    with ``c_lambda`` the constant value of ``scar`` on that sector.
    Otherwise an eigendecomposition of ``scar`` is used.  The result is
    validated to be unitary.
    """
    geometry = scar.geometry
    dense = scar.dense()
    herm_dev = np.linalg.norm(dense - dense.conj().T)
    if herm_dev > 1e-10 * max(np.linalg.norm(dense), 1.0):
        raise ValueError(
            f"scar operator must be Hermitian (deviation {herm_dev:.3e})"
        )
    dense = (dense + dense.conj().T) / 2.0
    if projectors is not None:
        total = np.zeros_like(dense)
        recon = np.zeros_like(dense)
        for proj in projectors:
            pmat = proj.dense()
            weight = pmat.trace().real
            if weight < 0.5:
                raise ValueError("projector with vanishing rank supplied")
            value = np.trace(pmat @ dense).real / weight
            total += np.exp(1j * theta * value) * pmat
            recon += value * pmat
        if np.linalg.norm(recon - dense) > 1e-8 * max(np.linalg.norm(dense), 1.0):
            raise ValueError(
                "scar is not constant on the supplied sector projectors"
            )
        umat = total
    else:
        evals, evecs = np.linalg.eigh(dense)
        umat = (evecs * np.exp(1j * theta * evals)) @ evecs.conj().T
    dim = geometry.dim
    unit_dev = np.linalg.norm(umat @ umat.conj().T - np.eye(dim))
    if unit_dev > 1e-9 * dim:
        raise ValueError(f"assembled operator is not unitary (deviation {unit_dev:.3e})")
    return Operator(geometry, sp.csr_matrix(umat))
