"""Commutant, center, sector projectors, and irrep dimensions.

The commutant is the nullspace of the positive semidefinite superoperator
P2 = sum_a L_a^2 with L_a the adjoint action of generator a.  A graph
shortcut handles the common case where diagonal generators pin the
commutant to diagonal matrices; the generic route eigendecomposes P2.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from ._linalg import (
    TOL_EIG,
    TOL_NULL,
    TOL_RANK,
    SolverLimitError,
    numerical_rank,
    nullspace_psd,
    subspace_intersection,
)
from .closure import (
    OperatorBasis,
    associative_closure,
    hermitian_representatives,
)
from .operators import (
    Operator,
    SuperOperator,
    adjoint_superop,
)


def p2_superoperator(gates) -> SuperOperator:
    """P2 = sum over generators of the squared adjoint action (sparse)."""
    geom = gates.geometry
    n = geom.dim**2
    acc = sp.csr_matrix((n, n), dtype=complex)
    for g in gates.generators:
        lg = adjoint_superop(g).entries
        acc = acc + lg @ lg
    return SuperOperator(geom, acc)


def _diagonal_profile_classes(gates):
    """If the diagonal generators distinguish every basis state, return the
    class id of each state under the full commutant constraints, else None.

    With injective diagonal profiles any commuting Q must itself be
    diagonal, and the off-diagonal generators then force Q to be constant
    on connected components of their support graph.
    """
    d = gates.geometry.dim
    diag_rows = []
    offdiag = sp.csr_matrix((d, d), dtype=np.int32)
    for g in gates.generators:
        m = g.entries.tocoo()
        off = m.row != m.col
        if off.any():
            offdiag = offdiag + sp.coo_matrix(
                (np.ones(int(off.sum()), dtype=np.int32), (m.row[off], m.col[off])),
                shape=(d, d),
            ).tocsr()
        else:
            diag_rows.append(g.entries.diagonal().real)
    if not diag_rows:
        return None
    profile = np.round(np.array(diag_rows), 9)
    # the purely diagonal generators must single out every basis state,
    # otherwise a commuting Q need not be diagonal
    if np.unique(profile, axis=1).shape[1] != d:
        return None
    n_comp, labels = connected_components(offdiag, directed=False)
    return labels


def commutant(gates, tol: float = TOL_NULL) -> OperatorBasis:
    """Orthonormal basis of {Q : [Q, h_a] = 0 for every generator}."""
    geom = gates.geometry
    d = geom.dim

    labels = _diagonal_profile_classes(gates)
    if labels is not None:
        n_comp = labels.max() + 1
        cols = np.zeros((d * d, n_comp), dtype=complex)
        for c in range(n_comp):
            idx = np.flatnonzero(labels == c)
            cols[idx * d + idx, c] = 1.0 / np.sqrt(idx.size)
        basis = OperatorBasis(geom, cols, f"commutant({gates.name})")
    else:
        p2 = p2_superoperator(gates)
        null = nullspace_psd(p2.entries, cutoff_rel=tol)
        basis = OperatorBasis(geom, null, f"commutant({gates.name})")

    _validate_commutant(basis, gates)
    return basis


def _validate_commutant(basis, gates) -> None:
    mats = basis.matrices()
    for g in gates.generators:
        h = g.dense()
        scale = max(np.linalg.norm(h), 1.0)
        res = h @ mats - mats @ h
        worst = np.abs(res).max() if res.size else 0.0
        if worst > 1e-7 * scale:
            raise ValueError(
                f"commutant validation failed: residual {worst:.3e} "
                f"against generator of norm {scale:.3e}"
            )


def bond_algebra(gates, tol: float = TOL_RANK, max_dim: int | None = None,
                 method: str = "auto") -> OperatorBasis:
    """The associative *-algebra generated by the gate set.

    method "closure" multiplies out a worklist; "double_commutant" solves
    for everything commuting with the commutant (the two agree, and the
    latter scales to larger chains); "auto" picks by size.
    """
    geom = gates.geometry
    d = geom.dim
    if method == "auto":
        method = "closure" if d <= 32 else "double_commutant"
    if method == "closure":
        out = associative_closure(list(gates.generators), tol, max_dim)
        out.span_label = f"bond({gates.name})"
        return out
    if method != "double_commutant":
        raise ValueError(f"unknown method {method!r}")

    comm = commutant(gates, tol)
    reps = hermitian_representatives(comm)
    if all((r.entries - sp.diags(r.entries.diagonal())).nnz == 0 for r in reps):
        # everything commuting with a diagonal commutant is supported on
        # index pairs with identical commutant profiles
        prof = np.round(np.array([r.entries.diagonal().real for r in reps]), 9)
        _, sector_of = np.unique(prof, axis=1, return_inverse=True)
        cols = []
        for s in range(sector_of.max() + 1):
            idx = np.flatnonzero(sector_of == s)
            for i in idx:
                for j in idx:
                    cols.append(i * d + j)
        mat = sp.coo_matrix(
            (np.ones(len(cols)), (np.array(cols), np.arange(len(cols)))),
            shape=(d * d, len(cols)),
        )
        return OperatorBasis(geom, mat.toarray().astype(complex), f"bond({gates.name})")

    # generic route: find a small generating set of the commutant, then
    # take its commutant (double commutant theorem)
    rng = np.random.default_rng(17)
    m = comm.dimension
    for attempt in range(3):
        combos = []
        for _ in range(2 + attempt):
            c = rng.standard_normal(len(reps))
            r = sum(ci * ri.dense() for ci, ri in zip(c, reps))
            combos.append(r)
        # only the dimension is wanted here, so a coarse tolerance is safe
        # and keeps borderline roundoff in ill-scaled commutants (products of
        # nearly orthogonal projectors) from inflating the count
        gen_dim = associative_closure(
            [Operator(geom, sp.csr_matrix(r), "yes") for r in combos],
            max(tol, 1e-7),
            max_dim=m + 1,
        ).dimension
        if gen_dim == m:
            break
    else:
        raise SolverLimitError("could not find a small generating set of the commutant")

    if d > 64:
        raise SolverLimitError(
            f"double-commutant solve needs a dense {d*d} x {d*d} matrix; "
            "beyond the desk-scale limit"
        )
    n = d * d
    p = np.zeros((n, n), dtype=complex)
    eye = np.eye(d)
    for r in combos:
        p += np.kron(r @ r, eye) - 2 * np.kron(r, r.T) + np.kron(eye, (r @ r).T)
    null = nullspace_psd(p, cutoff_rel=tol)
    return OperatorBasis(geom, null, f"bond({gates.name})")


def center(bond: OperatorBasis, comm: OperatorBasis) -> OperatorBasis:
    """Intersection of bond algebra and commutant, via principal angles."""
    if bond.geometry != comm.geometry:
        raise ValueError("geometry mismatch")
    inter = subspace_intersection(bond.matrix, comm.matrix)
    return OperatorBasis(bond.geometry, inter, "center")


def _validate_multiplicative_closure(basis: OperatorBasis, reps) -> None:
    probes = reps if len(reps) <= 40 else reps[:40]
    for a in probes:
        for b in probes:
            prod = (a.entries @ b.entries).toarray().ravel()
            if np.linalg.norm(prod) <= 1e-12 * a.norm() * b.norm():
                continue  # numerically zero product
            if not basis.contains(prod, 1e-8):
                raise ValueError("center basis is not closed under multiplication")


def sector_projectors(center_basis: OperatorBasis, seed: int = 0,
                      max_rounds: int = 8) -> list:
    """Minimal orthogonal projectors spanning an abelian *-closed span.

    Eigendecomposes a seeded random self-adjoint central element and
    refines with further random elements until the projector count equals
    dim(center).
    """
    geom = center_basis.geometry
    d = geom.dim
    m = center_basis.dimension
    reps = hermitian_representatives(center_basis)
    _validate_multiplicative_closure(center_basis, reps)
    rep_mats = [r.dense() for r in reps]

    rng = np.random.default_rng(seed)
    # ranges of current projectors, as orthonormal column blocks
    blocks = [np.eye(d, dtype=complex)]
    for _ in range(max_rounds):
        if len(blocks) == m:
            break
        coeff = rng.standard_normal(m)
        r = sum(c * mat for c, mat in zip(coeff, rep_mats))
        r = r / max(np.linalg.norm(r), 1e-300)
        new_blocks = []
        for w in blocks:
            b = w.conj().T @ r @ w
            vals, vecs = np.linalg.eigh((b + b.conj().T) / 2)
            start = 0
            for i in range(1, len(vals) + 1):
                if i == len(vals) or vals[i] - vals[i - 1] > TOL_EIG:
                    new_blocks.append(w @ vecs[:, start:i])
                    start = i
        blocks = new_blocks
    if len(blocks) != m:
        raise ValueError(
            f"projector refinement stalled at {len(blocks)} of {m} sectors"
        )

    projs = []
    for w in blocks:
        p = w @ w.conj().T
        projs.append(Operator(geom, sp.csr_matrix((p + p.conj().T) / 2), "yes"))
    _validate_projectors(projs, d)
    return projs


def _validate_projectors(projs, d) -> None:
    total = np.zeros((d, d), dtype=complex)
    for i, p in enumerate(projs):
        pm = p.dense()
        if np.abs(pm @ pm - pm).max() > 1e-9:
            raise ValueError("projector not idempotent")
        for q in projs[i + 1:]:
            if np.abs(pm @ q.dense()).max() > 1e-9:
                raise ValueError("projectors not mutually orthogonal")
        total += pm
    if np.abs(total - np.eye(d)).max() > 1e-9:
        raise ValueError("projectors do not sum to the identity")


def _restricted_dimension(proj_mat: np.ndarray, basis: OperatorBasis) -> int:
    mats = basis.matrices()
    res = proj_mat @ mats @ proj_mat
    return numerical_rank(res.reshape(res.shape[0], -1))


def irrep_dimensions(proj: Operator, bond: OperatorBasis, comm: OperatorBasis):
    """(D, d) for one sector: bond acts as full D x D blocks with
    multiplicity d; validated against the sector rank."""
    p = proj.dense()
    dsq_bond = _restricted_dimension(p, bond)
    dsq_comm = _restricted_dimension(p, comm)
    big_d = int(round(np.sqrt(dsq_bond)))
    small_d = int(round(np.sqrt(dsq_comm)))
    if big_d * big_d != dsq_bond or small_d * small_d != dsq_comm:
        raise ValueError(
            f"restricted dimensions {dsq_bond}, {dsq_comm} are not perfect squares"
        )
    rank = int(round(proj.trace().real))
    if big_d * small_d != rank:
        raise ValueError(
            f"D*d = {big_d}*{small_d} does not match sector rank {rank}"
        )
    return big_d, small_d


def sector_table(gates, seed: int = 0):
    """Convenience: projectors with (D, d) per sector plus the three bases.

    Returns (bond, comm, center, list of (projector, D, d)).
    """
    bond = bond_algebra(gates)
    comm = commutant(gates)
    z = center(bond, comm)
    projs = sector_projectors(z, seed)
    table = [(p,) + irrep_dimensions(p, bond, comm) for p in projs]
    dim_h = gates.geometry.dim
    if sum(dd * cc for _, dd, cc in table) != dim_h:
        raise ValueError("sector dimensions do not sum to dim(H)")
    if sum(dd * dd for _, dd, cc in table) != bond.dimension:
        raise ValueError("sum of D^2 does not match bond dimension")
    if sum(cc * cc for _, dd, cc in table) != comm.dimension:
        raise ValueError("sum of d^2 does not match commutant dimension")
    return bond, comm, z, table
