"""Lie and associative closures with orthonormal-basis bookkeeping.

All spans are complex-linear.  Universality questions are unaffected by
closing over C instead of R, and Hermitian representatives of a *-closed
span can be reconstructed on demand (`hermitian_representatives`).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ._linalg import TOL_RANK, orthonormal_columns

# Products and commutators of unit-norm operators whose result lands below
# this floor are indistinguishable from accumulated rounding; they must not
# enter a closure, where the relative acceptance test would otherwise admit
# pure noise directions.
NOISE_FLOOR = 1e-12
from .operators import (
    ChainGeometry,
    Operator,
    VectorizedOperator,
    identity_operator,
)


@dataclass
class OperatorBasis:
    """An orthonormal set of vectorized operators spanning a subspace.

    ``matrix`` has one orthonormal column per element (length dim^2).
    """

    geometry: ChainGeometry
    matrix: np.ndarray
    span_label: str = ""
    incomplete: bool = False

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.geometry.dim**2:
            raise ValueError("basis matrix must be dim^2 x n")

    @property
    def dimension(self) -> int:
        return self.matrix.shape[1]

    @property
    def elements(self) -> list:
        return [
            VectorizedOperator(self.geometry, self.matrix[:, j])
            for j in range(self.dimension)
        ]

    def matrices(self) -> np.ndarray:
        """Elements reshaped to a (n, d, d) stack."""
        d = self.geometry.dim
        return np.ascontiguousarray(self.matrix.T).reshape(-1, d, d)

    def gram(self) -> np.ndarray:
        return self.matrix.conj().T @ self.matrix

    def project_coefficients(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix.conj().T @ np.asarray(vec, dtype=complex).ravel()

    def residual(self, vec: np.ndarray) -> np.ndarray:
        v = np.asarray(vec, dtype=complex).ravel()
        r = v - self.matrix @ (self.matrix.conj().T @ v)
        # one re-orthogonalization pass
        return r - self.matrix @ (self.matrix.conj().T @ r)

    def contains(self, vec: np.ndarray, tol: float = TOL_RANK) -> bool:
        v = np.asarray(vec, dtype=complex).ravel()
        n = np.linalg.norm(v)
        if n == 0:
            return True
        return np.linalg.norm(self.residual(v)) <= tol * n


def empty_basis(geom: ChainGeometry, span_label: str = "") -> OperatorBasis:
    return OperatorBasis(geom, np.zeros((geom.dim**2, 0), dtype=complex), span_label)


def _as_vector(candidate, geom) -> np.ndarray:
    if isinstance(candidate, Operator):
        if candidate.geometry != geom:
            raise ValueError("geometry mismatch")
        return candidate.dense().ravel()
    if isinstance(candidate, VectorizedOperator):
        if candidate.geometry != geom:
            raise ValueError("geometry mismatch")
        return candidate.coefficients
    return np.asarray(candidate, dtype=complex).ravel()


def extend_basis(basis: OperatorBasis, candidate, tol: float = TOL_RANK) -> str:
    """Orthogonalize candidate against the basis; append if independent.

    Returns "added" or "rejected".  Modified Gram-Schmidt with one
    re-orthogonalization pass; the candidate joins iff its residual norm
    exceeds tol times its own norm.
    """
    v = _as_vector(candidate, basis.geometry)
    nv = np.linalg.norm(v)
    r = basis.residual(v)
    nr = np.linalg.norm(r)
    if nr <= tol * nv or nr == 0.0:
        return "rejected"
    basis.matrix = np.concatenate([basis.matrix, (r / nr)[:, None]], axis=1)
    return "added"


def basis_from_operators(ops, span_label: str = "", tol: float = TOL_RANK) -> OperatorBasis:
    """Orthonormalize a list of operators (or vectors) into a basis."""
    if not ops:
        raise ValueError("need at least one operator")
    geom = ops[0].geometry
    basis = empty_basis(geom, span_label)
    for o in ops:
        extend_basis(basis, o, tol)
    return basis


def hermitian_representatives(basis: OperatorBasis, tol: float = TOL_RANK) -> list:
    """Hermitian operators spanning a *-closed complex-linear subspace.

    Returns exactly `dimension` operators when the span is closed under
    adjoints; raises otherwise.
    """
    d = basis.geometry.dim
    herm = empty_basis(basis.geometry)
    out = []
    for j in range(basis.dimension):
        m = basis.matrix[:, j].reshape(d, d)
        for cand in ((m + m.conj().T) / 2, (m - m.conj().T) / 2j):
            if len(out) == basis.dimension:
                break
            if not basis.contains(cand.ravel(), tol):
                continue
            if extend_basis(herm, cand.ravel(), tol) == "added":
                h = herm.matrix[:, -1].reshape(d, d)
                h = (h + h.conj().T) / 2
                out.append(Operator(basis.geometry, h, "yes"))
    if len(out) != basis.dimension:
        raise ValueError(
            "span is not closed under adjoints: found "
            f"{len(out)} hermitian directions out of {basis.dimension}"
        )
    return out


class _GrowingBasis:
    """Orthonormal basis with batched candidate insertion (FIFO order)."""

    def __init__(self, n_full, tol):
        self.q = np.zeros((n_full, 0), dtype=complex)
        self.tol = tol

    @property
    def count(self):
        return self.q.shape[1]

    def absorb_block(self, block) -> int:
        """Orthogonalize the columns of block in order; returns #added."""
        if block.shape[1] == 0:
            return 0
        b = block - self.q @ (self.q.conj().T @ block)
        b -= self.q @ (self.q.conj().T @ b)
        added = 0
        norms_in = np.linalg.norm(block, axis=0)
        fresh = []
        for j in range(b.shape[1]):
            v = b[:, j]
            for w in fresh:
                v = v - w * (w.conj() @ v)
            nr = np.linalg.norm(v)
            # The floor at 1.0 keeps the test absolute for small candidates:
            # products of near-orthogonal basis elements can have tiny norm
            # made of pure roundoff, and a purely relative test would promote
            # that noise to a spurious basis direction.
            if nr > self.tol * max(norms_in[j], 1.0):
                v = v / nr
                # second pass against the fresh columns for hygiene
                for w in fresh:
                    v = v - w * (w.conj() @ v)
                v /= np.linalg.norm(v)
                fresh.append(v)
                added += 1
        if fresh:
            self.q = np.concatenate([self.q] + [f[:, None] for f in fresh], axis=1)
        return added


def lie_closure(
    gates,
    tol: float = TOL_RANK,
    max_dim: int | None = None,
    include_identity: bool | None = None,
) -> OperatorBasis:
    """Dynamical Lie algebra of a gate set, by pairwise commutator worklist.

    Seeds with the orthonormalized generators, then repeatedly commutes
    each not-yet-processed element against the whole current basis (FIFO),
    adding independent results, until no additions remain.
    """
    geom = gates.geometry
    d = geom.dim
    if max_dim is None:
        max_dim = d * d
    if include_identity is None:
        include_identity = gates.include_identity

    seeds = [g.dense() for g in gates.generators]
    if include_identity and not gates.include_identity:
        seeds.insert(0, np.eye(d, dtype=complex))

    gb = _GrowingBasis(d * d, tol)
    gb.absorb_block(np.array([m.ravel() for m in seeds]).T)
    mats = [gb.q[:, j].reshape(d, d).copy() for j in range(gb.count)]
    queue = deque(range(len(mats)))
    incomplete = False

    while queue:
        i = queue.popleft()
        a = mats[i]
        stack = np.stack(mats)
        comms = a[None, :, :] @ stack - stack @ a[None, :, :]
        block = comms.reshape(len(mats), d * d).T
        # drop numerically-zero candidates: operands are unit norm, so
        # anything this small is rounding noise, not a direction
        norms = np.linalg.norm(block, axis=0)
        keep = norms > NOISE_FLOOR * max(float(norms.max(initial=0.0)), 1.0)
        before = gb.count
        gb.absorb_block(block[:, keep])
        for j in range(before, gb.count):
            mats.append(gb.q[:, j].reshape(d, d).copy())
            queue.append(j)
        if gb.count > max_dim:
            incomplete = True
            break

    label = f"dla({gates.name})"
    return OperatorBasis(geom, gb.q, label, incomplete)


def associative_closure(seed, tol: float = TOL_RANK, max_dim: int | None = None) -> OperatorBasis:
    """Associative *-algebra generated by the seed operators.

    Includes the identity, and closes under products (both orders) and
    hermitian adjoints.
    """
    if not seed:
        raise ValueError("need at least one seed operator")
    geom = seed[0].geometry
    d = geom.dim
    if max_dim is None:
        max_dim = d * d

    gb = _GrowingBasis(d * d, tol)
    seeds = [np.eye(d, dtype=complex)] + [
        s.dense() if isinstance(s, Operator) else _as_vector(s, geom).reshape(d, d)
        for s in seed
    ]
    gb.absorb_block(np.array([m.ravel() for m in seeds]).T)
    mats = [gb.q[:, j].reshape(d, d).copy() for j in range(gb.count)]
    queue = deque(range(len(mats)))
    incomplete = False

    while queue:
        i = queue.popleft()
        a = mats[i]
        stack = np.stack(mats)
        left = a[None, :, :] @ stack
        right = stack @ a[None, :, :]
        cands = np.concatenate([left, right, a.conj().T[None, :, :]])
        block = cands.reshape(cands.shape[0], d * d).T
        norms = np.linalg.norm(block, axis=0)
        keep = norms > NOISE_FLOOR * max(float(norms.max(initial=0.0)), 1.0)
        before = gb.count
        gb.absorb_block(block[:, keep])
        for j in range(before, gb.count):
            mats.append(gb.q[:, j].reshape(d, d).copy())
            queue.append(j)
        if gb.count > max_dim:
            incomplete = True
            break

    return OperatorBasis(geom, gb.q, "associative closure", incomplete)


def adjoint_invariant_closure(
    seed_block: np.ndarray,
    generator_mats,
    geom: ChainGeometry,
    tol: float = TOL_RANK,
    max_dim: int | None = None,
    span_label: str = "adjoint-invariant closure",
) -> OperatorBasis:
    """Smallest subspace containing the seed columns and invariant under
    every map X -> [h, X].

    This reproduces the Lie closure when seeded with span{generators}
    (right-nested commutators span the full algebra), at linear instead of
    quadratic candidate count -- the scalable route for larger chains.
    """
    d = geom.dim
    if max_dim is None:
        max_dim = d * d
    hs = [np.asarray(h, dtype=complex) for h in generator_mats]

    gb = _GrowingBasis(d * d, tol)
    gb.absorb_block(np.asarray(seed_block, dtype=complex))
    mats = [gb.q[:, j].reshape(d, d).copy() for j in range(gb.count)]
    queue = deque(range(len(mats)))
    incomplete = False

    while queue:
        i = queue.popleft()
        a = mats[i]
        cands = np.stack([h @ a - a @ h for h in hs])
        block = cands.reshape(len(hs), d * d).T
        norms = np.linalg.norm(block, axis=0)
        keep = norms > NOISE_FLOOR * max(float(norms.max(initial=0.0)), 1.0)
        before = gb.count
        gb.absorb_block(block[:, keep])
        for j in range(before, gb.count):
            mats.append(gb.q[:, j].reshape(d, d).copy())
            queue.append(j)
        if gb.count > max_dim:
            incomplete = True
            break

    return OperatorBasis(geom, gb.q, span_label, incomplete)
