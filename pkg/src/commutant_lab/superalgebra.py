"""Commutants one level up: superoperators that commute with every adjoint
generator, and the universality classification they induce.

A gate set acts on operator space through its adjoint maps ``X -> [h, X]``.
The solvers here work with that action twice removed: the *super-commutant*
is the algebra of superoperators commuting with every adjoint generator,
i.e. the nullspace of ``P4 = sum_a (L_a (x) 1 - 1 (x) L_a^T)^2`` on the
doubled operator space.  Its size, compared against the *minimal* algebra
built from commutant pairs ``Q1 (x) Q2^T`` and the identity dyad, separates
three regimes of a gate set:

- codimension zero: every symmetric unitary is reachable ("universal");
- the two algebras coincide: non-universality is fully explained by the
  symmetries ("weakly non-universal");
- the computed algebra is strictly larger: extra invariant structure blocks
  the dynamics beyond what the symmetries require ("strongly non-universal").

Two independent engines compute super-commutants.  The ``p4`` engine
assembles the positive-semidefinite constraint operator and calls the
nullspace solver; it is exact but scales as (space dim)^2, so it is limited
to small restricted spaces.  The ``blocks`` engine diagonalizes a random
element of the algebra generated by the adjoint maps, clusters eigenvalues,
merges clusters connected by generator matrix elements into invariant
blocks, and solves a small intertwiner system per block.  The two engines
cross-validate each other wherever both fit.

Restricted solves ("bond", or a sector projector) compress every adjoint
map with an isometry onto an invariant subspace first, which keeps the
doubled dimension manageable; zero-extended restricted solutions are genuine
members of the full super-commutant, because the restriction subspace is
invariant under every adjoint map.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from ._linalg import (
    SolverLimitError,
    TOL_EIG,
    TOL_NULL,
    TOL_RANK,
    nullspace_psd,
    orthonormal_columns,
    project_out,
    subspaces_equal,
)
from .closure import (
    NOISE_FLOOR,
    OperatorBasis,
    _GrowingBasis,
    associative_closure,
    empty_basis,
    lie_closure,
)
from .codim import codim_exact, codim_weak
from .commutant import sector_projectors, sector_table
from .operators import (
    ChainGeometry,
    Operator,
    adjoint_superop,
)

# Solver limits, tuned for a single-core desktop with a few GB of memory.
AUTO_P4_SPACE = 24        # restricted dim up to which "auto" picks the p4 engine
MAX_P4_SPACE = 64         # hard limit for the p4 engine (doubled dim 4096)
MAX_BLOCK_SPACE = 2048    # hard limit for the blocks engine (dense eigh)
MAX_FULL_SPACE = 1024     # restrict="none" refused above this operator-space dim
MAX_DOUBLED_ENTRIES = 2**25  # cap on materialized doubled-space basis entries

_CONNECT_TOL = 1e-8       # relative generator matrix-element threshold for merging
_RESID_TOL = 1e-8         # commutation-residual acceptance for solved elements


# ---------------------------------------------------------------------------
# geometry plumbing


def doubled_geometry(geom: ChainGeometry) -> ChainGeometry:
    """Geometry of the doubled chain carrying superoperators as operators.

    A superoperator on a chain with Hilbert dimension d is a d^2 x d^2
    matrix, i.e. an operator on two back-to-back copies of the chain.
    The doubled chain is always open: the wrap-around bond of a periodic
    parent has no meaning across the copies.
    """
    return ChainGeometry(
        2 * geom.num_sites, geom.local_dims + geom.local_dims, "open"
    )


def _restricted_space_geometry(m: int) -> ChainGeometry:
    # single abstract site of dimension m: lets OperatorBasis and the
    # sector-projector machinery run on restricted coordinates
    return ChainGeometry(1, (m,), "open")


# ---------------------------------------------------------------------------
# restriction plumbing


def _restriction(gates, restrict):
    """Resolve the restrict argument to (isometry B | None, dim, label).

    B has orthonormal columns spanning an adjoint-invariant subspace of
    operator space; None means no restriction (full operator space).
    """
    geom = gates.geometry
    d = geom.dim
    if restrict is None or restrict == "none":
        return None, d * d, "full operator space"
    if isinstance(restrict, str) and restrict == "bond":
        from .commutant import bond_algebra

        bond = bond_algebra(gates)
        return bond.matrix, bond.dimension, "bond algebra"
    if isinstance(restrict, OperatorBasis):
        if restrict.geometry != geom:
            raise ValueError("restriction basis geometry mismatch")
        return restrict.matrix, restrict.dimension, "restricted subspace"
    if isinstance(restrict, Operator):
        if restrict.geometry != geom:
            raise ValueError("sector projector geometry mismatch")
        p = restrict.dense()
        if np.abs(p @ p - p).max() > 1e-8 or np.abs(p - p.conj().T).max() > 1e-8:
            raise ValueError("sector restriction must be an orthogonal projector")
        u = orthonormal_columns(p)
        b = np.kron(u, u.conj())  # columns vec(u_i u_j^dag), orthonormal
        return b, b.shape[1], "single sector"
    raise ValueError(f"unknown restriction {restrict!r}")


def _restricted_actions(gates, bmat):
    """Adjoint maps compressed onto the restriction isometry (dense m x m).

    Validates that the restriction span is invariant under every adjoint
    map; without invariance the compressed commutation problem would not be
    a statement about the original dynamics.
    """
    actions = []
    for g in gates.generators:
        a = adjoint_superop(g).entries
        if bmat is None:
            actions.append(a)
            continue
        ab = a @ bmat
        comp = bmat.conj().T @ ab
        leak = np.linalg.norm(ab - bmat @ comp)
        if leak > 1e-8 * max(np.linalg.norm(comp), 1.0):
            raise ValueError(
                "restriction space is not invariant under the adjoint action "
                f"(leak {leak:.2e})"
            )
        comp = (comp + comp.conj().T) / 2.0  # adjoint maps are Hermitian
        actions.append(comp)
    return actions


def _dense_actions(actions, m):
    out = []
    for a in actions:
        ad = a.toarray() if sp.issparse(a) else np.asarray(a, dtype=complex)
        out.append(np.ascontiguousarray((ad + ad.conj().T) / 2.0))
    return out


# ---------------------------------------------------------------------------
# p4 engine: direct nullspace of the constraint operator


def _p4_nullspace(actions, m, tol):
    """Nullspace of sum_a (L_a (x) 1 - 1 (x) L_a^T)^2 on the doubled space."""
    if m > MAX_P4_SPACE:
        raise SolverLimitError(
            f"p4 engine limited to restricted dim {MAX_P4_SPACE}, got {m}"
        )
    eye = sp.identity(m, dtype=complex, format="csr")
    p4 = sp.csr_matrix((m * m, m * m), dtype=complex)
    for a in actions:
        a_sp = sp.csr_matrix(a)
        k = sp.kron(a_sp, eye, format="csr") - sp.kron(eye, a_sp.T, format="csr")
        p4 = p4 + (k.conj().T @ k)
    # dense eigh below ~1600, shift-invert Lanczos above: the doubled dim
    # reaches 4096 at the engine limit, too big for routine dense solves
    return nullspace_psd(p4, cutoff_rel=tol, dense_limit=1600, k_hint=48)


# ---------------------------------------------------------------------------
# blocks engine: eigenvalue clustering of a random algebra element


@dataclass
class _Cluster:
    lo: int          # first index in the sorted eigenvalue order
    hi: int          # one past the last index
    vectors: np.ndarray  # m x k orthonormal eigenvectors


@dataclass
class _RawBlock:
    clusters: list           # list of _Cluster, one eigenvalue each
    krylov_dim: int          # number of clusters D
    degeneracy: int          # common cluster multiplicity d
    eig_floor: float         # smallest eigenvalue, for deterministic ordering

    def dimension_hint(self) -> int:
        return self.krylov_dim * self.degeneracy


def _random_algebra_element(dense_actions, rng):
    """Random Hermitian element with generic spectrum on each invariant block.

    Linear words alone can have accidentally commensurate spectra (all the
    adjoint maps may commute); quadratic and cubic words lift that.  The
    commutator word i[M1, M2] is Hermitian with genuinely complex entries:
    without it, real generators would give a real random element whose
    spectrum is exactly degenerate across complex-conjugate block pairs
    (and doubled on quaternionic blocks), wrecking the clustering.  Blocks
    that really are isomorphic share the spectrum of *every* algebra word,
    so the complex word cannot split them.
    """
    m = dense_actions[0].shape[0]
    m1 = np.zeros((m, m), dtype=complex)
    m2 = np.zeros((m, m), dtype=complex)
    for g in dense_actions:
        m1 += rng.standard_normal() * g
        m2 += rng.standard_normal() * g
    m1 /= max(np.linalg.norm(m1), 1e-300)
    m2 /= max(np.linalg.norm(m2), 1e-300)
    m1 *= np.sqrt(m)
    m2 *= np.sqrt(m)
    c = m1 @ m2 - m2 @ m1
    r = m1 + m1 @ m1 + m2 @ (m1 @ m2) + 1j * c + c @ (m1 @ c)
    return (r + r.conj().T) / 2.0


def _cluster_spectrum(r, tol_eig):
    vals, vecs = np.linalg.eigh(r)
    spread = max(float(vals[-1] - vals[0]), 1.0)
    bounds = [0]
    for i in range(1, len(vals)):
        if vals[i] - vals[i - 1] > tol_eig * spread:
            bounds.append(i)
    bounds.append(len(vals))
    clusters = [
        _Cluster(lo, hi, np.ascontiguousarray(vecs[:, lo:hi]))
        for lo, hi in zip(bounds[:-1], bounds[1:])
    ]
    return vals, clusters


def _merge_clusters(vals, clusters, dense_actions):
    """Group clusters connected by any generator matrix element.

    Two clusters belong to the same invariant block iff some adjoint map has
    a nonzero matrix element between them; isomorphic irreducible copies
    share every eigenvalue, so they always land in the same cluster and the
    cluster multiplicity counts the degeneracy directly.
    """
    vecs = np.concatenate([c.vectors for c in clusters], axis=1)
    edges = [c.hi - c.lo for c in clusters]
    starts = np.concatenate([[0], np.cumsum(edges)])[:-1].astype(np.int64)
    n = len(clusters)
    adj = np.zeros((n, n), dtype=bool)
    for g in dense_actions:
        w = vecs.conj().T @ g @ vecs
        aw = np.abs(w) ** 2
        # collapse to cluster-pair Frobenius norms
        rowred = np.add.reduceat(aw, starts, axis=0)
        pairnorm = np.add.reduceat(rowred, starts, axis=1)
        thr = _CONNECT_TOL * max(float(np.abs(w).max()), 1e-300)
        adj |= np.sqrt(pairnorm) > thr
    n_comp, labels = connected_components(sp.csr_matrix(adj), directed=False)
    blocks = []
    for b in range(n_comp):
        members = [clusters[i] for i in range(n) if labels[i] == b]
        mults = {c.hi - c.lo for c in members}
        if len(mults) != 1:
            return None  # inconsistent multiplicities: spectrum not generic
        k = mults.pop()
        blocks.append(
            _RawBlock(
                clusters=members,
                krylov_dim=len(members),
                degeneracy=k,
                eig_floor=float(min(vals[c.lo] for c in members)),
            )
        )
    blocks.sort(key=lambda blk: (-blk.krylov_dim * blk.degeneracy,
                                 -blk.krylov_dim, blk.eig_floor))
    return blocks


def _single_seed_structure(dense_actions, seed):
    rng = np.random.default_rng(seed)
    m = dense_actions[0].shape[0]
    for attempt in range(3):
        r = _random_algebra_element(dense_actions, rng)
        vals, clusters = _cluster_spectrum(r, TOL_EIG)
        blocks = _merge_clusters(vals, clusters, dense_actions)
        if blocks is None:
            continue
        if sum(b.krylov_dim * b.degeneracy for b in blocks) == m:
            return blocks
    raise RuntimeError(
        "block refinement failed: random-element spectrum stayed degenerate "
        f"after 3 draws (seed {seed})"
    )


def _signature(blocks):
    return sorted((b.krylov_dim, b.degeneracy) for b in blocks)


def _block_structure(dense_actions, seed):
    """Two-seed validated invariant-block structure of the adjoint action."""
    first = _single_seed_structure(dense_actions, seed)
    second = _single_seed_structure(dense_actions, seed + 101)
    if _signature(first) != _signature(second):
        raise RuntimeError(
            "block refinement flagged: two independent seeds disagree on the "
            f"(D, d) table: {_signature(first)} vs {_signature(second)}"
        )
    return first


def _block_sc_coefficients(block, dense_actions, tol):
    """Orthonormal basis of the super-commutant restricted to one block.

    Solutions are parametrized by one k x k matrix per cluster (elements of
    the super-commutant preserve every eigenspace of a generic algebra
    element); the intertwiner constraints ``A X_mu = X_nu A`` for every
    compressed generator block tie them together.  Returns an array of shape
    (n_sol, D, k, k): per solution, per cluster, the coefficient matrix.
    """
    dd = block.krylov_dim
    k = block.degeneracy
    if dd == 1:
        sols = np.zeros((k * k, 1, k, k), dtype=complex)
        idx = 0
        for p in range(k):
            for q in range(k):
                sols[idx, 0, p, q] = 1.0
                idx += 1
        return sols
    nun = dd * k * k
    eye_k = np.eye(k, dtype=complex)
    h = np.zeros((nun, nun), dtype=complex)
    vecs = [c.vectors for c in block.clusters]
    for g in dense_actions:
        gv = [g @ v for v in vecs]
        for nu in range(dd):
            for mu in range(dd):
                a = vecs[nu].conj().T @ gv[mu]  # k x k compressed generator
                s_mu = slice(mu * k * k, (mu + 1) * k * k)
                s_nu = slice(nu * k * k, (nu + 1) * k * k)
                aa = a.conj().T @ a
                h[s_mu, s_mu] += np.kron(aa, eye_k)
                h[s_nu, s_nu] += np.kron(eye_k, (a @ a.conj().T).T)
                cross = np.kron(a.conj().T, a.T)
                h[s_mu, s_nu] -= cross
                h[s_nu, s_mu] -= cross.conj().T
    w, v = np.linalg.eigh((h + h.conj().T) / 2.0)
    cutoff = tol * max(float(w[-1]), 1.0)
    null = v[:, w <= cutoff]
    if null.shape[1] != k * k:
        raise RuntimeError(
            "block refinement flagged: intertwiner solution count "
            f"{null.shape[1]} != degeneracy^2 = {k * k}"
        )
    return np.ascontiguousarray(null.T).reshape(-1, dd, k, k)


def _materialize_block_columns(block, sols):
    """Doubled-space columns vec(sum_nu V_nu X_nu V_nu^dag) per solution."""
    m = block.clusters[0].vectors.shape[0]
    cols = np.zeros((m * m, sols.shape[0]), dtype=complex)
    for i in range(sols.shape[0]):
        s = np.zeros((m, m), dtype=complex)
        for nu, c in enumerate(block.clusters):
            s += c.vectors @ sols[i, nu] @ c.vectors.conj().T
        cols[:, i] = s.ravel()
    return cols


def _validate_sc_columns(cols, dense_actions, m):
    """Spot-check commutation of solved elements in restricted coordinates."""
    n = cols.shape[1]
    if n == 0:
        return
    picks = np.unique(np.linspace(0, n - 1, min(n, 6)).astype(int))
    for i in picks:
        s = cols[:, i].reshape(m, m)
        for g in dense_actions:
            resid = np.linalg.norm(g @ s - s @ g)
            if resid > _RESID_TOL * max(np.linalg.norm(g), 1.0):
                raise RuntimeError(
                    f"super-commutant candidate fails commutation ({resid:.2e})"
                )


def _blocks_sc(dense_actions, m, tol, seed):
    """(structure, per-block solutions, coords columns) via the blocks engine."""
    structure = _block_structure(dense_actions, seed)
    all_sols = []
    pieces = []
    for block in structure:
        sols = _block_sc_coefficients(block, dense_actions, tol)
        all_sols.append(sols)
        pieces.append(_materialize_block_columns(block, sols))
    cols = np.concatenate(pieces, axis=1) if pieces else np.zeros(
        (m * m, 0), dtype=complex
    )
    _validate_sc_columns(cols, dense_actions, m)
    return structure, all_sols, cols


# ---------------------------------------------------------------------------
# public: super_commutant


def _embed_columns(cols, bmat, d):
    """Zero-extend restricted solutions to the full doubled space.

    For X in restricted coordinates the element B X B^dag acts on operator
    space, is supported on the restriction subspace, and commutes with every
    adjoint map because the subspace is invariant.
    """
    if bmat is None:
        return cols
    m = bmat.shape[1]
    n = cols.shape[1]
    dd = d * d
    if dd * dd * n > MAX_DOUBLED_ENTRIES:
        raise SolverLimitError(
            "embedding the restricted solution into the full doubled space "
            f"needs {dd * dd * n} entries; keep the restricted coordinates"
        )
    out = np.zeros((dd * dd, n), dtype=complex)
    for i in range(n):
        x = cols[:, i].reshape(m, m)
        out[:, i] = (bmat @ x @ bmat.conj().T).ravel()
    return out


def super_commutant(gates, restrict="none", engine="auto", seed=0,
                    tol=TOL_NULL) -> OperatorBasis:
    """Orthonormal basis of superoperators commuting with every adjoint map.

    ``restrict`` may be "none", "bond" (compress onto the generated
    operator algebra first), an OperatorBasis spanning an invariant
    subspace, or a sector projector Operator.  ``engine`` is "auto", "p4"
    (direct nullspace of the constraint operator) or "blocks" (eigenvalue
    clustering).  Elements are returned on the doubled-chain geometry;
    restricted solves are zero-extended, which keeps them genuine members
    of the unrestricted super-commutant.
    """
    geom = gates.geometry
    d = geom.dim
    bmat, m, space_label = _restriction(gates, restrict)
    if bmat is None and m > MAX_FULL_SPACE:
        raise SolverLimitError(
            f"full operator space has dim {m} > {MAX_FULL_SPACE}; "
            "use restrict='bond' or a sector projector"
        )
    if m > MAX_BLOCK_SPACE:
        raise SolverLimitError(
            f"restricted space dim {m} exceeds the blocks-engine limit "
            f"{MAX_BLOCK_SPACE}"
        )
    actions = _restricted_actions(gates, bmat)
    if engine == "auto":
        engine = "p4" if m <= AUTO_P4_SPACE else "blocks"
    if engine == "p4":
        cols = _p4_nullspace(actions, m, tol)
        dense = _dense_actions(actions, m)
        _validate_sc_columns(cols, dense, m)
    elif engine == "blocks":
        dense = _dense_actions(actions, m)
        _, _, cols = _blocks_sc(dense, m, tol, seed)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    full_cols = _embed_columns(cols, bmat, d)
    label = f"super-commutant({gates.name}) | {space_label}"
    return OperatorBasis(doubled_geometry(geom), full_cols, label)


# ---------------------------------------------------------------------------
# public: minimal_super_commutant


def _pair_seed_operators(comm, dgeom):
    """Algebra generators {Q (x) 1, 1 (x) Q^T, |1>><<1|} on the doubled chain.

    Their associative closure equals the closure of all pairs
    Q1 (x) Q2^T together with the identity dyad, since
    (Q1 (x) 1)(1 (x) Q2^T) = Q1 (x) Q2^T.
    """
    d = comm.geometry.dim
    eye = np.eye(d, dtype=complex)
    seeds = []
    for q in comm.matrices():
        seeds.append(Operator(dgeom, sp.csr_matrix(np.kron(q, eye))))
        seeds.append(Operator(dgeom, sp.csr_matrix(np.kron(eye, q.T))))
    vec_id = eye.ravel()[:, None]
    seeds.append(Operator(dgeom, sp.csr_matrix(vec_id @ vec_id.conj().T)))
    return seeds


def _direct_span_columns(comm):
    """Stack of vec(Q_i (x) Q_j^T) and vec(|Q_i>><<Q_j|) columns.

    Products of such elements stay in the stack's span:
    kron factors multiply factor-wise, a kron element applied to a dyad
    maps it to another commutant dyad, and dyads contract among themselves.
    The span is therefore already the associative closure of the pair
    generators and the identity dyad.
    """
    mats = comm.matrices()
    n = mats.shape[0]
    d = mats.shape[1]
    dd = d * d
    cols = np.zeros((dd * dd, 2 * n * n), dtype=complex)
    idx = 0
    for i in range(n):
        for j in range(n):
            cols[:, idx] = np.kron(mats[i], mats[j].T).ravel()
            idx += 1
    vecs = mats.reshape(n, dd)
    for i in range(n):
        for j in range(n):
            cols[:, idx] = np.outer(vecs[i], vecs[j].conj()).ravel()
            idx += 1
    return cols


def minimal_super_commutant(comm: OperatorBasis, tol: float = TOL_RANK
                            ) -> OperatorBasis:
    """Associative algebra generated by commutant pairs and the identity dyad.

    This is the part of the super-commutant forced by the symmetries alone;
    it is always a subspace of the computed super-commutant.  Dispatches to
    the worklist closure for small commutants and to the equivalent direct
    span construction (see _direct_span_columns) when the worklist would be
    quadratically slow; the two routes agree and are cross-checked in the
    test-suite.
    """
    geom = comm.geometry
    d = geom.dim
    dgeom = doubled_geometry(geom)
    n = comm.dimension
    entries = (d ** 4) * (2 * n * n + 1)
    if entries > MAX_DOUBLED_ENTRIES:
        raise SolverLimitError(
            f"minimal super-commutant span needs {entries} entries; "
            "beyond the materialization limit"
        )
    if n <= 4 and d ** 4 <= 4096:
        basis = associative_closure(_pair_seed_operators(comm, dgeom), tol=tol)
        basis.span_label = "minimal super-commutant"
        return basis
    cols = orthonormal_columns(_direct_span_columns(comm), rtol=tol)
    basis = OperatorBasis(dgeom, cols, "minimal super-commutant")
    # closure spot-check: a few random products must stay in the span
    rng = np.random.default_rng(0)
    dd = d * d
    for _ in range(3):
        i, j = rng.integers(0, cols.shape[1], size=2)
        prod = (cols[:, i].reshape(dd, dd) @ cols[:, j].reshape(dd, dd)).ravel()
        nr = np.linalg.norm(prod)
        if nr > 1e-9 and np.linalg.norm(basis.residual(prod)) > 1e-8 * nr:
            raise RuntimeError("minimal super-commutant span is not closed")
    return basis


def _minimal_dimension_gram(comm) -> int:
    """Rank of the minimal super-commutant without materializing columns.

    The kron elements are orthonormal among themselves, as are the dyads;
    the only nontrivial Gram entries are the cross inner products
    <Q_i (x) Q_j^T, |Q_k>><<Q_l|> = tr(Q_l^dag Q_i^dag Q_k Q_j^dag),
    computable from products of the small commutant matrices.
    """
    mats = comm.matrices()
    n = mats.shape[0]
    # u[i, l] = Q_i Q_l ; v[k, j] = Q_k Q_j^dag
    u = np.einsum("iab,lbc->ilac", mats, mats)
    v = np.einsum("kab,jcb->kjac", mats, mats.conj())
    cross = np.einsum("ilab,kjab->ijkl", u.conj(), v).reshape(n * n, n * n)
    gram = np.block([
        [np.eye(n * n, dtype=complex), cross],
        [cross.conj().T, np.eye(n * n, dtype=complex)],
    ])
    w = np.linalg.eigvalsh((gram + gram.conj().T) / 2.0)
    return int(np.sum(w > TOL_RANK * max(float(w[-1]), 1.0)))


def _structured_minimal_elements(comm):
    """Yield the minimal-algebra spanning elements one at a time (m x m)."""
    mats = comm.matrices()
    n = mats.shape[0]
    d = mats.shape[1]
    for i in range(n):
        for j in range(n):
            yield np.kron(mats[i], mats[j].T)
    vecs = mats.reshape(n, d * d)
    for i in range(n):
        for j in range(n):
            yield np.outer(vecs[i], vecs[j].conj())


# ---------------------------------------------------------------------------
# block decomposition (public types and builders)


@dataclass(frozen=True)
class SuperBlock:
    """One invariant block of the adjoint action on (restricted) op space."""

    label: str
    krylov_dim: int     # D: dimension of one irreducible copy
    degeneracy: int     # d: number of isomorphic copies stacked in the block
    basis: OperatorBasis
    inside_bond: bool   # True iff some generator has weight in the block

    @property
    def dimension(self) -> int:
        return self.krylov_dim * self.degeneracy


@dataclass(frozen=True)
class BlockDecomposition:
    """Orthogonal invariant blocks covering the decomposed space."""

    blocks: tuple
    space_label: str
    geometry: ChainGeometry

    @property
    def dimension(self) -> int:
        return sum(b.dimension for b in self.blocks)

    def table(self) -> list:
        return [(b.krylov_dim, b.degeneracy) for b in self.blocks]


def _validate_decomposition(blocks, m):
    total = sum(b.krylov_dim * b.degeneracy for b in blocks)
    if total != m:
        raise RuntimeError(
            f"block dimensions sum to {total}, expected the space dim {m}"
        )
    for i, a in enumerate(blocks):
        if a.basis.matrix.shape[1] != a.dimension:
            raise RuntimeError(f"block {a.label}: basis columns != D*d")
        for b in blocks[i + 1:]:
            g = a.basis.matrix.conj().T @ b.basis.matrix
            if g.size and np.abs(g).max() > 1e-8:
                raise RuntimeError(
                    f"blocks {a.label} and {b.label} are not orthogonal"
                )


def _gen_overlap(colspan, gates):
    gvecs = np.stack([g.dense().ravel() for g in gates.generators], axis=1)
    proj = colspan.conj().T @ gvecs
    return float(np.linalg.norm(proj)) > 1e-9 * max(
        float(np.linalg.norm(gvecs)), 1.0
    )


def _krylov_span(seed_cols, maps, tol=TOL_RANK):
    """Smallest subspace containing the seeds and invariant under the maps."""
    n = maps[0].shape[0] if maps else seed_cols.shape[0]
    gb = _GrowingBasis(n, tol)
    gb.absorb_block(np.asarray(seed_cols, dtype=complex))
    queue = deque(range(gb.count))
    while queue:
        i = queue.popleft()
        v = gb.q[:, i]
        cands = np.stack([g @ v for g in maps], axis=1) if maps else np.zeros(
            (n, 0), dtype=complex
        )
        norms = np.linalg.norm(cands, axis=0)
        keep = norms > NOISE_FLOOR * max(float(norms.max(initial=0.0)), 1.0)
        before = gb.count
        gb.absorb_block(cands[:, keep])
        queue.extend(range(before, gb.count))
    return gb.q


def block_decomposition(gates, restrict="bond", seed=0) -> BlockDecomposition:
    """Invariant blocks of the adjoint action, with (D, d) per block.

    Runs the blocks engine for the isotypic split, then re-derives the
    central projectors through the sector-projector refinement and
    cross-checks each block's Krylov dimension by closing a projected
    random seed vector under the adjoint maps.  The reported basis spans
    the whole block (all d isomorphic copies).
    """
    geom = gates.geometry
    bmat, m, space_label = _restriction(gates, restrict)
    if bmat is None and m > MAX_FULL_SPACE:
        raise SolverLimitError(
            f"full operator space has dim {m} > {MAX_FULL_SPACE}; restrict first"
        )
    if m > MAX_BLOCK_SPACE:
        raise SolverLimitError(f"restricted dim {m} > {MAX_BLOCK_SPACE}")
    actions = _restricted_actions(gates, bmat)
    dense = _dense_actions(actions, m)
    structure = _block_structure(dense, seed)

    # the block identities span the center of the super-commutant; feeding
    # them through the sector-projector refinement re-derives the same
    # minimal projectors and validates closure/abelianness on the way
    rgeom = _restricted_space_geometry(m)
    id_cols = []
    for blk in structure:
        p = np.zeros((m, m), dtype=complex)
        for c in blk.clusters:
            p += c.vectors @ c.vectors.conj().T
        id_cols.append(p.ravel() / np.linalg.norm(p))
    center_basis = OperatorBasis(rgeom, np.stack(id_cols, axis=1),
                                 "super-center")
    projs = sector_projectors(center_basis, seed=seed)

    # match each refined projector back to an engine block by trace overlap
    rng = np.random.default_rng(seed + 7)
    matched = {}
    for pr in projs:
        pmat = pr.dense()
        overlaps = []
        for blk in structure:
            tr = sum(
                np.linalg.norm(pmat @ c.vectors) ** 2 for c in blk.clusters
            )
            overlaps.append(tr)
        bi = int(np.argmax(overlaps))
        blk = structure[bi]
        if bi in matched or abs(overlaps[bi] - blk.dimension_hint()) > 1e-6:
            raise RuntimeError("refined projectors do not match engine blocks")
        span = orthonormal_columns(
            np.concatenate([c.vectors for c in blk.clusters], axis=1)
        )
        # independent Krylov cross-check: a generic projected seed closes to
        # D*min(D, d) dimensions inside the block.  The closure runs in
        # block coordinates; the compression must agree with the projector.
        v = pmat @ rng.standard_normal(m)
        v = v / np.linalg.norm(v)
        coords = span.conj().T @ v
        if np.linalg.norm(v - span @ coords) > 1e-8:
            raise RuntimeError("refined projector disagrees with block span")
        maps_local = [span.conj().T @ (g @ span) for g in dense]
        kry = _krylov_span(coords[:, None], maps_local)
        expect = blk.krylov_dim * min(blk.krylov_dim, blk.degeneracy)
        if kry.shape[1] != expect:
            raise RuntimeError(
                f"Krylov cross-check failed: closure dim {kry.shape[1]} != "
                f"{expect} for block (D={blk.krylov_dim}, d={blk.degeneracy})"
            )
        matched[bi] = span
    if len(matched) != len(structure):
        raise RuntimeError("refined projectors do not cover every block")

    out = []
    for idx, blk in enumerate(structure):
        span = matched[idx]
        full_span = span if bmat is None else bmat @ span
        ob = OperatorBasis(geom, full_span, f"block-{idx:02d}")
        out.append(
            SuperBlock(
                label=f"block-{idx:02d}",
                krylov_dim=blk.krylov_dim,
                degeneracy=blk.degeneracy,
                basis=ob,
                inside_bond=_gen_overlap(full_span, gates),
            )
        )
    _validate_decomposition(out, m)
    return BlockDecomposition(tuple(out), space_label, geom)


def minimal_block_decomposition(gates, seed=0) -> BlockDecomposition:
    """Blocks predicted from the symmetry sectors alone (full op space).

    Sector data (D_s, d_s) fixes a reference decomposition: one block per
    ordered sector pair (maps between different sectors), the traceless part
    of each sector with D_s > 1, and one central block spanned by the
    commutant.  Extra degeneracies or finer splittings in the computed
    decomposition relative to this one are exactly what constraint_report
    narrates.
    """
    geom = gates.geometry
    d = geom.dim
    bond, comm, z, triples = sector_table(gates, seed=seed)
    ranges = [orthonormal_columns(proj.dense()) for proj, _, _ in triples]
    blocks = []

    def add(label, dd, k, cols):
        ob = OperatorBasis(geom, cols, label)
        blocks.append(
            SuperBlock(
                label=label,
                krylov_dim=dd,
                degeneracy=k,
                basis=ob,
                inside_bond=_gen_overlap(cols, gates),
            )
        )

    # central block: the commutant itself (the adjoint action kills it)
    add("central", 1, comm.dimension, comm.matrix)

    comm_mats = comm.matrices()
    for i, (proj, big_d, small_d) in enumerate(triples):
        u = ranges[i]
        if big_d > 1:
            full = np.kron(u, u.conj())
            pmat = proj.dense()
            inside = np.stack(
                [(pmat @ q @ pmat).ravel() for q in comm_mats], axis=1
            )
            inside = orthonormal_columns(inside)
            carved = orthonormal_columns(project_out(full, inside))
            add(f"diag(sector {i})", big_d * big_d - 1, small_d * small_d,
                carved)
        for j, (proj2, big_d2, small_d2) in enumerate(triples):
            if i == j:
                continue
            cols = np.kron(u, ranges[j].conj())
            add(f"pair(sector {i}, sector {j})", big_d * big_d2,
                small_d * small_d2, cols)

    _validate_decomposition(blocks, d * d)
    return BlockDecomposition(tuple(blocks), "full operator space", geom)


# ---------------------------------------------------------------------------
# dla_from_blocks


def dla_from_blocks(decomp: BlockDecomposition, gates,
                    validate_against: OperatorBasis | None = None
                    ) -> OperatorBasis:
    """Dynamical Lie algebra re-assembled blockwise.

    Projects the generators into each block and closes the projections
    under the adjoint maps inside the block; the union over blocks must
    equal the direct Lie closure, since the blocks are invariant and
    orthogonal.  Blocks without generator weight contribute nothing.
    Pass ``validate_against=lie_closure(gates)`` to enforce the
    cross-validation; disagreement raises.
    """
    if "bond" not in decomp.space_label:
        raise ValueError(
            "dla_from_blocks needs a bond-restricted decomposition, got "
            f"{decomp.space_label!r}"
        )
    geom = gates.geometry
    if geom != decomp.geometry:
        raise ValueError("geometry mismatch between decomposition and gates")
    gvecs = np.stack([g.dense().ravel() for g in gates.generators], axis=1)
    gscale = max(float(np.linalg.norm(gvecs)), 1.0)
    ads = [adjoint_superop(g).entries for g in gates.generators]

    pieces = []
    for blk in decomp.blocks:
        p = blk.basis.matrix  # d^2 x r
        coeffs = p.conj().T @ gvecs
        if np.linalg.norm(coeffs) <= 1e-9 * gscale:
            continue
        maps = [p.conj().T @ (a @ p) for a in ads]
        kry = _krylov_span(orthonormal_columns(coeffs), maps)
        pieces.append(p @ kry)
    if not pieces:
        return empty_basis(geom, f"dla-from-blocks({gates.name})")
    cols = np.concatenate(pieces, axis=1)
    gram = cols.conj().T @ cols
    if np.abs(gram - np.eye(gram.shape[0])).max() > 1e-8:
        raise RuntimeError("blockwise closure produced a non-orthonormal set")
    basis = OperatorBasis(geom, cols, f"dla-from-blocks({gates.name})")
    if validate_against is not None:
        if not subspaces_equal(basis.matrix, validate_against.matrix):
            raise RuntimeError(
                "flagged inconsistency: blockwise dynamical algebra "
                f"(dim {basis.dimension}) disagrees with the direct Lie "
                f"closure (dim {validate_against.dimension})"
            )
    return basis


# ---------------------------------------------------------------------------
# constraint_report


def constraint_report(decomp: BlockDecomposition,
                      minimal_decomp: BlockDecomposition) -> list:
    """Narrate how the computed blocks deviate from the sector prediction.

    Builds the bipartite overlap graph between computed and predicted
    blocks and walks its connected components: a component whose computed
    block carries more degeneracy than any predicted block in it yields a
    "degeneracy" note; a component with more computed than predicted blocks
    yields one "splitting" note per computed block in it.  Exact matches
    stay silent.
    """
    if decomp.geometry != minimal_decomp.geometry:
        raise ValueError("decompositions live on different geometries")
    if decomp.space_label != minimal_decomp.space_label:
        raise ValueError(
            "decompositions live on different spaces: "
            f"{decomp.space_label!r} vs {minimal_decomp.space_label!r}"
        )
    na, nm = len(decomp.blocks), len(minimal_decomp.blocks)
    overlap = np.zeros((na, nm))
    for i, a in enumerate(decomp.blocks):
        for j, b in enumerate(minimal_decomp.blocks):
            g = a.basis.matrix.conj().T @ b.basis.matrix
            overlap[i, j] = np.linalg.norm(g) ** 2
    sig = overlap > 1e-8 * np.maximum(
        overlap.sum(axis=1, keepdims=True), 1e-300
    )
    # bipartite connectivity: actual i ~ minimal j when overlap significant
    adj = sp.bmat(
        [[None, sp.csr_matrix(sig)], [sp.csr_matrix(sig.T), None]],
        format="csr",
    )
    n_comp, labels = connected_components(adj, directed=False)
    notes = []
    for comp in range(n_comp):
        a_idx = [i for i in range(na) if labels[i] == comp]
        m_idx = [j for j in range(nm) if labels[na + j] == comp]
        if not a_idx or not m_idx:
            continue
        max_min_deg = max(minimal_decomp.blocks[j].degeneracy for j in m_idx)
        m_names = ", ".join(minimal_decomp.blocks[j].label for j in m_idx)
        for i in a_idx:
            a = decomp.blocks[i]
            if a.degeneracy > max_min_deg:
                notes.append(
                    f"degeneracy: block {a.label} (D={a.krylov_dim}, "
                    f"d={a.degeneracy}) pairs sector blocks [{m_names}] with "
                    f"degeneracy above the sector prediction {max_min_deg}"
                )
        if len(a_idx) > len(m_idx):
            for i in a_idx:
                a = decomp.blocks[i]
                notes.append(
                    f"splitting: sector blocks [{m_names}] split into smaller "
                    f"invariant block {a.label} (D={a.krylov_dim}, "
                    f"d={a.degeneracy})"
                )
    return notes


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class UniversalityReport:
    classification: str         # Universal | WeaklyNonUniversal | StronglyNonUniversal
    dim_dla: int                # counted in the same convention as codim
    dim_bond: int
    dim_comm: int
    dim_center: int
    dim_scomm: int
    dim_scommt: int
    codim: int
    semi_universal: bool
    constraint_notes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.codim != self.dim_bond - self.dim_dla or self.codim < 0:
            raise ValueError("codim must equal dim_bond - dim_dla and be >= 0")
        strong = self.classification == "StronglyNonUniversal"
        if strong != (self.dim_scomm > self.dim_scommt):
            raise ValueError(
                "classification inconsistent with super-commutant dimensions"
            )


def _spectrum_commensurate(h, max_den=64, rtol=1e-8) -> bool:
    """True when the eigenvalue gaps of h are all rational multiples of the
    smallest one; incommensurate gaps mean the one-parameter groups are not
    periodic and reachability arguments need compactness care."""
    vals = np.linalg.eigvalsh(h.dense())
    gaps = np.diff(np.sort(vals))
    gaps = gaps[gaps > 1e-10 * max(abs(vals[-1]), abs(vals[0]), 1.0)]
    if gaps.size <= 1:
        return True
    base = gaps.min()
    for g in gaps:
        ratio = float(g / base)
        frac = Fraction(ratio).limit_denominator(max_den)
        if abs(ratio - float(frac)) > rtol * max(ratio, 1.0):
            return False
    return True


def _commensurability_notes(gates):
    notes = []
    for i, g in enumerate(gates.generators):
        if not _spectrum_commensurate(g):
            notes.append(
                f"warning: generator {i} has an incommensurate spectrum; "
                "compactness of the reachable set is not guaranteed"
            )
    return notes


def _structured_equality(dense, m, comm, tol, seed):
    """(dim_scomm, dim_scommt, equal) without materializing doubled columns.

    The engine's per-block solution coefficients define the computed
    super-commutant; each minimal-algebra element is compressed into the
    cluster coordinates block by block and projected onto the solved
    coefficient span.  Equality holds iff the dimensions match and every
    minimal element is contained (containment is also a mathematical
    invariant, so a violation flags an engine error rather than physics).
    """
    structure, all_sols, _ = _blocks_sc_no_columns(dense, m, tol, seed)
    dim_scomm = sum(s.shape[0] for s in all_sols)
    dim_scommt = _minimal_dimension_gram(comm)

    # orthonormal coefficient spans per block, stacked over clusters
    spans = []
    for blk, sols in zip(structure, all_sols):
        w = sols.reshape(sols.shape[0], -1).T  # (D*k*k) x n_sol
        spans.append(orthonormal_columns(w))

    worst = 0.0
    for elem in _structured_minimal_elements(comm):
        total = np.linalg.norm(elem) ** 2
        if total < 1e-24:
            continue
        captured = 0.0
        for blk, span in zip(structure, spans):
            coords = np.concatenate([
                (c.vectors.conj().T @ elem @ c.vectors).ravel()
                for c in blk.clusters
            ])
            captured += float(np.linalg.norm(span.conj().T @ coords) ** 2)
        worst = max(worst, abs(total - captured) / total)
    if worst > 1e-8:
        raise RuntimeError(
            "flagged inconsistency: minimal super-commutant element escapes "
            f"the computed super-commutant (relative leak {worst:.2e})"
        )
    return dim_scomm, dim_scommt, dim_scomm == dim_scommt


def _blocks_sc_no_columns(dense, m, tol, seed):
    structure = _block_structure(dense, seed)
    all_sols = [
        _block_sc_coefficients(blk, dense, tol) for blk in structure
    ]
    return structure, all_sols, None


def classify(gates, seed=0) -> UniversalityReport:
    """Universality class of a gate set, with the dimensions that decide it.

    codim 0 (identity direction excluded on both sides) is universal within
    the symmetric unitaries; otherwise equality of the computed and minimal
    super-commutants separates weak from strong non-universality.  The
    ``semi_universal`` flag records whether the exact codimension agrees
    with the center-minus-overlap-rank count.  For small systems the two
    super-commutants are materialized on the doubled chain and compared by
    principal angles; larger systems go through an equivalent structured
    comparison in block coordinates.
    """
    geom = gates.geometry
    d = geom.dim
    bond, comm, cen, _triples = sector_table(gates, seed=seed)
    dla = lie_closure(gates)
    codim = codim_exact(bond, dla)
    dim_dla = bond.dimension - codim
    weak_count = codim_weak(cen, gates)
    semi = codim == weak_count

    m = d * d
    if m > MAX_FULL_SPACE:
        raise SolverLimitError(
            f"operator space dim {m} > {MAX_FULL_SPACE}: classification needs "
            "the full-space super-commutant"
        )
    entries = (d ** 4) * (2 * comm.dimension ** 2 + 1)
    structured = m > 512 or entries > MAX_DOUBLED_ENTRIES
    actions = _restricted_actions(gates, None)
    dense = _dense_actions(actions, m)
    if structured:
        dim_scomm, dim_scommt, equal = _structured_equality(
            dense, m, comm, TOL_NULL, seed
        )
    else:
        if m <= AUTO_P4_SPACE:
            cols = _p4_nullspace(actions, m, TOL_NULL)
            _validate_sc_columns(cols, dense, m)
        else:
            _, _, cols = _blocks_sc(dense, m, TOL_NULL, seed)
        scomm = OperatorBasis(doubled_geometry(geom), cols, "sc")
        scommt = minimal_super_commutant(comm)
        dim_scomm = scomm.dimension
        dim_scommt = scommt.dimension
        # containment of the minimal algebra is a mathematical invariant;
        # violation means an engine bug, not a physical result
        leak = np.linalg.norm(
            scommt.matrix
            - scomm.matrix @ (scomm.matrix.conj().T @ scommt.matrix)
        )
        if leak > 1e-7 * max(np.linalg.norm(scommt.matrix), 1.0):
            raise RuntimeError(
                "flagged inconsistency: minimal super-commutant escapes the "
                f"computed one (leak {leak:.2e})"
            )
        equal = subspaces_equal(scomm.matrix, scommt.matrix)

    if codim == 0:
        label = "Universal"
    elif equal:
        label = "WeaklyNonUniversal"
    else:
        label = "StronglyNonUniversal"

    notes = list(_commensurability_notes(gates))
    return UniversalityReport(
        classification=label,
        dim_dla=dim_dla,
        dim_bond=bond.dimension,
        dim_comm=comm.dimension,
        dim_center=cen.dimension,
        dim_scomm=dim_scomm,
        dim_scommt=dim_scommt,
        codim=codim,
        semi_universal=semi,
        constraint_notes=tuple(notes),
    )
