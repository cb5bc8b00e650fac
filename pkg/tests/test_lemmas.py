"""Structural identities the classification machinery rests on.

Each test exercises one exact statement: the adjoint map is a Lie-algebra
homomorphism, finite-dimensional *-algebras equal their double commutant,
the minimal super-commutant embeds in the computed one, sectors with inner
structure carry traceless closure elements, the center sees only the
generators' own projections, and the sector projectors resolve the
identity.
"""

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from commutant_lab._linalg import subspaces_equal
from commutant_lab.catalog import GateSet, build
from commutant_lab.closure import hermitian_representatives, lie_closure
from commutant_lab.commutant import bond_algebra, commutant, sector_table
from commutant_lab.operators import ChainGeometry, Operator, adjoint_superop
from commutant_lab.superalgebra import minimal_super_commutant, super_commutant

CATALOG_GRID = [
    ("u1", 3),
    ("su2", 3),
    ("tjz", 2),
    ("tjz_mg", 2),
    ("translation", 3),
    ("mg_z2", 3),
    ("mg_u1", 3),
    ("xz_decoupled", 3),
    ("z2", 3),
    ("universal", 2),
]

_GEOM2 = ChainGeometry.qubits(2, "open")


def _random_op(rng, geom=_GEOM2, hermitian=False):
    d = geom.dim
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    if hermitian:
        a = a + a.conj().T
    return Operator(geom, sp.csr_matrix(a), "yes" if hermitian else "unknown")


# ---------------------------------------------------------------------------
# adjoint map is a Lie-algebra homomorphism
# ---------------------------------------------------------------------------


@settings(max_examples=50, deadline=None, derandomize=True)
@given(st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_adjoint_map_is_lie_homomorphism(seed):
    rng = np.random.default_rng(seed)
    a = _random_op(rng)
    b = _random_op(rng)
    comm_op = Operator(
        _GEOM2,
        (a.entries @ b.entries - b.entries @ a.entries).tocsr(),
        "unknown",
    )
    left = adjoint_superop(comm_op).entries.toarray()
    la = adjoint_superop(a).entries.toarray()
    lb = adjoint_superop(b).entries.toarray()
    right = la @ lb - lb @ la
    scale = max(np.abs(la).max() * np.abs(lb).max(), 1.0)
    assert np.abs(left - right).max() < 1e-9 * scale


@settings(max_examples=25, deadline=None, derandomize=True)
@given(st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_adjoint_map_kernel_is_scalar(seed):
    # ad_A annihilates exactly the commutant of A; for a random dense A
    # with a nondegenerate spectrum that is the polynomials in A (dim d)
    rng = np.random.default_rng(seed)
    a = _random_op(rng, hermitian=True)
    mat = adjoint_superop(a).entries.toarray()
    vals = np.linalg.svd(mat, compute_uv=False)
    d = _GEOM2.dim
    assert (vals < 1e-9 * max(vals.max(), 1.0)).sum() == d


# ---------------------------------------------------------------------------
# double commutant
# ---------------------------------------------------------------------------


def _double_commutant_matches(gates) -> bool:
    bond = bond_algebra(gates)
    comm = commutant(gates)
    reps = hermitian_representatives(comm)
    comm_gates = GateSet(f"comm({gates.name})", gates.geometry, tuple(reps))
    back = commutant(comm_gates)
    return subspaces_equal(bond.matrix, back.matrix)


@pytest.mark.parametrize("name,L", [(n, min(L, 3)) for n, L in CATALOG_GRID])
def test_double_commutant_recovers_bond_algebra(name, L):
    assert _double_commutant_matches(build(name, L))


@settings(max_examples=15, deadline=None, derandomize=True)
@given(st.integers(min_value=0, max_value=2 ** 32 - 1),
       st.integers(min_value=1, max_value=3))
def test_double_commutant_on_random_gate_sets(seed, num_gens):
    rng = np.random.default_rng(seed)
    gens = tuple(_random_op(rng, hermitian=True) for _ in range(num_gens))
    gates = GateSet("random", _GEOM2, gens)
    assert _double_commutant_matches(gates)


# ---------------------------------------------------------------------------
# super-commutant containment
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("name,L", CATALOG_GRID)
def test_minimal_scomm_inside_computed_scomm(name, L):
    gates = build(name, L)
    scomm = super_commutant(gates)
    scommt = minimal_super_commutant(commutant(gates))
    assert scommt.dimension <= scomm.dimension
    resid = scommt.matrix - scomm.matrix @ (
        scomm.matrix.conj().T @ scommt.matrix
    )
    assert np.abs(resid).max() < 1e-9


# ---------------------------------------------------------------------------
# sector structure of the closure
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("name,L", CATALOG_GRID)
def test_structured_sectors_hold_traceless_closure_elements(name, L):
    gates = build(name, L)
    _, _, _, triples = sector_table(gates)
    dla = lie_closure(gates)
    reps = [r.dense() for r in hermitian_representatives(dla)]
    for proj, D, _ in triples:
        if D == 1:
            continue
        p = proj.dense()
        tr_p = np.trace(p).real
        best = 0.0
        for r in reps:
            inside = p @ r @ p
            inside -= (np.trace(inside) / tr_p) * p
            best = max(best, np.abs(inside).max())
        assert best > 1e-9


@pytest.mark.parametrize("name,L", CATALOG_GRID)
def test_center_projection_of_closure_matches_generators(name, L):
    gates = build(name, L)
    _, _, cen, _ = sector_table(gates)
    dla = lie_closure(gates)
    gen_cols = np.stack([g.dense().ravel() for g in gates.generators], axis=1)
    z = cen.matrix

    def proj(cols):
        return z @ (z.conj().T @ cols)

    a, b = proj(dla.matrix), proj(gen_cols)
    tol = 1e-9 * max(np.abs(a).max(), np.abs(b).max(), 1.0)
    ra = np.linalg.matrix_rank(a, tol=tol)
    rb = np.linalg.matrix_rank(b, tol=tol)
    rboth = np.linalg.matrix_rank(np.hstack([a, b]), tol=tol)
    assert ra == rb == rboth


# ---------------------------------------------------------------------------
# sector projector axioms
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("name,L", CATALOG_GRID)
def test_sector_projector_axioms(name, L):
    gates = build(name, L)
    _, _, _, triples = sector_table(gates)
    projs = [p.dense() for p, _, _ in triples]
    d = gates.geometry.dim
    assert np.abs(sum(projs) - np.eye(d)).max() < 1e-9
    for i, p in enumerate(projs):
        assert np.abs(p @ p - p).max() < 1e-9
        assert np.abs(p - p.conj().T).max() < 1e-9
        for q in projs[i + 1:]:
            assert np.abs(p @ q).max() < 1e-9
        for g in gates.generators:
            gd = g.dense()
            assert np.abs(p @ gd - gd @ p).max() < 1e-9
