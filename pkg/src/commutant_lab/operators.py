"""Operators on qudit chains and on the doubled (operator) space.

Conventions, fixed once and used everywhere:

* Site 1 is the *slowest* Kronecker index: a basis state of the chain is
  ``|x_1 x_2 ... x_L>`` with flat index ``x_1`` most significant.
* ``vectorize`` flattens row-major, so ``|O>`` has component ``O[mu, nu]`` at
  flat index ``mu * dim + nu``.  With that choice
  ``kron(A, B) @ vec(X) == vec(A @ X @ B.T)``.
* A superoperator is a ``dim^2 x dim^2`` matrix acting on vectorized
  operators.  Viewed as a four-index tensor its axes are
  ``(row1, row2, col1, col2)``: axes 1,2 form the matrix row, axes 3,4 the
  matrix column.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import prod
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from ._linalg import TOL_HERM

__all__ = [
    "ChainGeometry",
    "Operator",
    "VectorizedOperator",
    "SuperOperator",
    "embed_local",
    "hs_inner",
    "commutator",
    "adjoint_superop",
    "vectorize",
    "devectorize",
    "partial_transpose_pattern",
    "partial_trace",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "identity_operator",
]

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


@dataclass(frozen=True)
class ChainGeometry:
    """A chain of qudits with per-site local dimensions."""

    num_sites: int
    local_dims: tuple
    boundary: str = "open"

    def __post_init__(self):
        object.__setattr__(self, "local_dims", tuple(int(d) for d in self.local_dims))
        if self.num_sites != len(self.local_dims):
            raise ValueError("local_dims length must equal num_sites")
        if any(d < 2 for d in self.local_dims):
            raise ValueError("every local dimension must be >= 2")
        if self.boundary not in ("open", "periodic"):
            raise ValueError(f"unknown boundary {self.boundary!r}")

    @classmethod
    def qubits(cls, num_sites: int, boundary: str = "open") -> "ChainGeometry":
        return cls(num_sites, (2,) * num_sites, boundary)

    @classmethod
    def qudits(cls, num_sites: int, d: int, boundary: str = "open") -> "ChainGeometry":
        return cls(num_sites, (d,) * num_sites, boundary)

    @property
    def dim(self) -> int:
        return prod(self.local_dims)

    def bonds(self) -> list:
        """Nearest-neighbour bonds as 1-based site pairs, including the
        wrap-around bond for periodic boundaries."""
        pairs = [(j, j + 1) for j in range(1, self.num_sites)]
        if self.boundary == "periodic" and self.num_sites >= 2:
            pairs.append((self.num_sites, 1))
        return pairs

    def place_values(self) -> np.ndarray:
        """``place_values()[j-1]`` is the flat-index stride of site j."""
        pv = np.ones(self.num_sites, dtype=np.int64)
        for j in range(self.num_sites - 2, -1, -1):
            pv[j] = pv[j + 1] * self.local_dims[j + 1]
        return pv


def _trivial_geometry() -> ChainGeometry:
    # zero-site chain used only as the codomain of a full partial trace
    geom = object.__new__(ChainGeometry)
    object.__setattr__(geom, "num_sites", 0)
    object.__setattr__(geom, "local_dims", ())
    object.__setattr__(geom, "boundary", "open")
    return geom


@dataclass
class Operator:
    """A linear operator on the chain Hilbert space (sparse storage)."""

    geometry: ChainGeometry
    entries: sp.spmatrix
    hermitian_flag: str = "unknown"  # one of {"yes", "no", "unknown"}

    def __post_init__(self):
        self.entries = sp.csr_matrix(self.entries, dtype=complex)
        d = self.geometry.dim
        if self.entries.shape != (d, d):
            raise ValueError(
                f"entries shape {self.entries.shape} does not match dim {d}"
            )
        if self.hermitian_flag == "yes":
            dev = hermiticity_deviation(self.entries)
            if dev > TOL_HERM:
                raise ValueError(
                    f"operator marked hermitian deviates by {dev:.3e} in max norm"
                )

    def dense(self) -> np.ndarray:
        return self.entries.toarray()

    def adjoint(self) -> "Operator":
        return Operator(self.geometry, self.entries.getH(), self.hermitian_flag)

    def is_hermitian(self) -> bool:
        if self.hermitian_flag == "unknown":
            flag = hermiticity_deviation(self.entries) <= TOL_HERM
            self.hermitian_flag = "yes" if flag else "no"
        return self.hermitian_flag == "yes"

    def __add__(self, other: "Operator") -> "Operator":
        _check_same_geometry(self, other)
        return Operator(self.geometry, self.entries + other.entries)

    def __sub__(self, other: "Operator") -> "Operator":
        _check_same_geometry(self, other)
        return Operator(self.geometry, self.entries - other.entries)

    def __mul__(self, scalar: complex) -> "Operator":
        return Operator(self.geometry, self.entries * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return Operator(self.geometry, -self.entries)

    def __matmul__(self, other: "Operator") -> "Operator":
        _check_same_geometry(self, other)
        return Operator(self.geometry, self.entries @ other.entries)

    def norm(self) -> float:
        """Hilbert-Schmidt norm."""
        return float(np.sqrt(abs(hs_inner(self, self).real)))

    def trace(self) -> complex:
        return complex(self.entries.diagonal().sum())


def hermiticity_deviation(m: sp.spmatrix) -> float:
    dev = m - m.getH()
    return float(np.max(np.abs(dev.data))) if dev.nnz else 0.0


def _check_same_geometry(a, b) -> None:
    if a.geometry != b.geometry:
        raise ValueError("operators live on different chain geometries")


def identity_operator(geom: ChainGeometry) -> Operator:
    return Operator(geom, sp.identity(geom.dim, dtype=complex, format="csr"), "yes")


@dataclass
class VectorizedOperator:
    """Row-major flattening of an operator, |O> with O[mu,nu] at mu*dim+nu."""

    geometry: ChainGeometry
    coefficients: np.ndarray

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=complex).ravel()
        if self.coefficients.size != self.geometry.dim**2:
            raise ValueError("coefficient length must be dim(H)^2")

    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))


@dataclass
class SuperOperator:
    """A linear map on operator space, stored as a dim^2 x dim^2 matrix."""

    geometry: ChainGeometry
    entries: sp.spmatrix

    def __post_init__(self):
        self.entries = sp.csr_matrix(self.entries, dtype=complex)
        n = self.geometry.dim**2
        if self.entries.shape != (n, n):
            raise ValueError("superoperator shape must be dim^2 x dim^2")

    def apply(self, v: VectorizedOperator) -> VectorizedOperator:
        if v.geometry != self.geometry:
            raise ValueError("geometry mismatch")
        return VectorizedOperator(self.geometry, self.entries @ v.coefficients)

    def dense(self) -> np.ndarray:
        return self.entries.toarray()


def embed_local(op_local, sites: Sequence[int], geom: ChainGeometry) -> Operator:
    """Embed a local matrix acting on ``sites`` (1-based, ordered, possibly
    non-contiguous) into the full chain, identity elsewhere.

    ``op_local`` must act on the tensor product of the listed sites *in the
    given order*, first listed site slowest.
    """
    sites = list(sites)
    if len(set(sites)) != len(sites):
        raise ValueError("sites must be distinct")
    if any(s < 1 or s > geom.num_sites for s in sites):
        raise ValueError(f"site out of range 1..{geom.num_sites}: {sites}")
    dims = geom.local_dims
    loc_dim = prod(dims[s - 1] for s in sites)
    loc = sp.coo_matrix(np.asarray(op_local, dtype=complex)
                        if not sp.issparse(op_local) else op_local)
    if loc.shape != (loc_dim, loc_dim):
        raise ValueError(
            f"local operator shape {loc.shape} does not match sites {sites} "
            f"with product dimension {loc_dim}"
        )
    pv = geom.place_values()

    def offsets_for(site_list: Iterable[int]) -> np.ndarray:
        out = np.zeros(1, dtype=np.int64)
        for s in site_list:
            step = np.arange(dims[s - 1], dtype=np.int64) * pv[s - 1]
            out = (out[:, None] + step[None, :]).ravel()
        return out

    loc_offsets = offsets_for(sites)
    rest = [s for s in range(1, geom.num_sites + 1) if s not in sites]
    rest_offsets = offsets_for(rest)

    rows = (loc_offsets[loc.row][:, None] + rest_offsets[None, :]).ravel()
    cols = (loc_offsets[loc.col][:, None] + rest_offsets[None, :]).ravel()
    data = np.repeat(loc.data, rest_offsets.size)
    full = sp.coo_matrix((data, (rows, cols)), shape=(geom.dim, geom.dim))
    herm = "yes" if hermiticity_deviation(loc.tocsr()) <= TOL_HERM else "unknown"
    return Operator(geom, full.tocsr(), herm)


def hs_inner(a: Operator, b: Operator) -> complex:
    """Hilbert-Schmidt inner product tr(A† B)."""
    _check_same_geometry(a, b)
    return complex(a.entries.conj().multiply(b.entries).sum())


def commutator(a: Operator, b: Operator) -> Operator:
    _check_same_geometry(a, b)
    return Operator(a.geometry, a.entries @ b.entries - b.entries @ a.entries)


def adjoint_superop(k: Operator) -> SuperOperator:
    """The adjoint map O -> [K, O] as a matrix on vectorized operators."""
    d = k.geometry.dim
    eye = sp.identity(d, dtype=complex, format="csr")
    m = sp.kron(k.entries, eye, format="csr") - sp.kron(
        eye, k.entries.T, format="csr"
    )
    return SuperOperator(k.geometry, m)


def vectorize(o: Operator) -> VectorizedOperator:
    return VectorizedOperator(o.geometry, o.dense().ravel())


def devectorize(v: VectorizedOperator) -> Operator:
    d = v.geometry.dim
    return Operator(v.geometry, sp.csr_matrix(v.coefficients.reshape(d, d)))


def partial_transpose_pattern(
    s: SuperOperator, pattern_from: Sequence[int], pattern_to: Sequence[int]
) -> SuperOperator:
    """Permute the four copy axes of a superoperator.

    Axes are labelled 1..4 in the canonical order (row1, row2, col1, col2).
    The output tensor carries, at the canonical position of label
    ``pattern_to[k]``, the input axis labelled ``pattern_from[k]``.  Applying
    the same transposition twice is the identity.
    """
    pf, pt = list(pattern_from), list(pattern_to)
    if sorted(pf) != [1, 2, 3, 4] or sorted(pt) != [1, 2, 3, 4]:
        raise ValueError("patterns must be permutations of (1, 2, 3, 4)")
    # target axis position of each input axis label
    dest = {a: pt.index(a) for a in pf}
    src_for = [None] * 4
    for k, a in enumerate(pf):
        src_for[dest[a]] = k
    d = s.geometry.dim
    m = s.entries.tocoo()
    ax_in = [m.row // d, m.row % d, m.col // d, m.col % d]
    ax_out = [ax_in[src_for[k]] for k in range(4)]
    row = ax_out[0] * d + ax_out[1]
    col = ax_out[2] * d + ax_out[3]
    out = sp.coo_matrix((m.data, (row, col)), shape=m.shape)
    return SuperOperator(s.geometry, out.tocsr())


def partial_trace(rho: Operator, region) -> Operator:
    """Trace out the (1-based) sites in ``region``; keep the rest.

    Tracing out every site returns a 1x1 operator holding tr(rho).
    """
    region = sorted(set(int(s) for s in region))
    if any(s < 1 or s > rho.geometry.num_sites for s in region):
        raise ValueError("region site out of range")
    dims = rho.geometry.local_dims
    L = rho.geometry.num_sites
    t = rho.dense().reshape(dims + dims)
    n = L
    for s in reversed(region):
        t = np.trace(t, axis1=s - 1, axis2=s - 1 + n)
        n -= 1
    keep = [s for s in range(1, L + 1) if s not in region]
    if not keep:
        geom = _trivial_geometry()
        return Operator(geom, sp.csr_matrix(np.atleast_2d(t)))
    geom = ChainGeometry(len(keep), tuple(dims[s - 1] for s in keep), "open")
    d = geom.dim
    return Operator(geom, sp.csr_matrix(t.reshape(d, d)))
