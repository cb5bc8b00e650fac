"""Named gate-set constructors for qubit and qutrit chains.

Every builder returns Hermitian generators with coefficients exactly as
printed in the source Hamiltonians (no extra normalization).  Wrap-around
bonds that coincide with existing bonds at small L are de-duplicated,
since linearly dependent generators only slow the closure engines down.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .operators import (
    ChainGeometry,
    Operator,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    embed_local,
    hermiticity_deviation,
    identity_operator,
)

CATALOG_NAMES = (
    "u1",
    "su2",
    "tjz",
    "tjz_mg",
    "translation",
    "mg_z2",
    "mg_u1",
    "xz_decoupled",
    "z2",
    "universal",
)

_DEFAULT_BOUNDARY = {
    "u1": "periodic",
    "su2": "periodic",
    "translation": "periodic",
    "z2": "periodic",
    "universal": "periodic",
    "tjz": "open",
    "tjz_mg": "open",
    "mg_z2": "open",
    "mg_u1": "open",
    "xz_decoupled": "open",
}

# qutrit basis ordering: |up> = 0, |0> = 1, |down> = 2
QUTRIT_Z = np.diag([1.0, 0.0, -1.0]).astype(complex)

# spin-1/2 operators S^alpha = sigma^alpha / 2
SPIN = {
    "x": PAULI_X / 2,
    "y": PAULI_Y / 2,
    "z": PAULI_Z / 2,
}


@dataclass(frozen=True)
class GateSet:
    """A named collection of Hermitian generators on a chain."""

    name: str
    geometry: ChainGeometry
    generators: tuple
    include_identity: bool = False

    def __post_init__(self):
        for g in self.generators:
            if g.geometry != self.geometry:
                raise ValueError("generator geometry mismatch")
            if g.hermitian_flag != "yes":
                raise ValueError("all generators must be Hermitian")

    def __len__(self):
        return len(self.generators)


def _append_unique(gens, op):
    """Append op unless an exactly identical generator is already present."""
    for g in gens:
        if g.entries.shape == op.entries.shape and (g.entries != op.entries).nnz == 0:
            return
    gens.append(op)


def _hopping_term():
    # T = |up 0><0 up| + |down 0><0 down| + h.c. on two qutrits
    t = np.zeros((9, 9), dtype=complex)
    up, hole, down = 0, 1, 2
    for spin in (up, down):
        a = spin * 3 + hole   # |spin 0>
        b = hole * 3 + spin   # |0 spin>
        t[a, b] = 1.0
        t[b, a] = 1.0
    return t


def _window_sites(j, k, L):
    return [(j + r - 1) % L + 1 for r in range(k)]


def _permutation_matrix(perm, k):
    # operator sending |i_1 ... i_k> to |i_{perm^-1(1)} ... >, i.e. moving
    # the content of slot r to slot perm(r), on k qubits
    dim = 2 ** k
    m = np.zeros((dim, dim), dtype=complex)
    for idx in range(dim):
        bits = [(idx >> (k - 1 - r)) & 1 for r in range(k)]
        out_bits = [0] * k
        for r in range(k):
            out_bits[perm[r]] = bits[r]
        out = 0
        for b in out_bits:
            out = (out << 1) | b
        m[out, idx] = 1.0
    return m


def _su2_window_generators(k):
    """Hermitian generators spanning the site-permutation algebra on k qubits."""
    if k == 2:
        # the printed Heisenberg form
        sxx = sum(np.kron(SPIN[a], SPIN[a]) for a in "xyz")
        return [np.asarray(sxx)]
    mats = []
    seen = set()
    for perm in permutations(range(k)):
        if perm == tuple(range(k)):
            continue
        inv = tuple(np.argsort(perm))
        if perm in seen:
            continue
        seen.add(perm)
        seen.add(inv)
        p = _permutation_matrix(perm, k)
        if inv == perm:
            mats.append(p)
        else:
            q = _permutation_matrix(inv, k)
            mats.append(p + q)
            mats.append(1j * (p - q))
    return mats


def build(name, L, boundary=None, k=None):
    """Construct a catalog gate set on an L-site chain.

    k selects the interaction range for the su2 family (default 2).  All
    other sets ignore it.
    """
    if name not in CATALOG_NAMES:
        raise ValueError(f"unknown gate set {name!r}; choose from {CATALOG_NAMES}")
    if L < 2:
        raise ValueError("catalog sets need at least L = 2 sites")
    if boundary is None:
        boundary = _DEFAULT_BOUNDARY[name]
    if name in ("tjz", "tjz_mg"):
        geom = ChainGeometry.qudits(L, 3, boundary)
    else:
        geom = ChainGeometry.qubits(L, boundary)

    bonds = geom.bonds()
    gens = []

    if name == "u1":
        hop = np.kron(PAULI_X, PAULI_X) + np.kron(PAULI_Y, PAULI_Y)
        for b in bonds:
            _append_unique(gens, embed_local(hop, list(b), geom))
        for b in bonds:
            _append_unique(gens, embed_local(np.kron(PAULI_Z, PAULI_Z), list(b), geom))
        for j in range(1, L + 1):
            _append_unique(gens, embed_local(PAULI_Z, [j], geom))

    elif name == "su2":
        k = 2 if k is None else int(k)
        if k < 2 or k > L:
            raise ValueError("su2 locality k must satisfy 2 <= k <= L")
        windows = (
            [_window_sites(j, k, L) for j in range(1, L + 1)]
            if boundary == "periodic"
            else [list(range(j, j + k)) for j in range(1, L - k + 2)]
        )
        local_gens = _su2_window_generators(k)
        for sites in windows:
            for m in local_gens:
                _append_unique(gens, embed_local(m, sites, geom))

    elif name == "tjz":
        t = _hopping_term()
        zz = np.kron(QUTRIT_Z, QUTRIT_Z)
        for b in bonds:
            _append_unique(gens, embed_local(t, list(b), geom))
        for b in bonds:
            _append_unique(gens, embed_local(zz, list(b), geom))
        for j in range(1, L + 1):
            _append_unique(gens, embed_local(QUTRIT_Z, [j], geom))
        for j in range(1, L + 1):
            _append_unique(gens, embed_local(QUTRIT_Z @ QUTRIT_Z, [j], geom))

    elif name == "tjz_mg":
        t = _hopping_term()
        z2 = QUTRIT_Z @ QUTRIT_Z
        holo = np.kron(z2, z2) - np.kron(QUTRIT_Z, QUTRIT_Z)
        for b in bonds:
            _append_unique(gens, embed_local(t, list(b), geom))
        for b in bonds:
            _append_unique(gens, embed_local(holo, list(b), geom))
        for j in range(1, L + 1):
            _append_unique(gens, embed_local(z2, [j], geom))

    elif name == "translation":
        if boundary != "periodic":
            raise ValueError("the translation-invariant set requires periodic boundaries")
        for a in "xyz":
            total = embed_local(SPIN[a], [1], geom)
            for j in range(2, L + 1):
                total = total + embed_local(SPIN[a], [j], geom)
            gens.append(
                Operator(geom, total.entries, "yes")
            )
        for a in "xyz":
            for b_lab in "xyz":
                two = np.kron(SPIN[a], SPIN[b_lab])
                acc = embed_local(two, list(bonds[0]), geom)
                for bond in bonds[1:]:
                    acc = acc + embed_local(two, list(bond), geom)
                gens.append(Operator(geom, acc.entries, "yes"))

    elif name == "mg_z2":
        xx = np.kron(PAULI_X, PAULI_X)
        for b in bonds:
            _append_unique(gens, embed_local(xx, list(b), geom))
        for j in range(1, L + 1):
            _append_unique(gens, embed_local(PAULI_Z, [j], geom))

    elif name == "mg_u1":
        hop = np.kron(PAULI_X, PAULI_X) + np.kron(PAULI_Y, PAULI_Y)
        for b in bonds:
            _append_unique(gens, embed_local(hop, list(b), geom))
        for j in range(1, L + 1):
            _append_unique(gens, embed_local(PAULI_Z, [j], geom))

    elif name == "xz_decoupled":
        for j in range(1, L + 1):
            gens.append(embed_local(PAULI_X, [j], geom))
        for j in range(1, L + 1):
            gens.append(embed_local(PAULI_Z, [j], geom))

    elif name == "z2":
        gens.append(identity_operator(geom))
        for j in range(1, L + 1):
            gens.append(embed_local(PAULI_Z, [j], geom))
        xx = np.kron(PAULI_X, PAULI_X)
        zz = np.kron(PAULI_Z, PAULI_Z)
        for b in bonds:
            _append_unique(gens, embed_local(xx, list(b), geom))
        for b in bonds:
            _append_unique(gens, embed_local(zz, list(b), geom))

    elif name == "universal":
        gens.append(identity_operator(geom))
        for j in range(1, L + 1):
            gens.append(embed_local(PAULI_X, [j], geom))
        for j in range(1, L + 1):
            gens.append(embed_local(PAULI_Z, [j], geom))
        xx = np.kron(PAULI_X, PAULI_X)
        zz = np.kron(PAULI_Z, PAULI_Z)
        for b in bonds:
            _append_unique(gens, embed_local(xx, list(b), geom))
        for b in bonds:
            _append_unique(gens, embed_local(zz, list(b), geom))

    include_identity = name in ("z2", "universal")
    return GateSet(name, geom, tuple(gens), include_identity)


def custom(generators, name="custom"):
    """Wrap user-provided Hermitian generators as a gate set."""
    if not generators:
        raise ValueError("need at least one generator")
    geom = generators[0].geometry
    ident = identity_operator(geom)
    wrapped = []
    has_identity = False
    for g in generators:
        if g.geometry != geom:
            raise ValueError("generators live on different geometries")
        dev = hermiticity_deviation(g.entries)
        if dev > 1e-10 * max(g.norm(), 1.0):
            raise ValueError(
                f"non-Hermitian generator: max deviation {dev:.3e}"
            )
        wrapped.append(Operator(geom, g.entries, "yes"))
        if (g.entries != ident.entries).nnz == 0:
            has_identity = True
    return GateSet(name, geom, tuple(wrapped), has_identity)
