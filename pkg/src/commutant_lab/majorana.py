"""Jordan-Wigner strings on a qubit chain and free-fermion predictions.

Majorana operators are realized through the Jordan-Wigner mapping and
composed symbolically: every string is a signed product of distinct
gamma factors kept in ascending index order, with the accumulated phase
stored as an exact power of i.  On top of the string algebra the module
provides the string-number superoperator, the analytic dyad basis for
the matchgate super-commutant, a checker that compares the analytic
operator-space decomposition against the generic block engine, and the
closed-form saturation values (OTOC plateau, subsystem purity) that the
matchgate and fully expressive gate families predict.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .catalog import build
from .closure import OperatorBasis
from .operators import ChainGeometry, Operator, SuperOperator, adjoint_superop
from .superalgebra import (
    BlockDecomposition,
    _krylov_span,
    block_decomposition,
    doubled_geometry,
)

PHASE = (1 + 0j, 1j, -1 + 0j, -1j)

# Largest chain for which dense string vectors (length 4^L) are built.
MAX_DENSE_STRINGS = 5


def _qubit_chain(chain) -> ChainGeometry:
    if isinstance(chain, ChainGeometry):
        geom = chain
    else:
        geom = ChainGeometry.qubits(int(chain), "open")
    if any(d != 2 for d in geom.local_dims):
        raise ValueError("Jordan-Wigner strings require a qubit chain")
    return geom


def _gamma_masks(k: int, L: int) -> tuple[int, int, int]:
    """Pauli masks (z, x, quarter-phase) of gamma_k on an L-site chain.

    Site j occupies bit L-j, so site 1 is the most significant bit,
    matching the tensor ordering used by embed_local.
    """
    j = (k + 1) // 2
    z = 0
    for s in range(1, j):
        z |= 1 << (L - s)
    x = 1 << (L - j)
    if k % 2 == 1:  # gamma_{2j-1} = Z...Z X_j
        return z, x, 0
    # gamma_{2j} = Z...Z Y_j and Y = -i Z X on a single site
    return z | x, x, 3


def _pauli_mul(a: tuple[int, int, int], b: tuple[int, int, int]) -> tuple[int, int, int]:
    za, xa, qa = a
    zb, xb, qb = b
    flips = (xa & zb).bit_count()
    return za ^ zb, xa ^ xb, (qa + qb + 2 * flips) % 4


def _pauli_matrix(z: int, x: int, q: int, d: int) -> sp.csr_matrix:
    cols = np.arange(d, dtype=np.int64)
    rows = cols ^ x
    signs = 1 - 2 * (np.bitwise_count(np.uint64(z) & rows.astype(np.uint64)).astype(np.int64) & 1)
    data = PHASE[q] * signs.astype(complex)
    return sp.csr_matrix((data, (rows, cols)), shape=(d, d))


@dataclass(frozen=True)
class MajoranaString:
    """A signed product of distinct gamma factors in ascending order.

    The realized operator is i^phase_power * gamma_{i1} ... gamma_{in}
    with i1 < ... < in.  The default phase_power floor(n/2) makes the
    string Hermitian; its Hilbert-Schmidt norm is 2^{L/2}.
    """

    num_sites: int
    indices: tuple
    phase_power: int | None = None

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if list(idx) != sorted(set(idx)):
            raise ValueError("indices must be strictly increasing")
        if idx and (idx[0] < 1 or idx[-1] > 2 * self.num_sites):
            raise ValueError("gamma index outside 1..2L")
        pp = len(idx) // 2 if self.phase_power is None else int(self.phase_power) % 4
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "phase_power", pp)

    @property
    def degree(self) -> int:
        return len(self.indices)

    @property
    def occupation(self) -> tuple:
        bits = [0] * (2 * self.num_sites)
        for i in self.indices:
            bits[i - 1] = 1
        return tuple(bits)

    @property
    def phase(self) -> complex:
        return PHASE[self.phase_power]

    def pauli_masks(self) -> tuple[int, int, int]:
        acc = (0, 0, self.phase_power)
        for k in self.indices:
            acc = _pauli_mul(acc, _gamma_masks(k, self.num_sites))
        return acc

    def realize(self) -> Operator:
        geom = ChainGeometry.qubits(self.num_sites, "open")
        z, x, q = self.pauli_masks()
        flag = "yes" if self.phase_power == self.degree // 2 else "unknown"
        return Operator(geom, _pauli_matrix(z, x, q, geom.dim), flag)

    def hs_vector(self) -> np.ndarray:
        """Row-major vectorization of the string, normalized to unit HS norm."""
        d = 2 ** self.num_sites
        z, x, q = self.pauli_masks()
        cols = np.arange(d, dtype=np.int64)
        rows = cols ^ x
        signs = 1 - 2 * (
            np.bitwise_count(np.uint64(z) & rows.astype(np.uint64)).astype(np.int64) & 1
        )
        vec = np.zeros(d * d, dtype=complex)
        vec[rows * d + cols] = PHASE[q] * signs / math.sqrt(d)
        return vec

    def multiply(self, other: "MajoranaString") -> tuple[complex, "MajoranaString"]:
        """Product self @ other as (coefficient, canonical Hermitian string)."""
        if other.num_sites != self.num_sites:
            raise ValueError("strings live on different chains")
        swaps = 0
        out = []
        a, b = self.indices, other.indices
        i = j = 0
        while i < len(a) and j < len(b):
            if a[i] < b[j]:
                out.append(a[i])
                i += 1
            elif a[i] > b[j]:
                swaps += len(a) - i
                out.append(b[j])
                j += 1
            else:  # gamma^2 = 1 after commuting past the tail of a
                swaps += len(a) - i - 1
                i += 1
                j += 1
        out.extend(a[i:])
        out.extend(b[j:])
        result = MajoranaString(self.num_sites, tuple(out))
        power = (
            self.phase_power + other.phase_power + 2 * (swaps % 2) - result.phase_power
        ) % 4
        return PHASE[power], result

    def dual(self) -> tuple[complex, "MajoranaString"]:
        """Left-multiply by the full string: Gamma_all @ self = c * complement."""
        full = MajoranaString(self.num_sites, tuple(range(1, 2 * self.num_sites + 1)))
        return full.multiply(self)


def jordan_wigner(j: int, kind: str, chain) -> Operator:
    """Majorana operator at site j: kind "odd" -> gamma_{2j-1}, "even" -> gamma_{2j}."""
    geom = _qubit_chain(chain)
    if not 1 <= j <= geom.num_sites:
        raise ValueError(f"site {j} outside 1..{geom.num_sites}")
    if kind not in ("odd", "even"):
        raise ValueError("kind must be 'odd' or 'even'")
    k = 2 * j - 1 if kind == "odd" else 2 * j
    return MajoranaString(geom.num_sites, (k,)).realize()


def all_majoranas(chain) -> list:
    """The 2L Majorana operators gamma_1 .. gamma_2L in order."""
    geom = _qubit_chain(chain)
    out = []
    for j in range(1, geom.num_sites + 1):
        out.append(jordan_wigner(j, "odd", geom))
        out.append(jordan_wigner(j, "even", geom))
    return out


def strings_of_degree(L: int, n: int):
    """Iterate the canonical Hermitian strings of a given degree."""
    for combo in itertools.combinations(range(1, 2 * L + 1), n):
        yield MajoranaString(L, combo)


def string_basis(L: int) -> list:
    """All 4^L Hermitian strings ordered by (degree, indices)."""
    out = []
    for n in range(2 * L + 1):
        out.extend(strings_of_degree(L, n))
    return out


def majorana_number_superop(L: int) -> SuperOperator:
    """The string-number superoperator sum_n n sum_{|a|=n} |a><<a|.

    Diagonal in the orthonormal string basis with integer eigenvalues
    equal to the string degree.  It commutes with the adjoint action of
    every open-boundary matchgate generator but not with the periodic
    wrap term.
    """
    if L > MAX_DENSE_STRINGS:
        raise ValueError(
            f"dense string assembly limited to L <= {MAX_DENSE_STRINGS} sites"
        )
    d = 2 ** L
    rows, cols, data = [], [], []
    for s in string_basis(L):
        n = s.degree
        if n == 0:
            continue
        vec = s.hs_vector()
        idx = np.flatnonzero(vec)
        vals = vec[idx]
        rows.append(np.repeat(idx, idx.size))
        cols.append(np.tile(idx, idx.size))
        data.append(n * np.outer(vals, vals.conj()).ravel())
    mat = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(d * d, d * d),
    )
    geom = ChainGeometry.qubits(L, "open")
    return SuperOperator(geom, mat.tocsr())


def fermion_charge_superops(L: int) -> tuple[SuperOperator, SuperOperator]:
    """Left and right multiplication by the fermion number operator.

    With c_j = (gamma_{2j-1} + i gamma_{2j})/2 a site is occupied when
    Z_j = -1, so N = sum_j (1 - Z_j)/2.  Both returned superoperators
    commute with the adjoint action of any charge-conserving generator;
    simultaneous conservation encodes the independent bookkeeping of c
    and c-dagger factors.
    """
    geom = ChainGeometry.qubits(L, "open")
    d = geom.dim
    states = np.arange(d, dtype=np.uint64)
    counts = np.bitwise_count(states).astype(float)
    number = sp.diags(counts)
    eye = sp.identity(d, format="csr")
    left = SuperOperator(geom, sp.kron(number, eye, format="csr"))
    right = SuperOperator(geom, sp.kron(eye, number, format="csr"))
    return left, right


# ---------------------------------------------------------------------------
# Analytic dyad basis of the matchgate super-commutant (open boundaries)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DyadElement:
    """One orthonormal basis element sum_t coeff_t |ket_t><<bra_t|."""

    label: str
    kind: str  # "diag", "swap", "swap*", "parity"
    degree: int
    terms: tuple = field(repr=False)  # of (coeff, ket MajoranaString, bra MajoranaString)


@dataclass(frozen=True)
class MajoranaDyadBasis:
    """Orthonormal dyad basis of the matchgate super-commutant.

    For open boundaries the adjoint action preserves string degree, the
    degree-n and degree-(2L-n) sectors carry the same irrep for n < L,
    and the degree-L sector splits under the full-string involution.
    The resulting invariant maps are the sector projectors P_n, the
    complement swaps T_n (left multiplication by the full string cut to
    one sector) with their adjoints, and the two eigenprojectors of the
    degree-L involution -- 4L + 2 elements in total.
    """

    num_sites: int
    elements: tuple

    @property
    def dimension(self) -> int:
        return len(self.elements)

    def materialize(self) -> OperatorBasis:
        """Dense orthonormal columns on the doubled geometry (small L only)."""
        L = self.num_sites
        if L > 4:
            raise ValueError("materialize is limited to L <= 4")
        d = 2 ** L
        cols = np.zeros((d ** 4, len(self.elements)), dtype=complex)
        for k, elem in enumerate(self.elements):
            acc = np.zeros((d * d, d * d), dtype=complex)
            for coeff, ket, bra in elem.terms:
                acc += coeff * np.outer(ket.hs_vector(), bra.hs_vector().conj())
            cols[:, k] = acc.ravel()
        geom = doubled_geometry(ChainGeometry.qubits(L, "open"))
        return OperatorBasis(geom, cols, f"mg string dyad basis | L={L}")


def mg_scomm_strings(L: int, boundary: str = "open") -> MajoranaDyadBasis:
    """Analytic super-commutant basis for the matchgate set, open chain."""
    if boundary != "open":
        raise ValueError("the analytic dyad basis covers the open-boundary set")
    if L < 2:
        raise ValueError("need at least two sites")
    elements = []
    for n in range(2 * L + 1):
        if n == L:
            continue
        norm = 1.0 / math.sqrt(math.comb(2 * L, n))
        terms = tuple((norm, s, s) for s in strings_of_degree(L, n))
        elements.append(DyadElement(f"P{n}", "diag", n, terms))
    # degree-L eigenprojectors of left multiplication by the full string
    pairs = []
    for s in strings_of_degree(L, L):
        if 1 in s.indices:
            pairs.append((s, *s.dual()))
    pnorm = 1.0 / math.sqrt(len(pairs))
    for sign, tag in ((1.0, "+"), (-1.0, "-")):
        terms = []
        for s, c, comp in pairs:
            terms.append((0.5 * pnorm, s, s))
            terms.append((0.5 * pnorm, comp, comp))
            terms.append((sign * 0.5 * pnorm * c, comp, s))
            terms.append((sign * 0.5 * pnorm * np.conj(c), s, comp))
        elements.append(DyadElement(f"PL{tag}", "parity", L, tuple(terms)))
    for n in range(L):
        norm = 1.0 / math.sqrt(math.comb(2 * L, n))
        fwd, bwd = [], []
        for s in strings_of_degree(L, n):
            c, comp = s.dual()
            fwd.append((norm * c, comp, s))
            bwd.append((norm * np.conj(c), s, comp))
        elements.append(DyadElement(f"T{n}", "swap", n, tuple(fwd)))
        elements.append(DyadElement(f"T{n}*", "swap*", n, tuple(bwd)))
    return MajoranaDyadBasis(L, tuple(elements))


# ---------------------------------------------------------------------------
# Closed-form saturation values
# ---------------------------------------------------------------------------


def _otoc_mg_exact(L: int) -> Fraction:
    return 1 - Fraction(8 * (L - 1), 2 * L * L - L)


def predicted_otoc_mg(L: int) -> float:
    """Late-time OTOC plateau of a single-site Z under the matchgate ensemble."""
    if L < 2:
        raise ValueError("need at least two sites")
    return float(_otoc_mg_exact(L))


def _signed_overlap_count(L: int, n: int) -> int:
    """sum over degree-n strings of +-1, minus for strings anticommuting
    with a fixed degree-2 string."""
    total = 0
    for m in range(3):
        total += (-1) ** m * math.comb(2, m) * math.comb(2 * L - 2, n - m)
    return total


def _otoc_mg_strings_exact(L: int, site: int) -> Fraction:
    """Projector-formula OTOC evaluated termwise over the dyad basis.

    A = B = Z_site is (minus) the Hermitian degree-2 string u with
    indices (2 site - 1, 2 site).  For each basis element Q the formula
    needs tr(Q^dag (B otimes B^T)) and vec(A)^dag Q vec(A); both reduce
    to exact string combinatorics:

    * P_n: the A-side overlap is d/sqrt(C(2L,n)) when n = 2 and zero
      otherwise; the B-side trace counts degree-n strings signed by
      their commutation with u.
    * T_n and its adjoint: ket and bra degrees differ, so the A-side
      vanishes identically.
    * the degree-L eigenprojectors: only the dual pair containing u
      contributes on the A side (half weight each), and the signed count
      is constant on dual pairs, so each eigenprojector picks up half of
      the degree-L signed sum.
    """
    u = MajoranaString(L, (2 * site - 1, 2 * site))
    total = Fraction(0)
    if u.degree != L:
        c = math.comb(2 * L, u.degree)
        total += Fraction(_signed_overlap_count(L, u.degree), c)
    else:
        pairs = math.comb(2 * L, L) // 2
        per = Fraction(_signed_overlap_count(L, L), 2 * pairs) * Fraction(1, 2)
        total += 2 * per
    # remaining elements contribute zero: swaps have mismatched degrees and
    # projectors with n != degree(u) have no A-side overlap
    return total


def predicted_otoc_mg_strings(L: int, site: int | None = None) -> float:
    """Independent evaluation of the OTOC plateau from the dyad basis."""
    if L < 2:
        raise ValueError("need at least two sites")
    if site is None:
        site = (L + 1) // 2
    if not 1 <= site <= L:
        raise ValueError(f"site {site} outside 1..{L}")
    return float(_otoc_mg_strings_exact(L, site))


def _purity_universal_exact(L: int, ell: int) -> Fraction:
    two = Fraction(2)
    num = (two ** ell - two ** (-ell)) + (two ** (L - ell) - two ** (ell - L))
    return num / (two ** L - two ** (-L))


def _purity_matchgate_exact(L: int, ell: int) -> Fraction:
    total = Fraction(0)
    for k in range(0, L + 1):
        if 2 * k > 2 * (L - ell):
            break
        total += Fraction(
            math.comb(L, k) * math.comb(2 * (L - ell), 2 * k), math.comb(2 * L, 2 * k)
        )
    return total / Fraction(2) ** (L - ell)


def predicted_purity(L: int, ell: int, kind: str) -> float:
    """Late-time subsystem purity for a length-ell block of an L-site chain."""
    if not 0 <= ell <= L:
        raise ValueError("subsystem size must satisfy 0 <= ell <= L")
    if kind == "universal":
        return float(_purity_universal_exact(L, ell))
    if kind == "matchgate":
        return float(_purity_matchgate_exact(L, ell))
    raise ValueError("kind must be 'universal' or 'matchgate'")


# ---------------------------------------------------------------------------
# Decomposition checker
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MgDecompositionReport:
    num_sites: int
    boundary: str
    ok: bool
    messages: tuple
    computed: BlockDecomposition

    def __str__(self):
        head = f"matchgate decomposition check (L={self.num_sites}, {self.boundary}): "
        head += "ok" if self.ok else "MISMATCH"
        return "\n".join([head, *self.messages])


def _degree_span(L: int, degrees) -> np.ndarray:
    vecs = []
    for n in degrees:
        for s in strings_of_degree(L, n):
            vecs.append(s.hs_vector())
    return np.array(vecs).T


def _span_residual(vectors: np.ndarray, basis: OperatorBasis) -> float:
    worst = 0.0
    for k in range(vectors.shape[1]):
        worst = max(worst, float(np.linalg.norm(basis.residual(vectors[:, k]))))
    return worst


def _block_for(vec: np.ndarray, blocks) -> int:
    weights = [float(np.linalg.norm(b.basis.project_coefficients(vec))) for b in blocks]
    return int(np.argmax(weights))


def verify_mg_decomposition(L: int, boundary: str = "open") -> MgDecompositionReport:
    """Compare the block engine's matchgate decomposition with string theory.

    Open boundaries: degree sectors n and 2L-n pair up into doubly
    degenerate blocks for n < L and the degree-L sector splits in two
    under the full-string involution.  Periodic boundaries: the wrap
    term connects the members of each even pair, which merge into a
    single Krylov block.
    """
    if L < 2:
        raise ValueError("need at least two sites")
    if L > MAX_DENSE_STRINGS:
        raise ValueError("string comparison limited to small chains")
    gates = build("mg_z2", L, "open" if boundary == "open" else "periodic")
    decomp = block_decomposition(gates, restrict="none")
    blocks = decomp.blocks
    msgs = []
    ok = True
    tol = 1e-8

    if boundary == "open":
        expected = [
            ((n, 2 * L - n), math.comb(2 * L, n), 2) for n in range(L)
        ]
        used = set()
        for degrees, dim_k, deg in expected:
            span = _degree_span(L, set(degrees))
            idx = _block_for(span[:, 0], blocks)
            blk = blocks[idx]
            if idx in used:
                ok = False
                msgs.append(f"pair {degrees}: block {idx} matched twice")
            used.add(idx)
            if (blk.krylov_dim, blk.degeneracy) != (dim_k, deg):
                ok = False
                msgs.append(
                    f"pair {degrees}: expected ({dim_k},{deg}), engine found "
                    f"({blk.krylov_dim},{blk.degeneracy})"
                )
            r = _span_residual(span, blk.basis)
            if r > tol:
                ok = False
                msgs.append(f"pair {degrees}: span residual {r:.2e}")
            if degrees[0] == 2 and not blk.inside_bond:
                ok = False
                msgs.append("degree-2 block does not carry the generators")
        # the degree-L sector splits into the two involution eigenspaces
        half = math.comb(2 * L, L) // 2
        split = [i for i, b in enumerate(blocks) if i not in used]
        parity = [e for e in mg_scomm_strings(L).elements if e.kind == "parity"]
        for elem in parity:
            # eigenvectors (|a> + s c|a_bar>)/sqrt(2) grouped per dual pair
            sign = 1.0 if elem.label.endswith("+") else -1.0
            combo_cols = []
            for s in strings_of_degree(L, L):
                if 1 not in s.indices:
                    continue
                c, comp = s.dual()
                combo_cols.append(
                    (s.hs_vector() + sign * c * comp.hs_vector()) / math.sqrt(2.0)
                )
            span = np.array(combo_cols).T
            idx = _block_for(span[:, 0], blocks)
            blk = blocks[idx]
            if idx not in split:
                ok = False
                msgs.append(f"{elem.label}: landed in an already-matched block")
            if (blk.krylov_dim, blk.degeneracy) != (half, 1):
                ok = False
                msgs.append(
                    f"{elem.label}: expected ({half},1), engine found "
                    f"({blk.krylov_dim},{blk.degeneracy})"
                )
            r = _span_residual(span, blk.basis)
            if r > tol:
                ok = False
                msgs.append(f"{elem.label}: span residual {r:.2e}")
        if len(blocks) != L + 2:
            ok = False
            msgs.append(f"expected {L + 2} blocks, engine found {len(blocks)}")
    else:
        # periodic claims: {1, Gamma} stay central, a single degree-n seed
        # explores both members of each even pair (the Krylov subspace doubles
        # relative to open boundaries), and the generator space spans 2L(2L-1)
        # directions.  The irrep engine may refine a merged pair further into
        # inequivalent halves; that refinement is reported, not flagged.
        ident = _degree_span(L, {0})
        blk = blocks[_block_for(ident[:, 0], blocks)]
        if _span_residual(ident, blk.basis) > tol or blk.krylov_dim != 1:
            ok = False
            msgs.append("identity string is not central")
        full = _degree_span(L, {2 * L})
        blk = blocks[_block_for(full[:, 0], blocks)]
        if _span_residual(full, blk.basis) > tol or blk.krylov_dim != 1:
            ok = False
            msgs.append("full string is not central")
        ads = [adjoint_superop(g).entries for g in gates.generators]
        for n in range(2, L + 1, 2):
            if n == L and 2 * L - n == n:
                continue
            seed = next(strings_of_degree(L, n)).hs_vector()
            cyclic = _krylov_span(seed[:, None], ads)
            want = 2 * math.comb(2 * L, n)
            if cyclic.shape[1] != want:
                ok = False
                msgs.append(
                    f"even pair ({n},{2 * L - n}): cyclic module dimension "
                    f"{cyclic.shape[1]}, expected the merged value {want}"
                )
            pair = _degree_span(L, {n, 2 * L - n})
            r = max(
                float(np.linalg.norm(pair[:, k] - cyclic @ (cyclic.conj().T @ pair[:, k])))
                for k in range(pair.shape[1])
            )
            if r > tol:
                ok = False
                msgs.append(f"even pair ({n},{2 * L - n}): seed misses the pair, residual {r:.2e}")
        carrier = [b for b in blocks if b.inside_bond]
        total = sum(b.dimension for b in carrier)
        if total != 2 * math.comb(2 * L, 2):
            ok = False
            msgs.append(
                f"generator-carrying blocks span {total}, expected {2 * math.comb(2 * L, 2)}"
            )
            if L == 2:
                msgs.append(
                    "note: at L=2 the wrap bond coincides with the open bond, so the "
                    "periodic set degenerates to the open one"
                )
        if len(carrier) > 1:
            parts = " + ".join(f"({b.krylov_dim},{b.degeneracy})" for b in carrier)
            msgs.append(f"engine refines the merged generator space into {parts}")
    if ok:
        msgs.append("all checks passed")
    return MgDecompositionReport(L, boundary, ok, tuple(msgs), decomp)


def mg_number_commutes(L: int, boundary: str = "open") -> dict:
    """Commutator norms of the string-number superoperator with each adjoint.

    Returns {generator index: norm}; all norms vanish on the open chain
    while the periodic wrap term picks up an order-one violation.
    """
    gates = build("mg_z2", L, boundary)
    number = majorana_number_superop(L)
    out = {}
    for i, g in enumerate(gates.generators):
        ad = adjoint_superop(g)
        comm = number.entries @ ad.entries - ad.entries @ number.entries
        out[i] = float(spla.norm(comm)) if comm.nnz else 0.0
    return out
