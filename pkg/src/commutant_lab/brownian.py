"""Trajectory Monte Carlo for stochastic circuits built from a gate set.

Brownian dynamics draws an independent Gaussian angle for every
generator at every step and applies the ordered product of the
per-generator exponentials; random Floquet dynamics reuses the same
machinery with order-one angles and integer period counts.  Late-time
saturation values are evaluated directly from commutant and
super-commutant data, so simulations and algebra can be checked against
each other.
"""

import csv
import dataclasses
import math
import warnings

import numpy as np
import scipy.sparse as sp

from ._linalg import SolverLimitError
from .catalog import GateSet
from .closure import OperatorBasis
from .majorana import MajoranaDyadBasis
from .operators import (
    ChainGeometry,
    Operator,
    SuperOperator,
    adjoint_superop,
    partial_transpose_pattern,
)

# largest generator dimension handled by full dense diagonalization
_DENSE_EIG_DIM = 512
# polynomial propagator cap: distinct eigenvalues per generator
_MAX_POLY_TERMS = 6
_PROBE_SEED = 0x51AB5
# column-batch memory ceiling for trajectory state
_BATCH_BYTES = 1_500_000_000
_TOL_UNITARY = 1e-10


@dataclasses.dataclass(frozen=True)
class TrajectoryConfig:
    """Ensemble description for Brownian or random-Floquet trajectories.

    ``t_max`` defaults to 20/kappa.  In floquet mode time is counted in
    periods (``depth`` of them) and each generator angle is drawn from
    Normal(0, angle_stddev) once per period.
    """

    gates: GateSet
    kappa: float = 1.0
    dt: float = 0.01
    t_max: float | None = None
    ensemble_size: int = 256
    master_seed: int = 0
    mode: str = "brownian"
    depth: int | None = None
    angle_stddev: float = 1.0
    sample_every: int = 1
    time_average_fraction: float = 0.5

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_max is not None and self.t_max <= 0:
            raise ValueError("t_max must be positive when given")
        if self.ensemble_size < 1:
            raise ValueError("ensemble_size must be at least 1")
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.mode not in ("brownian", "floquet"):
            raise ValueError("mode must be 'brownian' or 'floquet'")
        if self.mode == "floquet":
            if self.depth is None or self.depth < 0:
                raise ValueError("floquet mode requires depth >= 0")
            if self.angle_stddev <= 0:
                raise ValueError("angle_stddev must be positive")
        if self.sample_every < 1:
            raise ValueError("sample_every must be at least 1")
        if not 0 < self.time_average_fraction <= 1:
            raise ValueError("time_average_fraction must lie in (0, 1]")

    @property
    def horizon(self) -> float:
        return 20.0 / self.kappa if self.t_max is None else float(self.t_max)

    @property
    def num_steps(self) -> int:
        if self.mode == "floquet":
            return int(self.depth)
        return max(1, int(round(self.horizon / self.dt)))

    @property
    def step_time(self) -> float:
        return 1.0 if self.mode == "floquet" else self.dt

    @property
    def angle_scale(self) -> float:
        if self.mode == "floquet":
            return self.angle_stddev
        return math.sqrt(2.0 * self.kappa * self.dt)

    @property
    def sample_steps(self) -> np.ndarray:
        steps = self.num_steps
        sampled = [0] + [s for s in range(1, steps + 1) if s % self.sample_every == 0]
        return np.array(sampled, dtype=np.int64)

    @property
    def sample_times(self) -> np.ndarray:
        return self.sample_steps * self.step_time

    def trajectory_rng(self, index: int) -> np.random.Generator:
        """Deterministic per-trajectory stream from (master_seed, index)."""
        return np.random.default_rng(
            np.random.SeedSequence((int(self.master_seed), int(index)))
        )


@dataclasses.dataclass(frozen=True)
class ObservableSeries:
    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    time_average: float
    time_average_window: tuple
    time_average_stderr: float
    extras: dict = dataclasses.field(default_factory=dict)

    def __len__(self):
        return len(self.times)


def config_dict(cfg: TrajectoryConfig) -> dict:
    """Plain-type snapshot of a configuration, for JSON sidecars."""
    geom = cfg.gates.geometry
    return {
        "gate_set": cfg.gates.name,
        "num_sites": geom.num_sites,
        "local_dim": int(geom.local_dims[0]),
        "boundary": geom.boundary,
        "kappa": cfg.kappa,
        "dt": cfg.dt,
        "t_max": cfg.horizon,
        "ensemble_size": cfg.ensemble_size,
        "master_seed": int(cfg.master_seed),
        "mode": cfg.mode,
        "depth": cfg.depth,
        "angle_stddev": cfg.angle_stddev,
        "sample_every": cfg.sample_every,
        "time_average_fraction": cfg.time_average_fraction,
    }


# ---------------------------------------------------------------------------
# Per-generator spectral actions
# ---------------------------------------------------------------------------


def _dedupe_real(values, tol):
    vals = np.sort(np.real(np.asarray(values)))
    out = [float(vals[0])]
    for v in vals[1:]:
        if v - out[-1] > tol:
            out.append(float(v))
    return out


class _SpectralAction:
    """Applies exp(-i theta h) to a column batch, one angle per column.

    Generators with few distinct eigenvalues use the interpolation
    identity exp(-i theta h) = sum_j c_j(theta) h^j with coefficients
    from a Vandermonde solve; richer spectra fall back to a cached dense
    eigendecomposition.
    """

    def __init__(self, mat, eigs=None, dense=None):
        self.mat = mat
        self.eigs = None if eigs is None else np.asarray(eigs, dtype=float)
        self.dense = dense
        if self.eigs is not None:
            self._vander = np.vander(self.eigs, len(self.eigs), increasing=True)

    def apply(self, block: np.ndarray, thetas: np.ndarray) -> np.ndarray:
        if self.eigs is not None:
            if len(self.eigs) == 1:
                return block * np.exp(-1j * self.eigs[0] * thetas)[None, :]
            phases = np.exp(-1j * np.outer(thetas, self.eigs))
            coeff = np.linalg.solve(self._vander, phases.T)
            acc = block * coeff[0][None, :]
            power = block
            for j in range(1, len(self.eigs)):
                power = self.mat @ power
                acc += power * coeff[j][None, :]
            return acc
        u, w = self.dense
        rotated = u.conj().T @ block
        rotated *= np.exp(-1j * np.outer(w, thetas))
        return u @ rotated


def _probe_distinct_eigs(mat):
    """Distinct eigenvalues of a sparse Hermitian matrix via short Krylov runs.

    Returns None when the spectrum has more than _MAX_POLY_TERMS distinct
    values (no breakdown within the cap, or the residual test fails).
    """
    rng = np.random.default_rng(_PROBE_SEED)
    n = mat.shape[0]
    scale = max(1.0, float(abs(mat).sum(axis=1).max()))
    found = []
    for _ in range(2):
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        v /= np.linalg.norm(v)
        basis = []
        vec = v
        for _ in range(_MAX_POLY_TERMS + 1):
            for q in basis:
                vec = vec - q * (q.conj() @ vec)
            for q in basis:
                vec = vec - q * (q.conj() @ vec)
            norm = np.linalg.norm(vec)
            if norm < 1e-10 * scale:
                break
            vec = vec / norm
            basis.append(vec)
            vec = mat @ vec
        else:
            return None
        b = np.array(basis).T
        small = b.conj().T @ (mat @ b)
        found.extend(np.linalg.eigvalsh((small + small.conj().T) / 2.0))
    tol = 1e-8 * max(1.0, float(np.max(np.abs(found))))
    distinct = _dedupe_real(found, tol)
    if len(distinct) > _MAX_POLY_TERMS:
        return None
    # the candidate minimal polynomial must annihilate a fresh vector
    fresh = rng.normal(size=n) + 1j * rng.normal(size=n)
    fresh /= np.linalg.norm(fresh)
    for lam in distinct:
        fresh = mat @ fresh - lam * fresh
        fresh /= max(1.0, abs(lam))
    if np.linalg.norm(fresh) > 1e-7:
        return None
    return distinct


def _spectral_action(mat) -> _SpectralAction:
    mat = sp.csr_matrix(mat)
    n = mat.shape[0]
    if n <= _DENSE_EIG_DIM:
        w, u = np.linalg.eigh(mat.toarray())
        distinct = _dedupe_real(w, 1e-8 * max(1.0, float(np.abs(w).max())))
        if len(distinct) <= _MAX_POLY_TERMS:
            return _SpectralAction(mat, eigs=distinct)
        return _SpectralAction(mat, dense=(u, w))
    distinct = _probe_distinct_eigs(mat)
    if distinct is None:
        raise SolverLimitError(
            f"generator on dimension {n} has more than {_MAX_POLY_TERMS} distinct "
            f"eigenvalues and exceeds the dense-diagonalization cap {_DENSE_EIG_DIM}"
        )
    return _SpectralAction(mat, eigs=distinct)


# ---------------------------------------------------------------------------
# Trajectory engine
# ---------------------------------------------------------------------------


def _run_trajectories(cfg, mats, init_block, observe, reverse_order=False,
                      angle_sign=1.0, cols_per_traj=1):
    """Evolve the whole ensemble as one column batch.

    ``init_block`` is the (n, cols_per_traj) start shared by every
    trajectory; ``observe`` maps the batch (n, cols_per_traj * T) to an
    (R, T) array.  Returns samples of shape (S, R, T).  Generators are
    applied in catalog order on states and in reversed order (with the
    angle sign flipped by the caller) on Heisenberg vectors, so both
    pictures realize the same stepwise unitary.
    """
    n = init_block.shape[0]
    num = cfg.ensemble_size
    width = cols_per_traj * num
    if n * width * 16 > _BATCH_BYTES:
        raise SolverLimitError(
            f"trajectory batch of {n} x {width} complex entries exceeds the "
            "memory budget; lower the ensemble size or chain length"
        )
    steps = cfg.num_steps
    gens = len(mats)
    if steps * gens * num * 8 > _BATCH_BYTES:
        raise SolverLimitError("pre-drawn angle table exceeds the memory budget")
    actions = [_spectral_action(m) for m in mats]
    sigma = cfg.angle_scale
    angles = np.empty((max(steps, 1), gens, num))
    for i in range(num):
        angles[:, :, i] = cfg.trajectory_rng(i).normal(0.0, sigma, size=(max(steps, 1), gens))
    batch = np.tile(init_block.astype(complex), (1, num))
    samples = [observe(batch)]
    order = range(gens - 1, -1, -1) if reverse_order else range(gens)
    for s in range(steps):
        for a in order:
            theta = angle_sign * angles[s, a]
            if cols_per_traj != 1:
                theta = np.repeat(theta, cols_per_traj)
            batch = actions[a].apply(batch, theta)
        if (s + 1) % cfg.sample_every == 0:
            samples.append(observe(batch))
    return np.stack(samples)


def _assemble_series(cfg, samples, extras=None):
    """Across-trajectory statistics for one (S, T) observable table."""
    times = cfg.sample_times[: samples.shape[0]]
    num = cfg.ensemble_size
    mean = samples.mean(axis=1)
    if num > 1:
        stderr = samples.std(axis=1, ddof=1) / math.sqrt(num)
    else:
        stderr = np.zeros_like(mean)
    t_start = times[-1] * (1.0 - cfg.time_average_fraction)
    window = times >= t_start - 1e-12
    per_traj = samples[window].mean(axis=0)
    t_avg = float(per_traj.mean())
    if num > 1:
        t_avg_err = float(per_traj.std(ddof=1) / math.sqrt(num))
    else:
        t_avg_err = 0.0
    return ObservableSeries(
        times=times,
        mean=mean,
        stderr=stderr,
        time_average=t_avg,
        time_average_window=(float(times[window][0]), float(times[-1])),
        time_average_stderr=t_avg_err,
        extras=dict(extras or {}),
    )


def _require_hermitian(op: Operator, name: str):
    if op.hermitian_flag == "yes":
        return
    delta = op.entries - op.entries.getH()
    if delta.nnz and abs(delta).max() > 1e-10:
        raise ValueError(f"{name} must be Hermitian")


# ---------------------------------------------------------------------------
# Step unitary (reference implementation, small chains)
# ---------------------------------------------------------------------------


def step_unitary(gates: GateSet, kappa: float, dt: float,
                 rng_state: np.random.Generator) -> Operator:
    """One Brownian step: prod_alpha exp(-i dW_alpha h_alpha), fixed order.

    The increments dW_alpha ~ Normal(0, 2 kappa dt) are drawn in
    generator order from ``rng_state``, matching the batched engine's
    per-trajectory streams draw for draw.
    """
    if kappa <= 0 or dt <= 0:
        raise ValueError("kappa and dt must be positive")
    geom = gates.geometry
    if geom.dim > _DENSE_EIG_DIM:
        raise SolverLimitError(
            f"step_unitary assembles a dense {geom.dim} x {geom.dim} matrix; "
            f"capped at {_DENSE_EIG_DIM}"
        )
    sigma = math.sqrt(2.0 * kappa * dt)
    draws = rng_state.normal(0.0, sigma, size=len(gates.generators))
    unitary = np.eye(geom.dim, dtype=complex)
    worst = 0.0
    for gen, theta in zip(gates.generators, draws):
        w, u = np.linalg.eigh(gen.entries.toarray())
        worst = max(worst, float(np.abs(w).max()))
        unitary = (u * np.exp(-1j * theta * w)) @ u.conj().T @ unitary
    if sigma * worst > 1.0:
        warnings.warn(
            "per-step rotation angles are of order one; decrease dt for a "
            "faithful Brownian limit",
            RuntimeWarning,
        )
    return Operator(geom, sp.csr_matrix(unitary), "unknown")


# ---------------------------------------------------------------------------
# Observable estimators
# ---------------------------------------------------------------------------


def otoc_series(cfg: TrajectoryConfig, A: Operator, B: Operator,
                state_avg: str = "infinite_temperature") -> ObservableSeries:
    """Ensemble OTOC tr(A(t) B A(t) B) / dim with A evolved stepwise."""
    if state_avg != "infinite_temperature":
        raise ValueError("only the infinite-temperature average is implemented")
    geom = cfg.gates.geometry
    if A.geometry != geom or B.geometry != geom:
        raise ValueError("A and B must live on the gate-set geometry")
    _require_hermitian(A, "A")
    _require_hermitian(B, "B")
    dim = geom.dim
    mats = [adjoint_superop(g).entries for g in cfg.gates.generators]
    sandwich = sp.kron(B.entries, B.entries.T, format="csr")
    start = A.dense().ravel()[:, None]

    def observe(batch):
        vals = np.einsum("it,it->t", batch.conj(), sandwich @ batch).real / dim
        return vals[None, :]

    # vec(U^dag A U) = exp(+i theta ad_h) vec(A), innermost factor first
    samples = _run_trajectories(cfg, mats, start, observe,
                                reverse_order=True, angle_sign=-1.0)
    return _assemble_series(cfg, samples[:, 0, :])


def twopoint_series(cfg: TrajectoryConfig, A: Operator,
                    state_avg: str = "infinite_temperature") -> ObservableSeries:
    """Ensemble autocorrelation tr(A(t) A) / dim; plateau bounded below by
    the conserved weight (see ``mazur_two_point``)."""
    if state_avg != "infinite_temperature":
        raise ValueError("only the infinite-temperature average is implemented")
    geom = cfg.gates.geometry
    if A.geometry != geom:
        raise ValueError("A must live on the gate-set geometry")
    _require_hermitian(A, "A")
    dim = geom.dim
    mats = [adjoint_superop(g).entries for g in cfg.gates.generators]
    avec = A.dense().ravel()
    start = avec[:, None]

    def observe(batch):
        return (avec.conj() @ batch).real[None, :] / dim

    samples = _run_trajectories(cfg, mats, start, observe,
                                reverse_order=True, angle_sign=-1.0)
    return _assemble_series(cfg, samples[:, 0, :])


def _parse_region(region, num_sites):
    sites = sorted({int(s) for s in region})
    if any(s < 1 or s > num_sites for s in sites):
        raise ValueError(f"region sites must lie in 1..{num_sites}")
    return tuple(sites)


def renyi2_sweep(cfg: TrajectoryConfig, psi0, regions) -> list:
    """One ensemble, many regions: purity series per region.

    The state batch is evolved once and every region's purity is sampled
    from it, so a full subsystem-size sweep costs one simulation.
    """
    geom = cfg.gates.geometry
    dims = geom.local_dims
    num_sites = geom.num_sites
    dim = geom.dim
    psi = np.asarray(psi0, dtype=complex).ravel()
    if psi.shape != (dim,):
        raise ValueError(f"psi0 must have length {dim}")
    if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
        raise ValueError("psi0 must be normalized")
    plans = []
    for region in regions:
        sites = _parse_region(region, num_sites)
        inside = [s - 1 for s in sites]
        outside = [a for a in range(num_sites) if a not in inside]
        d_in = int(np.prod([dims[a] for a in inside], initial=1))
        plans.append((tuple(inside + outside), d_in, dim // d_in))
    mats = [g.entries for g in cfg.gates.generators]
    num = cfg.ensemble_size

    def observe(batch):
        out = np.empty((len(plans), num))
        folded = np.ascontiguousarray(batch.T).reshape((num,) + tuple(dims))
        for r, (perm, d_in, d_out) in enumerate(plans):
            cut = folded.transpose((0,) + tuple(a + 1 for a in perm))
            cut = cut.reshape(num, d_in, d_out)
            if d_in <= d_out:
                gram = np.matmul(cut, cut.conj().transpose(0, 2, 1))
            else:
                gram = np.matmul(cut.conj().transpose(0, 2, 1), cut)
            out[r] = np.einsum("tij,tij->t", gram, gram.conj()).real
        return out

    samples = _run_trajectories(cfg, mats, psi[:, None], observe)
    series = []
    for r in range(len(plans)):
        purity = samples[:, r, :]
        mean_purity = purity.mean(axis=1)
        extras = {
            "entropy_nats": -np.log(mean_purity),
            "entropy_bits": -np.log2(mean_purity),
            "entropy_traj_mean_nats": (-np.log(purity)).mean(axis=1),
        }
        series.append(_assemble_series(cfg, purity, extras))
    return series


def renyi2_series(cfg: TrajectoryConfig, psi0, region) -> ObservableSeries:
    """Purity statistics of one region; entropies are carried in extras.

    The purity is averaged across trajectories first; extras report
    -log(mean purity) in nats and bits alongside the mean of the
    per-trajectory entropies.  An empty region gives purity one and zero
    entropy at every time.
    """
    return renyi2_sweep(cfg, psi0, [region])[0]


def floquet_series(cfg: TrajectoryConfig, A: Operator = None, B: Operator = None,
                   psi0=None, region=None,
                   state_avg: str = "infinite_temperature") -> ObservableSeries:
    """Floquet dispatch: OTOC for (A, B), subsystem purity for (psi0, region)."""
    if cfg.mode != "floquet":
        raise ValueError("floquet_series requires a config with mode='floquet'")
    if A is not None and B is not None:
        return otoc_series(cfg, A, B, state_avg)
    if psi0 is not None and region is not None:
        return renyi2_series(cfg, psi0, region)
    raise ValueError("provide either (A, B) or (psi0, region)")


# ---------------------------------------------------------------------------
# Projector predictions
# ---------------------------------------------------------------------------


def predicted_otoc(scomm, A: Operator, B: Operator) -> float:
    """Late-time OTOC from an orthonormal super-commutant basis.

    sum_Q tr(Q^dag B-pattern) (vec A)^dag Q (vec A) / dim, accepting
    either dense engine columns or the analytic string dyad basis (the
    latter never materializes the doubled space).
    """
    _require_hermitian(A, "A")
    _require_hermitian(B, "B")
    dim = A.geometry.dim
    sandwich = sp.kron(B.entries, B.entries.T, format="csr")
    avec = A.dense().ravel()
    total = 0j
    if isinstance(scomm, MajoranaDyadBasis):
        for elem in scomm.elements:
            trace_part = 0j
            overlap_part = 0j
            for coeff, ket, bra in elem.terms:
                kv = ket.hs_vector()
                bv = bra.hs_vector()
                trace_part += np.conj(coeff) * (kv.conj() @ (sandwich @ bv))
                overlap_part += coeff * (avec.conj() @ kv) * (bv.conj() @ avec)
            total += trace_part * overlap_part
        return float(total.real) / dim
    if scomm.matrix.shape[0] != dim ** 4:
        raise ValueError("super-commutant basis does not match the operator geometry")
    for k in range(scomm.dimension):
        q = scomm.matrix[:, k].reshape(dim * dim, dim * dim)
        trace_part = sandwich.multiply(q.conj()).sum()
        overlap_part = avec.conj() @ (q @ avec)
        total += trace_part * overlap_part
    return float(total.real) / dim


def predicted_purity_from_scomm(scomm, psi0, region) -> float:
    """Late-time subsystem purity from the super-commutant basis.

    Each basis column is rewritten in the four-copy state order by
    swapping copies 3 and 4; the purity is the sum over columns of
    (domain-wall overlap) x (fourfold initial-state overlap).
    """
    if isinstance(scomm, MajoranaDyadBasis):
        scomm = scomm.materialize()
    doubled = scomm.geometry
    num_sites = doubled.num_sites // 2
    dims = doubled.local_dims[:num_sites]
    base = ChainGeometry(num_sites, dims, "open")
    dim = base.dim
    psi = np.asarray(psi0, dtype=complex).ravel()
    if psi.shape != (dim,):
        raise ValueError(f"psi0 must have length {dim}")
    if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
        raise ValueError("psi0 must be normalized")
    sites = _parse_region(region, num_sites)
    inside = [s - 1 for s in sites]
    outside = [a for a in range(num_sites) if a not in inside]
    d_in = int(np.prod([dims[a] for a in inside], initial=1))
    d_out = dim // d_in
    per_copy = tuple(inside + outside)
    total = 0j
    for k in range(scomm.dimension):
        mat = sp.csr_matrix(scomm.matrix[:, k].reshape(dim * dim, dim * dim))
        swapped = partial_transpose_pattern(
            SuperOperator(base, mat), [1, 2, 3, 4], [1, 2, 4, 3]
        )
        tensor = swapped.entries.toarray().reshape(tuple(dims) * 4)
        perm = [c * num_sites + a for c in range(4) for a in per_copy]
        cut = tensor.transpose(perm).reshape((d_in, d_out) * 4)
        wall = np.einsum("abcbcdad->", cut)
        four = tensor.reshape(dim, dim, dim, dim)
        overlap = np.einsum(
            "ijkl,i,j,k,l->", four.conj(), psi, psi.conj(), psi, psi.conj()
        )
        total += wall * overlap
    return float(total.real)


def mazur_two_point(comm: OperatorBasis, A: Operator) -> float:
    """Saturation bound sum_Q |<<Q|A>>|^2 / dim over the commutant basis."""
    _require_hermitian(A, "A")
    dim = A.geometry.dim
    if comm.matrix.shape[0] != dim * dim:
        raise ValueError("commutant basis does not match the operator geometry")
    overlaps = comm.matrix.conj().T @ A.dense().ravel()
    return float(np.sum(np.abs(overlaps) ** 2) / dim)


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def series_to_csv(series: ObservableSeries, path):
    """RFC-4180 CSV with shortest-roundtrip floats: time, mean, stderr, extras."""
    extra_keys = sorted(series.extras)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["time", "mean", "stderr", *extra_keys])
        for i in range(len(series.times)):
            row = [series.times[i], series.mean[i], series.stderr[i]]
            row += [series.extras[k][i] for k in extra_keys]
            writer.writerow([repr(float(x)) for x in row])
