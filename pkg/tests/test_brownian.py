import math

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.linalg import expm

from commutant_lab._linalg import SolverLimitError
from commutant_lab.brownian import (
    ObservableSeries,
    TrajectoryConfig,
    config_dict,
    floquet_series,
    mazur_two_point,
    otoc_series,
    predicted_otoc,
    predicted_purity_from_scomm,
    renyi2_series,
    renyi2_sweep,
    series_to_csv,
    step_unitary,
)
from commutant_lab.brownian import _run_trajectories, _spectral_action
from commutant_lab.catalog import GateSet, build
from commutant_lab.commutant import commutant
from commutant_lab.majorana import (
    mg_scomm_strings,
    predicted_otoc_mg,
    predicted_purity,
)
from commutant_lab.operators import (
    ChainGeometry,
    Operator,
    PAULI_X,
    PAULI_Z,
    SuperOperator,
    adjoint_superop,
    embed_local,
    identity_operator,
    partial_transpose_pattern,
)
from commutant_lab.superalgebra import super_commutant

# exact late-time OTOC of Z_2 for the parity-preserving generic set
Z2_OTOC_EXACT = {2: -1.0 / 3.0, 3: -1.0 / 15.0, 4: -1.0 / 63.0}


def _z_at(geom, site):
    return embed_local(PAULI_Z, [site], geom)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def test_config_defaults():
    cfg = TrajectoryConfig(gates=build("mg_z2", 3))
    assert cfg.kappa == 1.0
    assert cfg.dt == 0.01
    assert cfg.horizon == 20.0
    assert cfg.num_steps == 2000
    assert cfg.ensemble_size == 256
    assert cfg.mode == "brownian"
    assert cfg.angle_scale == pytest.approx(math.sqrt(0.02))
    assert cfg.sample_times[0] == 0.0
    assert cfg.sample_times[1] == pytest.approx(0.01)
    assert len(cfg.sample_times) == 2001


@pytest.mark.parametrize("bad", [
    dict(kappa=0.0),
    dict(kappa=-1.0),
    dict(dt=0.0),
    dict(t_max=-2.0),
    dict(ensemble_size=0),
    dict(master_seed=-1),
    dict(master_seed=2 ** 64),
    dict(mode="unitary"),
    dict(mode="floquet"),
    dict(mode="floquet", depth=-1),
    dict(mode="floquet", depth=4, angle_stddev=0.0),
    dict(sample_every=0),
    dict(time_average_fraction=0.0),
    dict(time_average_fraction=1.5),
])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        TrajectoryConfig(gates=build("mg_z2", 2), **bad)


def test_floquet_time_is_period_count():
    cfg = TrajectoryConfig(gates=build("mg_z2", 2), mode="floquet", depth=5)
    assert cfg.num_steps == 5
    assert cfg.step_time == 1.0
    assert list(cfg.sample_times) == [0, 1, 2, 3, 4, 5]
    assert cfg.angle_scale == 1.0
    empty = TrajectoryConfig(gates=build("mg_z2", 2), mode="floquet", depth=0)
    assert list(empty.sample_times) == [0]


def test_config_dict_is_plain():
    cfg = TrajectoryConfig(gates=build("u1", 3), master_seed=42)
    snap = config_dict(cfg)
    assert snap["gate_set"] == "u1"
    assert snap["num_sites"] == 3
    assert snap["master_seed"] == 42
    assert snap["t_max"] == 20.0
    import json

    json.dumps(snap, sort_keys=True)


# ---------------------------------------------------------------------------
# spectral actions
# ---------------------------------------------------------------------------


SPECTRAL_CASES = {
    "pauli string": ("mg_z2", 3, 0, False),
    "hopping": ("u1", 3, 0, False),
    "hopping adjoint": ("u1", 3, 0, True),
    "heisenberg adjoint": ("su2", 3, 0, True),
    "qutrit hop": ("tjz", 2, 0, False),
    "global sum": ("translation", 7, 0, False),
}


@pytest.mark.parametrize("label", sorted(SPECTRAL_CASES))
def test_spectral_action_matches_expm(label):
    name, L, idx, doubled = SPECTRAL_CASES[label]
    gen = build(name, L).generators[idx]
    mat = adjoint_superop(gen).entries if doubled else gen.entries
    action = _spectral_action(mat)
    rng = np.random.default_rng(17)
    n = mat.shape[0]
    block = rng.normal(size=(n, 4)) + 1j * rng.normal(size=(n, 4))
    thetas = rng.normal(size=4)
    out = action.apply(block, thetas)
    for t in range(4):
        ref = expm(-1j * thetas[t] * mat.toarray()) @ block[:, t]
        assert np.abs(out[:, t] - ref).max() < 1e-12


def test_spectral_action_sparse_probe():
    # beyond the dense cap the polynomial route is found by Krylov probing
    gen = build("z2", 10).generators[1]
    action = _spectral_action(gen.entries)
    assert action.eigs is not None
    assert len(action.eigs) == 2
    v = np.zeros((2 ** 10, 1), dtype=complex)
    v[0, 0] = 1.0
    out = action.apply(v, np.array([0.3]))
    diag = gen.entries.diagonal()[0]
    assert out[0, 0] == pytest.approx(np.exp(-1j * 0.3 * diag), abs=1e-12)


def test_spectral_action_rich_spectrum_rejected():
    gen = build("translation", 10).generators[0]
    with pytest.raises(SolverLimitError):
        _spectral_action(gen.entries)


# ---------------------------------------------------------------------------
# step unitary
# ---------------------------------------------------------------------------


def test_step_unitary_is_unitary():
    gates = build("mg_z2", 3)
    rng = np.random.default_rng(0)
    eye = np.eye(gates.geometry.dim)
    for _ in range(20):
        u = step_unitary(gates, 1.0, 0.01, rng).dense()
        assert np.abs(u.conj().T @ u - eye).max() < 1e-10


def test_step_unitary_small_angle_limit():
    u = step_unitary(build("mg_z2", 2), 1.0, 1e-14, np.random.default_rng(1)).dense()
    assert np.abs(u - np.eye(4)).max() < 1e-5


def test_step_unitary_single_generator_phases():
    geom = ChainGeometry.qubits(2, "open")
    gates = GateSet("single z", geom, (_z_at(geom, 1),))
    u = step_unitary(gates, 1.0, 0.01, np.random.default_rng(7)).dense()
    theta = np.random.default_rng(7).normal(0.0, math.sqrt(0.02))
    expect = np.diag(np.exp(-1j * theta * np.array([1, 1, -1, -1])))
    assert np.abs(u - expect).max() < 1e-12


def test_step_unitary_warns_on_large_angles():
    with pytest.warns(RuntimeWarning):
        step_unitary(build("mg_z2", 2), 1.0, 50.0, np.random.default_rng(0))


def test_step_unitary_guards():
    with pytest.raises(ValueError):
        step_unitary(build("mg_z2", 2), -1.0, 0.01, np.random.default_rng(0))
    with pytest.raises(ValueError):
        step_unitary(build("mg_z2", 2), 1.0, 0.0, np.random.default_rng(0))
    with pytest.raises(SolverLimitError):
        step_unitary(build("z2", 10), 1.0, 0.01, np.random.default_rng(0))


def test_engine_replays_step_unitary_stream():
    # the batched engine and the reference step product share the draws
    gates = build("mg_z2", 2)
    cfg = TrajectoryConfig(gates=gates, dt=0.05, t_max=0.25,
                           ensemble_size=2, master_seed=9)
    psi = np.zeros(4, dtype=complex)
    psi[3] = 1.0
    grabbed = {}

    def grab(batch):
        grabbed["v"] = batch.copy()
        return np.zeros((1, cfg.ensemble_size))

    _run_trajectories(cfg, [g.entries for g in gates.generators],
                      psi[:, None], grab, cols_per_traj=1)
    rng = cfg.trajectory_rng(0)
    ref = psi.copy()
    for _ in range(cfg.num_steps):
        ref = step_unitary(gates, cfg.kappa, cfg.dt, rng).dense() @ ref
    assert np.abs(grabbed["v"][:, 0] - ref).max() < 1e-12


# ---------------------------------------------------------------------------
# OTOC estimator
# ---------------------------------------------------------------------------


def test_otoc_initial_value_and_determinism():
    gates = build("mg_z2", 3)
    z = _z_at(gates.geometry, 2)
    cfg = TrajectoryConfig(gates=gates, dt=0.05, t_max=0.5,
                           ensemble_size=8, master_seed=21)
    series = otoc_series(cfg, z, z)
    assert series.mean[0] == pytest.approx(1.0, abs=1e-12)
    assert series.stderr[0] == pytest.approx(0.0, abs=1e-12)
    assert len(series.times) == cfg.num_steps + 1
    again = otoc_series(cfg, z, z)
    assert np.array_equal(series.mean, again.mean)
    assert np.array_equal(series.stderr, again.stderr)
    other = otoc_series(
        TrajectoryConfig(gates=gates, dt=0.05, t_max=0.5,
                         ensemble_size=8, master_seed=22), z, z)
    assert not np.array_equal(series.mean, other.mean)


def test_otoc_input_validation():
    gates = build("mg_z2", 3)
    z = _z_at(gates.geometry, 2)
    cfg = TrajectoryConfig(gates=gates, t_max=0.1, ensemble_size=2)
    wrong = _z_at(ChainGeometry.qubits(2, "open"), 1)
    with pytest.raises(ValueError):
        otoc_series(cfg, wrong, wrong)
    with pytest.raises(ValueError):
        otoc_series(cfg, z, z, state_avg="thermal")
    skew = Operator(gates.geometry,
                    (_z_at(gates.geometry, 1).entries
                     + 1j * embed_local(PAULI_X, [1], gates.geometry).entries).tocsr(),
                    "unknown")
    with pytest.raises(ValueError):
        otoc_series(cfg, skew, skew)


def test_otoc_saturates_to_matchgate_value():
    gates = build("mg_z2", 4)
    z = _z_at(gates.geometry, 2)
    cfg = TrajectoryConfig(gates=gates, kappa=1.0, dt=0.02, t_max=6.0,
                           ensemble_size=64, master_seed=1234, sample_every=2)
    series = otoc_series(cfg, z, z)
    target = predicted_otoc_mg(4)
    assert abs(series.time_average - target) < 5 * series.time_average_stderr
    assert series.time_average_window == (3.0, 6.0)


def test_otoc_saturates_to_parity_value():
    gates = build("z2", 4)
    z = _z_at(gates.geometry, 2)
    cfg = TrajectoryConfig(gates=gates, kappa=1.0, dt=0.02, t_max=10.0,
                           ensemble_size=96, master_seed=77, sample_every=2)
    series = otoc_series(cfg, z, z)
    assert abs(series.time_average - Z2_OTOC_EXACT[4]) < 5 * series.time_average_stderr


# ---------------------------------------------------------------------------
# purity estimator
# ---------------------------------------------------------------------------


def test_renyi_product_state_start():
    gates = build("universal", 3)
    psi = np.zeros(8)
    psi[0] = 1.0
    cfg = TrajectoryConfig(gates=gates, dt=0.05, t_max=0.5,
                           ensemble_size=8, master_seed=2)
    series = renyi2_series(cfg, psi, (1,))
    assert series.mean[0] == pytest.approx(1.0, abs=1e-12)
    assert series.extras["entropy_nats"][0] == pytest.approx(0.0, abs=1e-12)
    assert series.extras["entropy_bits"][0] == pytest.approx(0.0, abs=1e-12)


def test_renyi_empty_and_full_regions():
    gates = build("mg_z2", 3)
    psi = np.zeros(8)
    psi[-1] = 1.0
    cfg = TrajectoryConfig(gates=gates, dt=0.05, t_max=1.0,
                           ensemble_size=8, master_seed=3)
    empty, full = renyi2_sweep(cfg, psi, [(), (1, 2, 3)])
    assert np.allclose(empty.mean, 1.0, atol=1e-12)
    assert np.allclose(empty.extras["entropy_nats"], 0.0, atol=1e-12)
    assert np.allclose(full.mean, 1.0, atol=1e-12)


def test_renyi_sweep_matches_single_runs():
    gates = build("mg_z2", 4)
    psi = np.zeros(16)
    psi[-1] = 1.0
    cfg = TrajectoryConfig(gates=gates, dt=0.05, t_max=1.0,
                           ensemble_size=8, master_seed=4)
    swept = renyi2_sweep(cfg, psi, [(1,), (1, 2)])
    single = renyi2_series(cfg, psi, (1, 2))
    assert np.array_equal(swept[1].mean, single.mean)
    assert np.array_equal(swept[1].stderr, single.stderr)


def test_renyi_entropy_columns_consistent():
    gates = build("universal", 4)
    psi = np.zeros(16)
    psi[-1] = 1.0
    cfg = TrajectoryConfig(gates=gates, dt=0.02, t_max=4.0,
                           ensemble_size=32, master_seed=8, sample_every=4)
    series = renyi2_series(cfg, psi, (1, 2))
    nats = series.extras["entropy_nats"]
    bits = series.extras["entropy_bits"]
    assert np.allclose(bits, nats / math.log(2.0), atol=1e-12)
    # -log of the mean never exceeds the mean of -log
    assert (nats <= series.extras["entropy_traj_mean_nats"] + 1e-12).all()


def test_renyi_saturates_universal():
    gates = build("universal", 4)
    psi = np.zeros(16)
    psi[-1] = 1.0
    cfg = TrajectoryConfig(gates=gates, kappa=1.0, dt=0.02, t_max=6.0,
                           ensemble_size=64, master_seed=5, sample_every=4)
    series = renyi2_series(cfg, psi, (1, 2))
    target = predicted_purity(4, 2, "universal")
    assert abs(series.time_average - target) < 5 * series.time_average_stderr


def test_renyi_saturates_matchgate():
    gates = build("mg_z2", 4)
    psi = np.zeros(16)
    psi[-1] = 1.0
    cfg = TrajectoryConfig(gates=gates, kappa=1.0, dt=0.02, t_max=6.0,
                           ensemble_size=64, master_seed=6, sample_every=4)
    series = renyi2_series(cfg, psi, (1, 2))
    target = predicted_purity(4, 2, "matchgate")
    assert abs(series.time_average - target) < 5 * series.time_average_stderr


def test_renyi_input_validation():
    gates = build("mg_z2", 3)
    cfg = TrajectoryConfig(gates=gates, t_max=0.1, ensemble_size=2)
    with pytest.raises(ValueError):
        renyi2_series(cfg, np.ones(8), (1,))  # not normalized
    with pytest.raises(ValueError):
        renyi2_series(cfg, np.ones(4) / 2.0, (1,))  # wrong length
    psi = np.zeros(8)
    psi[0] = 1.0
    with pytest.raises(ValueError):
        renyi2_series(cfg, psi, (0,))
    with pytest.raises(ValueError):
        renyi2_series(cfg, psi, (4,))


# ---------------------------------------------------------------------------
# floquet mode
# ---------------------------------------------------------------------------


def test_floquet_depth_zero_is_constant():
    gates = build("mg_z2", 4)
    z = _z_at(gates.geometry, 2)
    cfg = TrajectoryConfig(gates=gates, mode="floquet", depth=0,
                           ensemble_size=8, master_seed=3)
    series = floquet_series(cfg, A=z, B=z)
    assert list(series.times) == [0]
    assert series.mean[0] == pytest.approx(1.0, abs=1e-12)
    assert series.time_average == pytest.approx(1.0, abs=1e-12)


def test_floquet_long_average_near_brownian_value():
    # the Floquet plateau need not coincide with the Brownian projector
    # value; it lands close for this set and is pinned loosely
    gates = build("mg_z2", 4)
    z = _z_at(gates.geometry, 2)
    cfg = TrajectoryConfig(gates=gates, mode="floquet", depth=60,
                           ensemble_size=48, master_seed=3)
    series = floquet_series(cfg, A=z, B=z)
    assert abs(series.time_average - predicted_otoc_mg(4)) < 0.1


def test_floquet_dispatch_validation():
    gates = build("mg_z2", 3)
    z = _z_at(gates.geometry, 2)
    brownian_cfg = TrajectoryConfig(gates=gates, t_max=0.1, ensemble_size=2)
    with pytest.raises(ValueError):
        floquet_series(brownian_cfg, A=z, B=z)
    cfg = TrajectoryConfig(gates=gates, mode="floquet", depth=2, ensemble_size=2)
    with pytest.raises(ValueError):
        floquet_series(cfg)
    psi = np.zeros(8)
    psi[0] = 1.0
    series = floquet_series(cfg, psi0=psi, region=(1,))
    assert len(series.times) == 3


# ---------------------------------------------------------------------------
# projector predictions
# ---------------------------------------------------------------------------


def test_predicted_otoc_identity():
    gates = build("universal", 2)
    one = identity_operator(gates.geometry)
    assert predicted_otoc(super_commutant(gates), one, one) == pytest.approx(1.0, abs=1e-10)


def test_predicted_otoc_universal_traceless():
    gates = build("universal", 2)
    z = _z_at(gates.geometry, 1)
    val = predicted_otoc(super_commutant(gates), z, z)
    assert val == pytest.approx(-1.0 / 15.0, abs=1e-10)


@pytest.mark.parametrize("L", [3, 4])
def test_predicted_otoc_routes_agree(L):
    gates = build("mg_z2", L)
    z = _z_at(gates.geometry, 2)
    engine = predicted_otoc(super_commutant(gates), z, z)
    dyads = predicted_otoc(mg_scomm_strings(L), z, z)
    closed = predicted_otoc_mg(L)
    assert engine == pytest.approx(closed, abs=1e-10)
    assert dyads == pytest.approx(closed, abs=1e-10)


@pytest.mark.parametrize("L", sorted(Z2_OTOC_EXACT))
def test_predicted_otoc_parity_series(L):
    gates = build("z2", L)
    z = _z_at(gates.geometry, 2 if L > 1 else 1)
    val = predicted_otoc(super_commutant(gates), z, z)
    assert val == pytest.approx(Z2_OTOC_EXACT[L], abs=1e-10)


def test_predicted_otoc_geometry_mismatch():
    gates = build("mg_z2", 3)
    z = _z_at(ChainGeometry.qubits(2, "open"), 1)
    with pytest.raises(ValueError):
        predicted_otoc(super_commutant(gates), z, z)


@pytest.mark.parametrize("L", [3, 4])
def test_predicted_purity_universal_closed_form(L):
    scomm = super_commutant(build("universal", L))
    psi = np.zeros(2 ** L)
    psi[-1] = 1.0
    for ell in range(L + 1):
        val = predicted_purity_from_scomm(scomm, psi, range(1, ell + 1))
        assert val == pytest.approx(predicted_purity(L, ell, "universal"), abs=1e-10)


def test_predicted_purity_matchgate_closed_form():
    psi = np.zeros(16)
    psi[-1] = 1.0
    engine = super_commutant(build("mg_z2", 4))
    dyads = mg_scomm_strings(4)
    for ell in range(5):
        region = range(1, ell + 1)
        want = predicted_purity(4, ell, "matchgate")
        assert predicted_purity_from_scomm(engine, psi, region) == pytest.approx(want, abs=1e-10)
        assert predicted_purity_from_scomm(dyads, psi, region) == pytest.approx(want, abs=1e-10)


def test_predicted_purity_validation():
    scomm = super_commutant(build("universal", 3))
    with pytest.raises(ValueError):
        predicted_purity_from_scomm(scomm, np.ones(8), (1,))
    with pytest.raises(ValueError):
        predicted_purity_from_scomm(scomm, np.ones(4) / 2.0, (1,))


def test_mazur_anchors():
    gates = build("u1", 4)
    comm = commutant(gates)
    geom = gates.geometry
    total = _z_at(geom, 1).entries
    for j in (2, 3, 4):
        total = total + _z_at(geom, j).entries
    z_tot = Operator(geom, total.tocsr(), "yes")
    assert mazur_two_point(comm, z_tot) == pytest.approx(4.0, abs=1e-10)
    assert mazur_two_point(comm, embed_local(PAULI_X, [1], geom)) == pytest.approx(0.0, abs=1e-10)
    assert mazur_two_point(comm, identity_operator(geom)) == pytest.approx(1.0, abs=1e-10)


# ---------------------------------------------------------------------------
# ensemble-average invariants
# ---------------------------------------------------------------------------


def _four_copy_generator(h):
    eye = sp.identity(h.shape[0], format="csr")

    def k4(a, b, c, d):
        return sp.kron(sp.kron(a, b), sp.kron(c, d), format="csr")

    return (k4(h, eye, eye, eye) - k4(eye, h.T, eye, eye)
            + k4(eye, eye, h, eye) - k4(eye, eye, eye, h.T))


def test_two_copy_mean_matches_exponential():
    gates = build("mg_z2", 2)
    ads = [adjoint_superop(g).entries for g in gates.generators]
    cfg = TrajectoryConfig(gates=gates, kappa=1.0, dt=1e-3, t_max=0.1,
                           ensemble_size=10_000, master_seed=11, sample_every=100)
    grabbed = {}

    def grab(batch):
        grabbed["m"] = batch.copy()
        return np.zeros((1, cfg.ensemble_size))

    _run_trajectories(cfg, ads, np.eye(16, dtype=complex), grab, cols_per_traj=16)
    mats = grabbed["m"].reshape(16, cfg.ensemble_size, 16).transpose(1, 0, 2)
    mean = mats.mean(axis=0)
    stderr = np.sqrt(mats.real.var(axis=0, ddof=1)
                     + mats.imag.var(axis=0, ddof=1)) / math.sqrt(cfg.ensemble_size)
    p2 = sum((a @ a).toarray() for a in ads)
    ref = expm(-cfg.kappa * p2 * 0.1)
    assert (np.abs(mean - ref) <= 5 * stderr + 1e-9).all()


def test_four_copy_mean_matches_exponential():
    gates = build("mg_z2", 2)
    gens4 = [_four_copy_generator(g.entries) for g in gates.generators]
    p4 = sum((a @ a).toarray() for a in gens4)
    rng = np.random.default_rng(5)
    probe = rng.normal(size=256) + 1j * rng.normal(size=256)
    probe /= np.linalg.norm(probe)
    cfg = TrajectoryConfig(gates=gates, kappa=1.0, dt=1e-3, t_max=0.1,
                           ensemble_size=10_000, master_seed=11, sample_every=100)
    grabbed = {}

    def grab(batch):
        grabbed["m"] = batch.copy()
        return np.zeros((1, cfg.ensemble_size))

    _run_trajectories(cfg, gens4, probe[:, None], grab)
    final = grabbed["m"]
    mean = final.mean(axis=1)
    stderr = np.sqrt(final.real.var(axis=1, ddof=1)
                     + final.imag.var(axis=1, ddof=1)) / math.sqrt(cfg.ensemble_size)
    ref = expm(-cfg.kappa * p4 * 0.1) @ probe
    assert (np.abs(mean - ref) <= 5 * stderr + 1e-9).all()


def test_swapped_scomm_spans_four_copy_nullspace():
    gates = build("mg_z2", 2)
    scomm = super_commutant(gates)
    p4 = sum((a @ a).toarray()
             for a in (_four_copy_generator(g.entries) for g in gates.generators))
    base = gates.geometry
    for k in range(scomm.dimension):
        mat = sp.csr_matrix(scomm.matrix[:, k].reshape(16, 16))
        swapped = partial_transpose_pattern(
            SuperOperator(base, mat), [1, 2, 3, 4], [1, 2, 4, 3])
        vec = swapped.entries.toarray().ravel()
        assert np.linalg.norm(p4 @ vec) < 1e-8
    nullity = int((np.linalg.eigvalsh(p4) < 1e-8).sum())
    assert nullity == scomm.dimension


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------


def test_series_csv_layout(tmp_path):
    gates = build("mg_z2", 3)
    psi = np.zeros(8)
    psi[-1] = 1.0
    cfg = TrajectoryConfig(gates=gates, dt=0.05, t_max=0.5,
                           ensemble_size=8, master_seed=13)
    series = renyi2_series(cfg, psi, (1,))
    path = tmp_path / "series.csv"
    series_to_csv(series, path)
    raw = path.read_bytes()
    assert b"\r\n" in raw
    lines = raw.decode().split("\r\n")
    header = lines[0].split(",")
    assert header[:3] == ["time", "mean", "stderr"]
    assert header[3:] == sorted(header[3:])
    first = lines[1].split(",")
    assert float(first[0]) == series.times[0]
    assert float(first[1]) == series.mean[0]


def test_series_csv_deterministic(tmp_path):
    gates = build("mg_z2", 3)
    z = _z_at(gates.geometry, 2)
    cfg = TrajectoryConfig(gates=gates, dt=0.05, t_max=0.5,
                           ensemble_size=8, master_seed=21)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    series_to_csv(otoc_series(cfg, z, z), a)
    series_to_csv(otoc_series(cfg, z, z), b)
    assert a.read_bytes() == b.read_bytes()
