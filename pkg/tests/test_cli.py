import json
from fractions import Fraction

import numpy as np
import pytest

from commutant_lab.catalog import CATALOG_NAMES, build
from commutant_lab.cli import main
from commutant_lab.majorana import predicted_otoc_mg


def _analyze(tmp_path, *argv):
    out = tmp_path / "out"
    rc = main(list(argv) + ["--out", str(out)])
    return rc, out


def _load(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------


def test_catalog_lists_all_sets(capsys):
    assert main(["catalog"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 1 + len(CATALOG_NAMES)
    listed = [ln.split()[0] for ln in lines[1:]]
    assert listed == list(CATALOG_NAMES)


def test_catalog_json(capsys):
    assert main(["catalog", "--json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert [r["name"] for r in rows] == list(CATALOG_NAMES)
    assert len(rows) == 10
    for r in rows:
        assert r["num_generators"] >= 1
        assert r["note"]


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

ANALYZE_CASES = {
    ("u1", 4): ("WeaklyNonUniversal", 2),
    ("mg_z2", 3): ("StronglyNonUniversal", 16),
    ("universal", 2): ("Universal", 0),
}


@pytest.mark.parametrize("name,L", sorted(ANALYZE_CASES))
def test_analyze_classifications(tmp_path, name, L):
    rc, out = _analyze(tmp_path, "analyze", "--gateset", name,
                       "--length", str(L))
    assert rc == 0
    report = _load(out / "report.json")
    label, codim = ANALYZE_CASES[(name, L)]
    assert report["classification"] == label
    assert report["codim"] == codim
    assert report["schema_version"] == 1
    # default --restrict bond: the rows tile the bond algebra
    table = report["block_table"]
    assert sum(b["D"] * b["d"] for b in table) == report["dimensions"]["bond_algebra"]
    assert any(b["generator_overlap"] for b in table)
    assert (out / "run_meta.txt").exists()


def test_analyze_scomm_dimension(tmp_path):
    rc, out = _analyze(tmp_path, "analyze", "--gateset", "mg_z2",
                       "--length", "3")
    assert rc == 0
    report = _load(out / "report.json")
    assert report["dimensions"]["super_commutant"] == 14
    assert report["dimensions"]["minimal_super_commutant"] == 8
    assert report["dimensions"]["super_commutant"] > \
        report["dimensions"]["minimal_super_commutant"]


def test_analyze_center_basis_roundtrips(tmp_path):
    rc, out = _analyze(tmp_path, "analyze", "--gateset", "u1", "--length", "3")
    report = _load(out / "report.json")
    assert len(report["center_basis"]) == report["dimensions"]["center"]
    gates = build("u1", 3)
    d = gates.geometry.dim
    for triplets in report["center_basis"]:
        mat = np.zeros((d, d), dtype=complex)
        for t in triplets:
            mat[t["row"], t["col"]] = t["re"] + 1j * t["im"]
        for g in gates.generators:
            gd = g.dense()
            assert np.abs(mat @ gd - gd @ mat).max() < 1e-9


def test_analyze_restrict_modes(tmp_path):
    for mode in ("none", "sector"):
        rc, out = _analyze(tmp_path / mode, "analyze", "--gateset", "mg_z2",
                           "--length", "2", "--restrict", mode)
        assert rc == 0
        table = _load(out / "report.json")["block_table"]
        assert table
        if mode == "none":
            # unrestricted rows tile the whole operator space
            assert sum(b["D"] * b["d"] for b in table) == 16
        else:
            assert all(b["label"].startswith("s") for b in table)


def test_analyze_deterministic_bytes(tmp_path):
    _, a = _analyze(tmp_path / "a", "analyze", "--gateset", "mg_z2",
                    "--length", "3")
    _, b = _analyze(tmp_path / "b", "analyze", "--gateset", "mg_z2",
                    "--length", "3")
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()


def test_analyze_solver_limit_exits_2(tmp_path):
    rc, _ = _analyze(tmp_path, "analyze", "--gateset", "u1", "--length", "8")
    assert rc == 2
    rc, _ = _analyze(tmp_path, "--max-dim", "100", "analyze",
                     "--gateset", "u1", "--length", "4")
    assert rc == 2


def test_analyze_input_errors_exit_1(tmp_path):
    rc, _ = _analyze(tmp_path, "analyze", "--gateset", "u1")
    assert rc == 1  # missing --length
    rc, _ = _analyze(tmp_path, "analyze", "--gateset", "translation",
                     "--length", "4", "--boundary", "obc")
    assert rc == 1


# ---------------------------------------------------------------------------
# argparse behaviour
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    ["analyze", "--gateset", "nope", "--length", "3", "--out", "/tmp/x"],
    ["analyze", "--gateset", "u1", "--length", "3"],  # missing --out
    [],
])
def test_usage_errors_exit_1(argv):
    with pytest.raises(SystemExit) as e:
        main(argv)
    assert e.value.code == 1


def test_help_exits_0():
    with pytest.raises(SystemExit) as e:
        main(["--help"])
    assert e.value.code == 0


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as e:
        main(["--version"])
    assert e.value.code == 0


# ---------------------------------------------------------------------------
# brownian
# ---------------------------------------------------------------------------


def test_brownian_otoc_outputs(tmp_path):
    out = tmp_path / "run"
    rc = main(["brownian", "--gateset", "mg_z2", "--length", "3",
               "--observable", "otoc", "--sites", "2", "--ensemble", "8",
               "--dt", "0.05", "--tmax", "1", "--seed", "7",
               "--out", str(out)])
    assert rc == 0
    raw = (out / "series.csv").read_bytes()
    assert raw.startswith(b"time,mean,stderr")
    assert b"\r\n" in raw
    sidecar = _load(out / "sidecar.json")
    assert sidecar["schema_version"] == 1
    assert sidecar["observable"] == "otoc"
    assert sidecar["sites"] == 2
    assert sidecar["prediction"] == pytest.approx(-1.0 / 15.0, abs=1e-12)
    assert sidecar["prediction_basis"] == "closed_form"
    assert sidecar["config"]["gate_set"] == "mg_z2"
    assert sidecar["config"]["master_seed"] == 7
    # first CSV row is the exact t=0 value
    first = raw.decode().split("\r\n")[1].split(",")
    assert float(first[0]) == 0.0
    assert float(first[1]) == pytest.approx(1.0, abs=1e-12)


def test_brownian_mg_chain_prediction_value(tmp_path):
    # the L=6 sidecar carries the closed-form saturation value 0.39394
    out = tmp_path / "run"
    rc = main(["brownian", "--gateset", "mg_z2", "--length", "6",
               "--observable", "otoc", "--sites", "3", "--ensemble", "4",
               "--dt", "0.05", "--tmax", "0.2", "--out", str(out)])
    assert rc == 0
    sidecar = _load(out / "sidecar.json")
    assert round(sidecar["prediction"], 5) == 0.39394
    assert sidecar["prediction"] == pytest.approx(float(Fraction(13, 33)),
                                                  abs=1e-12)


def test_brownian_renyi_page_point(tmp_path):
    out = tmp_path / "run"
    rc = main(["brownian", "--gateset", "universal", "--length", "12",
               "--observable", "renyi2", "--region", "1..6",
               "--ensemble", "2", "--dt", "0.1", "--tmax", "0.2",
               "--out", str(out)])
    assert rc == 0
    sidecar = _load(out / "sidecar.json")
    assert sidecar["region"] == [1, 2, 3, 4, 5, 6]
    assert sidecar["prediction"] == pytest.approx(128.0 / 4097.0, abs=1e-12)
    assert sidecar["prediction_basis"] == "closed_form"
    header = (out / "series.csv").read_bytes().decode().split("\r\n")[0]
    assert header == "time,mean,stderr,entropy_bits,entropy_nats," \
                     "entropy_traj_mean_nats"


def test_brownian_engine_prediction_route(tmp_path):
    out = tmp_path / "run"
    rc = main(["brownian", "--gateset", "z2", "--length", "3",
               "--observable", "otoc", "--sites", "2", "--ensemble", "4",
               "--dt", "0.05", "--tmax", "0.2", "--out", str(out)])
    assert rc == 0
    sidecar = _load(out / "sidecar.json")
    assert sidecar["prediction"] == pytest.approx(-1.0 / 15.0, abs=1e-9)
    assert sidecar["prediction_basis"] == "super_commutant"


def test_brownian_twopoint_prediction(tmp_path):
    out = tmp_path / "run"
    rc = main(["brownian", "--gateset", "u1", "--length", "3",
               "--observable", "twopoint", "--sites", "2", "--ensemble", "8",
               "--dt", "0.05", "--tmax", "1", "--out", str(out)])
    assert rc == 0
    sidecar = _load(out / "sidecar.json")
    assert sidecar["prediction"] == pytest.approx(1.0 / 3.0, abs=1e-10)
    assert sidecar["prediction_basis"] == "commutant"


def test_brownian_series_deterministic(tmp_path):
    argv = ["brownian", "--gateset", "mg_z2", "--length", "3",
            "--observable", "otoc", "--sites", "2", "--ensemble", "8",
            "--dt", "0.05", "--tmax", "1", "--seed", "3"]
    assert main(argv + ["--out", str(tmp_path / "a")]) == 0
    assert main(argv + ["--out", str(tmp_path / "b")]) == 0
    for name in ("series.csv", "sidecar.json"):
        assert ((tmp_path / "a" / name).read_bytes()
                == (tmp_path / "b" / name).read_bytes())
    assert main(argv[:-1] + ["4", "--out", str(tmp_path / "c")]) == 0
    assert ((tmp_path / "a" / "series.csv").read_bytes()
            != (tmp_path / "c" / "series.csv").read_bytes())


@pytest.mark.parametrize("extra", [
    ["--observable", "renyi2", "--region", "9..12"],
    ["--observable", "renyi2", "--region", "garbage"],
    ["--observable", "renyi2"],          # missing --region
    ["--observable", "otoc"],            # missing --sites
    ["--observable", "otoc", "--sites", "0"],
    ["--observable", "twopoint", "--sites", "7"],
])
def test_brownian_input_errors(tmp_path, extra):
    rc = main(["brownian", "--gateset", "universal", "--length", "3"]
              + extra + ["--ensemble", "2", "--tmax", "0.1",
                         "--out", str(tmp_path / "x")])
    assert rc == 1


# ---------------------------------------------------------------------------
# custom gate files
# ---------------------------------------------------------------------------


def _triplets(mat):
    out = []
    for i in range(mat.shape[0]):
        for j in range(mat.shape[1]):
            v = complex(mat[i, j])
            if abs(v) > 1e-14:
                out.append({"row": i, "col": j, "re": v.real, "im": v.imag})
    return out


def test_custom_gate_file(tmp_path):
    x = np.array([[0.0, 1.0], [1.0, 0.0]])
    z = np.diag([1.0, -1.0])
    spec = {
        "name": "toy",
        "geometry": {"num_sites": 2, "local_dim": 2, "boundary": "open"},
        "generators": [_triplets(np.kron(x, x)),
                       _triplets(np.kron(z, np.eye(2)))],
    }
    path = tmp_path / "gates.json"
    path.write_text(json.dumps(spec))
    rc, out = _analyze(tmp_path, "analyze", "--custom", str(path))
    assert rc == 0
    report = _load(out / "report.json")
    assert report["gate_set"]["name"] == "toy"
    assert report["gate_set"]["num_generators"] == 2


def test_custom_gate_file_errors(tmp_path):
    bad = {"geometry": {"num_sites": 2, "local_dim": 2},
           "generators": [[{"row": 0, "col": 1, "re": 1.0, "im": 0.5}]]}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    rc, _ = _analyze(tmp_path, "analyze", "--custom", str(path))
    assert rc == 1  # not Hermitian
    junk = tmp_path / "junk.json"
    junk.write_text("{not json")
    rc, _ = _analyze(tmp_path, "analyze", "--custom", str(junk))
    assert rc == 1
    rc, _ = _analyze(tmp_path, "analyze", "--custom",
                     str(tmp_path / "missing.json"))
    assert rc == 1


# ---------------------------------------------------------------------------
# threads
# ---------------------------------------------------------------------------


def test_threads_settings(monkeypatch, capsys):
    assert main(["--threads", "1", "catalog"]) == 0
    capsys.readouterr()
    assert main(["--threads", "0", "catalog"]) == 1
    monkeypatch.setenv("COMMUTANT_LAB_THREADS", "1")
    assert main(["catalog"]) == 0
    monkeypatch.setenv("COMMUTANT_LAB_THREADS", "lots")
    assert main(["catalog"]) == 1
