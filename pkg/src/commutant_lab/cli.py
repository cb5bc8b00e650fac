"""Command-line front end: analysis reports, trajectory runs, catalog listing.

Commands
--------
analyze   classify a gate set and write report.json (+ run_meta.txt)
brownian  run a trajectory estimator and write series.csv + sidecar.json
catalog   list the named gate sets

Exit codes: 0 success, 1 malformed input, 2 solver limit.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np
import scipy
import scipy.sparse as sp

from . import __version__
from ._linalg import SolverLimitError
from .brownian import (
    TrajectoryConfig,
    config_dict,
    mazur_two_point,
    otoc_series,
    predicted_otoc,
    predicted_purity_from_scomm,
    renyi2_series,
    series_to_csv,
    twopoint_series,
)
from .catalog import CATALOG_NAMES, QUTRIT_Z, build, custom
from .codim import missing_scar_basis
from .commutant import commutant, sector_table
from .majorana import predicted_otoc_mg, predicted_purity
from .operators import ChainGeometry, Operator, PAULI_Z, embed_local
from .superalgebra import (
    MAX_FULL_SPACE,
    block_decomposition,
    classify,
    constraint_report,
    minimal_block_decomposition,
    super_commutant,
)

SCHEMA_VERSION = 1
DEFAULT_MAX_DIM = 65536
# chain dimension up to which sidecar predictions may run the doubled-space
# engine; beyond it only closed forms are reported
_ENGINE_PREDICTION_DIM = 32
_TWOPOINT_PREDICTION_DIM = 64

_SET_NOTES = {
    "u1": "hopping bonds; conserves total magnetization",
    "su2": "exchange bonds; conserves all total-spin components",
    "tjz": "constrained qutrit hopping with Ising coupling",
    "tjz_mg": "free-fermion subset of the constrained qutrit set",
    "translation": "translation-invariant global sums only",
    "mg_z2": "matchgate bonds: free-fermion bilinears",
    "mg_u1": "number-conserving matchgate bonds",
    "xz_decoupled": "commuting X-chain and Z-chain families",
    "z2": "generic parity-preserving two-site bonds",
    "universal": "two-site set with no symmetry at all",
}


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit 1 (2 is the solver-limit code)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_gate_source(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--gateset", choices=CATALOG_NAMES,
                     help="named gate set from the catalog")
    src.add_argument("--custom", metavar="FILE",
                     help="JSON file with geometry + sparse generator entries")
    p.add_argument("--length", type=int, help="number of chain sites")
    p.add_argument("--boundary", choices=("obc", "pbc"),
                   help="chain boundary (default: the gate set's natural one)")
    p.add_argument("--k", type=int,
                   help="extra integer parameter for parametrized sets")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, metavar="DIR",
                   help="output directory (created if missing)")


def _build_parser() -> _Parser:
    parser = _Parser(prog="commutant-lab",
                     description="symmetry analysis and stochastic-circuit "
                                 "checks for qudit-chain gate sets")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    parser.add_argument("--threads", type=int, default=None,
                        help="cap BLAS/LAPACK threads "
                             "(default: COMMUTANT_LAB_THREADS or unlimited)")
    parser.add_argument("--max-dim", type=int, default=DEFAULT_MAX_DIM,
                        help="largest operator-space dimension attempted "
                             f"(default {DEFAULT_MAX_DIM})")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p_an = sub.add_parser("analyze",
                          help="classify a gate set and write report.json")
    _add_gate_source(p_an)
    p_an.add_argument("--restrict", choices=("bond", "sector", "none"),
                      default="bond",
                      help="subspace for the block decomposition")

    p_br = sub.add_parser("brownian",
                          help="trajectory estimator; writes series.csv "
                               "+ sidecar.json")
    _add_gate_source(p_br)
    p_br.add_argument("--observable", required=True,
                      choices=("otoc", "renyi2", "twopoint"))
    p_br.add_argument("--sites", type=int, metavar="J",
                      help="probe site for otoc/twopoint (Z at site J)")
    p_br.add_argument("--region", metavar="SPEC",
                      help="subsystem for renyi2, e.g. 1..6 or 1,3,5")
    p_br.add_argument("--ensemble", type=int, default=256)
    p_br.add_argument("--kappa", type=float, default=1.0)
    p_br.add_argument("--dt", type=float, default=0.01)
    p_br.add_argument("--tmax", type=float, default=None)
    p_br.add_argument("--sample-every", type=int, default=1,
                      help="record every N-th step")

    p_cat = sub.add_parser("catalog", help="list the named gate sets")
    p_cat.add_argument("--json", action="store_true",
                       help="machine-readable listing")
    p_cat.add_argument("--length", type=int, default=3,
                       help="reference length for generator counts")
    return parser


# ---------------------------------------------------------------------------
# input plumbing
# ---------------------------------------------------------------------------


def _load_custom(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    try:
        geo = data["geometry"]
        num_sites = int(geo["num_sites"])
        if "local_dims" in geo:
            dims = tuple(int(x) for x in geo["local_dims"])
        else:
            dims = (int(geo.get("local_dim", 2)),) * num_sites
        boundary = geo.get("boundary", "open")
        raw_gens = data["generators"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed gate file {path}: {exc}") from exc
    geom = ChainGeometry(num_sites, dims, boundary)
    d = geom.dim
    ops = []
    for i, triplets in enumerate(raw_gens):
        try:
            rows = [int(t["row"]) for t in triplets]
            cols = [int(t["col"]) for t in triplets]
            vals = [float(t.get("re", 0.0)) + 1j * float(t.get("im", 0.0))
                    for t in triplets]
        except (KeyError, TypeError) as exc:
            raise ValueError(
                f"generator {i} in {path}: entries need row/col/re/im ({exc})"
            ) from exc
        mat = sp.csr_matrix((vals, (rows, cols)), shape=(d, d))
        ops.append(Operator(geom, mat, "unknown"))
    return custom(ops, name=str(data.get("name", "custom")))


def _gate_set_from_args(args):
    if args.custom:
        return _load_custom(args.custom)
    if args.length is None:
        raise ValueError("--length is required with --gateset")
    boundary = {None: None, "obc": "open", "pbc": "periodic"}[args.boundary]
    return build(args.gateset, args.length, boundary=boundary, k=args.k)


def _parse_region_spec(spec, num_sites: int):
    if spec is None:
        raise ValueError("--region is required for renyi2 (e.g. --region 1..6)")
    text = spec.strip()
    try:
        if ".." in text:
            lo, _, hi = text.partition("..")
            a, b = int(lo), int(hi)
            if b < a:
                raise ValueError
            sites = list(range(a, b + 1))
        else:
            sites = [int(part) for part in text.split(",")]
    except ValueError:
        raise ValueError(
            f"invalid region spec {spec!r}: use a..b or a comma list"
        ) from None
    if any(s < 1 or s > num_sites for s in sites):
        raise ValueError(f"region sites must lie in 1..{num_sites}")
    return tuple(sorted(set(sites)))


def _probe_operator(geom, site):
    if site is None:
        raise ValueError("--sites J is required for this observable")
    if site < 1 or site > geom.num_sites:
        raise ValueError(f"site {site} outside 1..{geom.num_sites}")
    q = geom.local_dims[site - 1]
    local = {2: PAULI_Z, 3: QUTRIT_Z}.get(q)
    if local is None:
        raise ValueError(f"no standard probe for local dimension {q}")
    return embed_local(local, [site], geom)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _matrix_triplets(mat, tol: float = 1e-12):
    coo = sp.coo_matrix(mat)
    order = np.lexsort((coo.col, coo.row))
    out = []
    for i in order:
        v = coo.data[i]
        if abs(v) <= tol:
            continue
        out.append({"row": int(coo.row[i]), "col": int(coo.col[i]),
                    "re": float(v.real), "im": float(v.imag)})
    return out


def _basis_payload(basis):
    d = basis.geometry.dim
    return [_matrix_triplets(basis.matrix[:, k].reshape(d, d))
            for k in range(basis.dimension)]


def _write_json(path: Path, payload) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_meta(path: Path, t_start: float) -> None:
    took = time.perf_counter() - t_start
    path.write_text(
        f"wall_seconds {took:.3f}\n"
        f"package {__version__}\n"
        f"numpy {np.__version__}\n"
        f"scipy {scipy.__version__}\n",
        encoding="utf-8",
    )


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _block_rows(gates, restrict: str, seed: int):
    if restrict in ("bond", "none"):
        decomp = block_decomposition(gates, restrict=restrict, seed=seed)
        rows = [(b.label, b.krylov_dim, b.degeneracy, b.inside_bond)
                for b in decomp.blocks]
        return rows, decomp
    _, _, _, triples = sector_table(gates, seed=seed)
    rows = []
    for si, (proj, _, _) in enumerate(triples):
        sub = block_decomposition(gates, restrict=proj, seed=seed)
        rows.extend((f"s{si}:{b.label}", b.krylov_dim, b.degeneracy,
                     b.inside_bond) for b in sub.blocks)
    return rows, None


def _cmd_analyze(args) -> int:
    t_start = time.perf_counter()
    gates = _gate_set_from_args(args)
    geom = gates.geometry
    cap = min(args.max_dim, MAX_FULL_SPACE)
    if geom.dim ** 2 > cap:
        raise SolverLimitError(
            f"operator space dimension {geom.dim ** 2} exceeds the "
            f"classification cap {cap}"
        )
    report = classify(gates, seed=args.seed)
    _, _, cen, _ = sector_table(gates, seed=args.seed)
    rows, decomp = _block_rows(gates, args.restrict, args.seed)
    notes = list(report.constraint_notes)
    if decomp is not None and args.restrict == "bond":
        minimal = minimal_block_decomposition(gates, seed=args.seed)
        if decomp.space_label == minimal.space_label:
            notes.extend(constraint_report(decomp, minimal))
    scars = missing_scar_basis(cen, gates)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "gate_set": {
            "name": gates.name,
            "num_sites": int(geom.num_sites),
            "local_dims": [int(q) for q in geom.local_dims],
            "boundary": geom.boundary,
            "num_generators": len(gates),
        },
        "classification": report.classification,
        "codim": int(report.codim),
        "semi_universal": bool(report.semi_universal),
        "dimensions": {
            "dla": int(report.dim_dla),
            "bond_algebra": int(report.dim_bond),
            "commutant": int(report.dim_comm),
            "center": int(report.dim_center),
            "super_commutant": int(report.dim_scomm),
            "minimal_super_commutant": int(report.dim_scommt),
        },
        "block_table": [
            {"label": str(label), "D": int(D), "d": int(d),
             "generator_overlap": bool(flag)}
            for label, D, d, flag in rows
        ],
        "center_basis": _basis_payload(cen),
        "missing_scar_basis": _basis_payload(scars),
        "constraint_notes": [str(n) for n in notes],
        "restrict": args.restrict,
        "seed": args.seed,
    }
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_json(outdir / "report.json", payload)
    _write_meta(outdir / "run_meta.txt", t_start)
    print(f"{gates.name} L={geom.num_sites}: {report.classification} "
          f"(codim {report.codim})")
    return 0


def _contiguous_edge_region(region, num_sites: int) -> bool:
    ell = len(region)
    return (region == tuple(range(1, ell + 1))
            or region == tuple(range(num_sites - ell + 1, num_sites + 1)))


def _otoc_prediction(gates, probe):
    geom = gates.geometry
    if gates.name in ("mg_z2", "mg_u1") and geom.boundary == "open":
        return float(predicted_otoc_mg(geom.num_sites)), "closed_form"
    if geom.dim <= _ENGINE_PREDICTION_DIM:
        val = predicted_otoc(super_commutant(gates), probe, probe)
        return float(val), "super_commutant"
    return None, None


def _purity_prediction(gates, region, psi0):
    geom = gates.geometry
    L, ell = geom.num_sites, len(region)
    if gates.name == "universal":
        return float(predicted_purity(L, ell, "universal")), "closed_form"
    if (gates.name == "mg_z2" and geom.boundary == "open"
            and _contiguous_edge_region(region, L)):
        return float(predicted_purity(L, ell, "matchgate")), "closed_form"
    if geom.dim <= _ENGINE_PREDICTION_DIM:
        val = predicted_purity_from_scomm(super_commutant(gates), psi0, region)
        return float(val), "super_commutant"
    return None, None


def _cmd_brownian(args) -> int:
    t_start = time.perf_counter()
    gates = _gate_set_from_args(args)
    geom = gates.geometry
    cfg = TrajectoryConfig(gates=gates, kappa=args.kappa, dt=args.dt,
                           t_max=args.tmax, ensemble_size=args.ensemble,
                           master_seed=args.seed,
                           sample_every=args.sample_every)
    sidecar = {
        "schema_version": SCHEMA_VERSION,
        "observable": args.observable,
        "config": config_dict(cfg),
    }
    if args.observable == "otoc":
        probe = _probe_operator(geom, args.sites)
        series = otoc_series(cfg, probe, probe)
        prediction, basis = _otoc_prediction(gates, probe)
        sidecar["sites"] = args.sites
    elif args.observable == "renyi2":
        region = _parse_region_spec(args.region, geom.num_sites)
        psi0 = np.zeros(geom.dim)
        psi0[-1] = 1.0
        series = renyi2_series(cfg, psi0, region)
        prediction, basis = _purity_prediction(gates, region, psi0)
        sidecar["region"] = list(region)
        sidecar["initial_state"] = "every site in its highest local level"
    else:
        probe = _probe_operator(geom, args.sites)
        series = twopoint_series(cfg, probe)
        if geom.dim <= _TWOPOINT_PREDICTION_DIM:
            prediction = float(mazur_two_point(commutant(gates), probe))
            basis = "commutant"
        else:
            prediction, basis = None, None
        sidecar["sites"] = args.sites
    sidecar["prediction"] = prediction
    sidecar["prediction_basis"] = basis
    sidecar["time_average"] = float(series.time_average)
    sidecar["time_average_stderr"] = float(series.time_average_stderr)
    sidecar["time_average_window"] = [float(t)
                                      for t in series.time_average_window]
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    series_to_csv(series, outdir / "series.csv")
    _write_json(outdir / "sidecar.json", sidecar)
    _write_meta(outdir / "run_meta.txt", t_start)
    line = (f"{args.observable} {gates.name} L={geom.num_sites}: "
            f"time average {series.time_average:.6f} "
            f"± {series.time_average_stderr:.6f}")
    if prediction is not None:
        line += f", prediction {prediction:.6f}"
    print(line)
    return 0


def _cmd_catalog(args) -> int:
    rows = []
    for name in CATALOG_NAMES:
        entry = {"name": name, "note": _SET_NOTES[name]}
        for length in (args.length, 3, 2):
            try:
                gates = build(name, length)
            except (ValueError, TypeError):
                continue
            entry.update({
                "reference_length": length,
                "num_generators": len(gates),
                "local_dim": int(max(gates.geometry.local_dims)),
                "boundary": gates.geometry.boundary,
            })
            break
        rows.append(entry)
    if args.json:
        print(json.dumps(rows, indent=2, sort_keys=True))
        return 0
    width = max(len(r["name"]) for r in rows)
    print(f"{'name':<{width}}  gens  dim  boundary  description")
    for r in rows:
        print(f"{r['name']:<{width}}  {r.get('num_generators', '?'):>4}  "
              f"{r.get('local_dim', '?'):>3}  {r.get('boundary', '?'):<8}  "
              f"{r['note']}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    threads = args.threads
    if threads is None:
        raw = os.environ.get("COMMUTANT_LAB_THREADS", "").strip()
        if raw:
            try:
                threads = int(raw)
            except ValueError:
                print(f"error: COMMUTANT_LAB_THREADS={raw!r} is not an "
                      "integer", file=sys.stderr)
                return 1
    if threads is not None and threads < 1:
        print("error: --threads must be a positive integer", file=sys.stderr)
        return 1
    handlers = {"analyze": _cmd_analyze, "brownian": _cmd_brownian,
                "catalog": _cmd_catalog}
    with contextlib.ExitStack() as stack:
        if threads is not None:
            from threadpoolctl import threadpool_limits
            stack.enter_context(threadpool_limits(limits=threads))
        try:
            return handlers[args.command](args)
        except (SolverLimitError, MemoryError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        except (ValueError, TypeError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1


if __name__ == "__main__":
    sys.exit(main())
