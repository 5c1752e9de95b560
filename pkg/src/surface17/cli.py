"""Command-line entry point: ``surface17 <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data error.  Relative output paths
are resolved against ``$SURFACE17_OUTPUT_DIR`` when it is set.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (direct_epsilon, fidelity_correctable, fit_retention, logical_decay_fit,
                       mitigate_readout, sample_correlators, scaling_study, stabilizer_survey)
from .analysis.memory import MemoryPoint, decode_batch_point
from .calibration import (BELOW_FLOOR, IQBatch, compensation_rounds, confusion_matrix,
                          dephasing_to_flip, drive_crosstalk_ratio, fit_gmm3, read_matrix_csv,
                          readout_error, synthesize_iq)
from .code import DATA, GateSchedule, default_schedule, validate_schedule
from .decoder import WeightMatrix, train_weights, weights_from_dict, weights_from_probabilities, weights_to_dict
from .experiment import (REJECTION_MODES, SCHEMA_VERSION, RunConfig, compute_syndromes, read_shots,
                         reject_leakage, run_memory_experiment, write_shots)
from .noise import device_from_path
from .seeding import derive_rng

log = logging.getLogger("surface17")
OUTPUT_ENV = "SURFACE17_OUTPUT_DIR"


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("cycle counts must be >= 1")
    return vals


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def _out_path(path: str) -> Path:
    p = Path(path)
    base = os.environ.get(OUTPUT_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _in_path(path: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise DataError(f"input file {path} does not exist")
    return p


def _write_json(path: str, doc: dict) -> Path:
    out = _out_path(path)
    out.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return out


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _read_json(path: str) -> dict:
    try:
        doc = json.loads(_in_path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise DataError(f"{path}: unsupported schema version {doc.get('schema_version')!r}")
    return doc


def _device(args):
    try:
        return device_from_path(args.device)
    except FileNotFoundError:
        raise DataError(f"device file {args.device} does not exist") from None
    except (ValueError, TypeError, KeyError) as exc:
        raise DataError(f"device file {args.device}: {exc}") from None


def _threads(args) -> int:
    return args.threads or os.cpu_count() or 1


# ---------------------------------------------------------------------------
# memory pipeline


def cmd_simulate(args) -> int:
    device = _device(args)
    batches, summary = [], []
    for n in args.cycles:
        cfg = RunConfig(args.state, n, args.shots, args.seed)
        b = run_memory_experiment(cfg, device, workers=_threads(args))
        kept, stats = reject_leakage(b, "both")
        sig = compute_syndromes(kept).mean_syndrome() if len(kept) else float("nan")
        summary.append({"n": n, "shots": len(b), "herald_rate": float(b.herald_ok.mean()),
                        "retained_fraction": stats.fraction, "sigma_mean": sig})
        batches.append(b)
    out = _out_path(args.out)
    write_shots(out, batches, {"seed": args.seed, "device": str(args.device)})
    print(json.dumps({"schema_version": SCHEMA_VERSION, "paper_metric": "sigma_mean",
                      "output": str(out), "state": args.state, "points": summary},
                     sort_keys=True))
    return 0


def _load_shots(path):
    try:
        return read_shots(_in_path(path))
    except (ValueError, KeyError) as exc:
        raise DataError(str(exc)) from None


def cmd_weights(args) -> int:
    _, batches = _load_shots(args.shots)
    docs = []
    for b in batches:
        kept, _ = reject_leakage(b, args.rejection)
        syn = compute_syndromes(kept)
        try:
            probs, _ = train_weights(syn, b.n_cycles, cap=args.cap)
        except ValueError as exc:
            raise DataError(f"n={b.n_cycles}: {exc}") from None
        docs.append(weights_to_dict(probs, args.cap, {"state": b.state, "rejection": args.rejection}))
    out = _write_json(args.out, {"schema_version": SCHEMA_VERSION,
                                 "paper_metric": "edge_probabilities", "weights": docs})
    print(json.dumps({"output": str(out), "sets": len(docs)}))
    return 0


def _weights_lookup(path) -> dict:
    doc = _read_json(path)
    table = {}
    for w in doc.get("weights", []):
        try:
            probs, cap = weights_from_dict(w)
        except (KeyError, ValueError) as exc:
            raise DataError(f"{path}: malformed weights entry ({exc})") from None
        table[(probs.graph.basis, probs.graph.n_cycles)] = weights_from_probabilities(probs, cap)
    return table


def cmd_decode(args) -> int:
    _, batches = _load_shots(args.shots)
    table = _weights_lookup(args.weights) if args.weights else {}
    points = []
    for b in batches:
        wm: WeightMatrix | None = table.get((b.basis, b.n_cycles))
        if wm is None and args.weights:
            raise DataError(f"no weights for basis {b.basis}, n={b.n_cycles} in {args.weights}")
        try:
            points.append(decode_batch_point(b, args.rejection, wm=wm).as_dict())
        except ValueError as exc:
            raise DataError(f"n={b.n_cycles}: {exc}") from None
    out = _write_json(args.out, {"schema_version": SCHEMA_VERSION,
                                 "paper_metric": "logical_expectation", "points": points})
    print(json.dumps({"output": str(out), "points": len(points)}))
    return 0


def _analyze_points(points: list[MemoryPoint], t_cycle_us: float) -> dict:
    by_state: dict = {}
    for p in points:
        by_state.setdefault(p.state, []).append(p)
    report = {}
    for state, pts in sorted(by_state.items()):
        pts.sort(key=lambda p: p.n)
        ns = [p.n for p in pts]
        entry = {"table": [p.as_dict() for p in pts]}
        if len(set(ns)) >= 3:
            fit = logical_decay_fit(ns, [p.mean for p in pts], [p.stderr for p in pts], t_cycle_us)
            entry["fit"] = fit.as_dict()
            entry["epsilon_L"] = fit.epsilon_L
            entry["epsilon_L_direct"] = direct_epsilon(ns, [p.mean for p in pts])
        if len(set(ns)) >= 2:
            rf = fit_retention(ns, [p.retained_fraction for p in pts])
            entry["r_c"] = rf.r_c
        report[state] = entry
    eps = [e["epsilon_L"] for e in report.values() if "epsilon_L" in e]
    return {"states": report, "epsilon_L_mean": float(np.mean(eps)) if eps else None}


def cmd_analyze(args) -> int:
    points = []
    for path in args.decoded:
        doc = _read_json(path)
        points += [MemoryPoint(**p) for p in doc.get("points", [])]
    if not points:
        raise DataError("no decoded points to analyze")
    try:
        report = _analyze_points(points, args.cycle_us)
    except RuntimeError as exc:
        raise DataError(str(exc)) from None
    out = _write_json(args.out, {"schema_version": SCHEMA_VERSION, "paper_metric": "epsilon_L",
                                 **report})
    if args.csv:
        with open(_out_path(args.csv), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["state", "n", "logical_expectation", "stderr", "E_L",
                        "retained_fraction", "sigma_mean"])
            for p in sorted(points, key=lambda p: (p.state, p.n)):
                w.writerow([p.state, p.n, p.mean, p.stderr, p.E_L, p.retained_fraction,
                            p.sigma_mean])
    print(json.dumps({"output": str(out), "epsilon_L_mean": report["epsilon_L_mean"]}))
    return 0


def cmd_scaling(args) -> int:
    res = scaling_study(args.factors, args.cycles, args.shots, args.seed,
                        workers=_threads(args))
    out = _write_json(args.out, {"schema_version": SCHEMA_VERSION,
                                 "paper_metric": "epsilon_L_vs_improvement", **res.as_dict()})
    if args.csv:
        with open(_out_path(args.csv), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["factor", "epsilon_L"] + [f"epsilon_L_{s}" for s in res.per_state])
            for i, x in enumerate(res.factors):
                w.writerow([x, res.epsilon_L[i]] + [v[i] for v in res.per_state.values()])
    print(json.dumps({"output": str(out), "exponent": res.exponent}))
    return 0


def cmd_stabilizers(args) -> int:
    survey = stabilizer_survey(_device(args), args.shots, args.seed)
    doc = {"schema_version": SCHEMA_VERSION, "paper_metric": "stabilizer_error",
           "weight_two_mean": survey["weight_two_mean"],
           "weight_four_mean": survey["weight_four_mean"],
           "stabilizers": {a: {"epsilon": r.epsilon, "means": r.means, "ideals": r.ideals}
                           for a, r in survey["results"].items()}}
    out = _write_json(args.out, doc)
    print(json.dumps({"output": str(out), "weight_two_mean": doc["weight_two_mean"],
                      "weight_four_mean": doc["weight_four_mean"]}))
    return 0


def cmd_fidelity(args) -> int:
    device = _device(args)
    data = sample_correlators(device, args.shots_per_setting, args.seed)
    corr = data.correlators
    if not args.no_mitigation:
        corr = mitigate_readout(corr, [device.qubit(d).eps_ro2 for d in DATA])
    rep = fidelity_correctable(corr, args.subspaces, args.seed)
    out = _write_json(args.out, {"schema_version": SCHEMA_VERSION, "paper_metric": "F_phys",
                                 "settings": len(data.settings), **rep.as_dict()})
    print(json.dumps({"output": str(out), "F_phys": rep.F_phys, "F_c": rep.F_c}))
    return 0


def cmd_validate_schedule(args) -> int:
    if args.schedule:
        try:
            sched = GateSchedule.from_text(_in_path(args.schedule).read_text())
        except ValueError as exc:
            raise DataError(str(exc)) from None
    else:
        sched = default_schedule()
    try:
        problems = validate_schedule(sched)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    print(json.dumps({"valid": not problems, "violations": problems}))
    return 0 if not problems else 2


# ---------------------------------------------------------------------------
# calibration


def cmd_cal_gmm(args) -> int:
    if args.iq:
        try:
            batch = IQBatch.from_json(_in_path(args.iq).read_text())
        except (ValueError, KeyError) as exc:
            raise DataError(f"{args.iq}: {exc}") from None
    else:
        rng = derive_rng(args.seed, "calibrate", "gmm")
        batch = synthesize_iq([(1.0, 1.0), (4.0, 1.5), (2.5, 4.0)],
                              [np.eye(2) * 0.4] * 3, args.shots, rng)
    try:
        g = fit_gmm3(batch)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    a3 = g.predict(batch.u, equal_priors=args.equal_priors)
    a2 = g.predict(batch.u, (0, 1), equal_priors=args.equal_priors)
    doc = {"schema_version": SCHEMA_VERSION, "paper_metric": "readout_error",
           "mixture": g.as_dict(), "confusion": confusion_matrix(a3, batch.label, 3),
           "epsilon_3": readout_error(a3, batch.label, 3),
           "epsilon_2": readout_error(a2, batch.label, 2)}
    out = _write_json(args.out, doc)
    print(json.dumps({"output": str(out), "epsilon_2": doc["epsilon_2"],
                      "epsilon_3": doc["epsilon_3"]}))
    return 0


def cmd_cal_flux(args) -> int:
    try:
        C = read_matrix_csv(_in_path(args.matrix))
    except ValueError as exc:
        raise DataError(f"{args.matrix}: {exc}") from None
    rng = derive_rng(args.seed, "calibrate", "flux")
    try:
        rep = compensation_rounds(C, args.noise, rng, args.rounds)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    out = _write_json(args.out, {"schema_version": SCHEMA_VERSION,
                                 "paper_metric": "flux_crosstalk_suppression", **rep.as_dict(),
                                 "residual": rep.residual_measured})
    print(json.dumps({"output": str(out), "suppression": rep.suppression}))
    return 0


def cmd_cal_drive(args) -> int:
    try:
        v = drive_crosstalk_ratio(args.target, args.cross)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(json.dumps({"schema_version": SCHEMA_VERSION, "paper_metric": "cross_driving_ratio",
                      "value": v, "below_floor": v == BELOW_FLOOR}))
    return 0


def cmd_cal_dephasing(args) -> int:
    try:
        p = dephasing_to_flip(args.gamma, args.tau)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(json.dumps({"schema_version": SCHEMA_VERSION, "paper_metric": "P_phi", "value": p}))
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="surface17", description="Surface-17 memory experiment toolkit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def device_opt(sp):
        sp.add_argument("--device", default="bundled",
                        help="device TOML file, 'bundled' (per-qubit table) or 'average'")

    def threads_opt(sp):
        sp.add_argument("--threads", type=_positive_int, default=None,
                        help="worker processes (default: all cores)")

    s = sub.add_parser("simulate", help="simulate memory-experiment shots")
    device_opt(s)
    threads_opt(s)
    s.add_argument("--state", choices=["0L", "1L", "+L", "-L"], default="0L")
    s.add_argument("--cycles", type=_int_list, default=[1], help="comma-separated cycle counts")
    s.add_argument("--shots", type=_positive_int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True, help="JSONL output (.gz allowed)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("weights", help="estimate decoder weights from shots")
    s.add_argument("--shots", required=True)
    s.add_argument("--rejection", choices=REJECTION_MODES, default="both")
    s.add_argument("--cap", type=_positive_int, default=4)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_weights)

    s = sub.add_parser("decode", help="decode shots into logical expectation values")
    s.add_argument("--shots", required=True)
    s.add_argument("--weights", help="weights JSON (default: train on the shots themselves)")
    s.add_argument("--rejection", choices=REJECTION_MODES, default="both")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_decode)

    s = sub.add_parser("analyze", help="fit decays and retained fractions")
    s.add_argument("--decoded", nargs="+", required=True)
    s.add_argument("--cycle-us", type=float, default=1.1)
    s.add_argument("--out", required=True)
    s.add_argument("--csv")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("scaling", help="logical error versus uniform improvement factor")
    threads_opt(s)
    s.add_argument("--factors", type=_float_list, default=[1.0, 2.0, 5.0, 10.0])
    s.add_argument("--cycles", type=_int_list, default=[1, 2, 4, 8, 16])
    s.add_argument("--shots", type=_positive_int, default=20000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--csv")
    s.set_defaults(func=cmd_scaling)

    s = sub.add_parser("stabilizers", help="stabilizer error over all basis inputs")
    device_opt(s)
    s.add_argument("--shots", type=_positive_int, default=4000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_stabilizers)

    s = sub.add_parser("fidelity", help="state fidelities of |0>_L after one cycle")
    device_opt(s)
    s.add_argument("--shots-per-setting", type=_positive_int, default=2000)
    s.add_argument("--subspaces", type=_positive_int, default=500)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--no-mitigation", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_fidelity)

    s = sub.add_parser("validate-schedule", help="check a CZ schedule for aligned hook errors")
    s.add_argument("--schedule", help="schedule text file (default: built-in schedule)")
    s.set_defaults(func=cmd_validate_schedule)

    cal = sub.add_parser("calibrate", help="calibration analyses")
    csub = cal.add_subparsers(dest="what", required=True, parser_class=_Parser)
    s = csub.add_parser("gmm", help="three-state readout mixture fit")
    s.add_argument("--iq", help="IQ batch JSON (default: synthetic)")
    s.add_argument("--shots", type=_positive_int, default=100000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--equal-priors", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_cal_gmm)
    s = csub.add_parser("flux", help="flux-crosstalk compensation")
    s.add_argument("--matrix", required=True, help="CSV crosstalk matrix")
    s.add_argument("--noise", type=float, default=1e-5)
    s.add_argument("--rounds", type=_positive_int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_cal_flux)
    s = csub.add_parser("drive", help="cross-driving ratio")
    s.add_argument("--target", type=float, required=True)
    s.add_argument("--cross", type=float, required=True)
    s.set_defaults(func=cmd_cal_drive)
    s = csub.add_parser("dephasing", help="phase-flip probability from a dephasing rate")
    s.add_argument("--gamma", type=float, required=True, help="rate in 1/us")
    s.add_argument("--tau", type=float, required=True, help="readout duration in ns")
    s.set_defaults(func=cmd_cal_dephasing)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"surface17: error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"surface17: data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"surface17: I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
