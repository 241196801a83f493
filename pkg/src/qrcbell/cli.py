"""Command-line entry point.

Subcommands cover the full workflow: circuit generation, single-state
violation, distribution/noise/depth sweeps from a JSON config,
measure distributions, GHZ suites, representative export, the device
benchmarking protocol, and figure rendering from saved CSV/JSON.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
Environment overrides: QRCBELL_SEED, QRCBELL_WORKERS.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import harness
from .circuit import (
    CircuitError,
    circuit_from_dict,
    circuit_to_dict,
    random_circuit,
    simulate_noisy,
    simulate_pure,
)
from .harness import ExperimentConfig, HarnessError
from .inequality import InequalityError, MeasurementSettings
from .measures import MeasureError, measure_report
from .optimize import OptimizeError, OptimizerConfig, seesaw_maximize
from .qasm import QasmError, to_qasm
from .qstate import QStateError
from .transpile import (
    TranspileError,
    export_representatives,
    ionq_like,
    iqm_like,
    select_representatives,
)

CONFIG_ERRORS = (
    HarnessError, InequalityError, CircuitError, QStateError, OptimizeError,
    MeasureError, TranspileError, QasmError,
    json.JSONDecodeError, FileNotFoundError, KeyError, ValueError, OSError,
)

log = logging.getLogger("qrcbell")


def _target(name: str, n_qubits: int):
    if name == "IQM_like":
        return iqm_like(n_qubits)
    if name == "IonQ_like":
        return ionq_like(n_qubits)
    raise HarnessError(f"unknown target {name!r}")


def _load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        data = json.load(fh)
    if "QRCBELL_SEED" in os.environ:
        data["seed"] = int(os.environ["QRCBELL_SEED"])
    return ExperimentConfig.from_dict(data)


def _workers(args) -> int:
    if "QRCBELL_WORKERS" in os.environ:
        return max(1, int(os.environ["QRCBELL_WORKERS"]))
    return max(1, getattr(args, "workers", 1))


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, sort_keys=True, indent=2)
    sys.stdout.write("\n")


# ---------------------------------------------------------------------------
# Subcommand handlers

def cmd_generate(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    seed = int(os.environ.get("QRCBELL_SEED", args.seed))
    written = []
    for i in range(args.count):
        c = random_circuit(args.ensemble, args.n_qubits, args.depth, seed + i)
        stem = os.path.join(args.out, f"circuit_{i:04d}")
        with open(stem + ".json", "w") as fh:
            json.dump(circuit_to_dict(c), fh, sort_keys=True)
            fh.write("\n")
        written.append(stem + ".json")
        if args.qasm:
            with open(stem + ".qasm", "w") as fh:
                fh.write(to_qasm(c))
            written.append(stem + ".qasm")
    _emit({"written": written})
    return 0


def cmd_violate(args) -> int:
    if args.circuit:
        with open(args.circuit) as fh:
            c = circuit_from_dict(json.load(fh))
    else:
        c = random_circuit(args.ensemble, args.n_qubits, args.depth, args.seed)
    table = harness._table_for(args.family, c.n_qubits)
    if args.noise > 0:
        from .circuit import NoiseModel
        state = simulate_noisy(c, NoiseModel(args.noise, args.noise))
    else:
        state = simulate_pure(c)
    cfg = OptimizerConfig(restarts=args.restarts,
                          seed=int(os.environ.get("QRCBELL_SEED", args.seed)))
    res = seesaw_maximize(state, table, cfg)
    _emit({
        "family": table.family,
        "value": res.value,
        "classical_bound": table.classical_bound,
        "quantum_bound": table.quantum_bound,
        "violated": res.violated_classical,
        "violation_margin": res.violation_margin,
        "iterations": res.iterations,
        "converged": res.converged,
        "angles": np.asarray(res.settings.angles).tolist(),
    })
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    workers = _workers(args)
    os.makedirs(args.out, exist_ok=True)
    from . import plotting
    if args.mode == "distribution":
        hist, records = harness.run_distribution(cfg, workers=workers)
        paths = harness.save_run_outputs(args.out, args.name, cfg, hist, records)
        if args.plot:
            paths["figure"] = plotting.plot_histogram(
                hist, os.path.join(args.out, f"{args.name}.svg"))
        _emit({"violation_fraction": hist.violation_fraction,
               "total": hist.total, "attrition": hist.attrition,
               "paths": paths})
        return 0
    values = [float(v) for v in args.values]
    if not values:
        raise HarnessError(f"--values is required for mode {args.mode}")
    if args.mode == "noise":
        rows = harness.noise_sweep(cfg, values, workers=workers)
        xlabel = "depolarizing probability"
    else:
        rows = harness.depth_sweep(cfg, [int(v) for v in values], workers=workers)
        xlabel = "circuit depth"
    paths = {}
    for x, hist in rows:
        name = f"{args.name}_{args.mode}_{x:g}"
        paths[str(x)] = os.path.join(args.out, f"{name}.hist.csv")
        harness.save_histogram_csv(paths[str(x)], hist)
    if args.plot:
        paths["figure"] = plotting.plot_sweep(
            rows, os.path.join(args.out, f"{args.name}_{args.mode}.svg"),
            xlabel=xlabel, title=f"{cfg.family}, n={cfg.n_qubits}, {cfg.ensemble}")
    _emit({
        "sweep": [{"parameter": x, "violation_fraction": h.violation_fraction}
                  for x, h in rows],
        "paths": paths,
    })
    return 0


def cmd_measures(args) -> int:
    seed = int(os.environ.get("QRCBELL_SEED", args.seed))
    rows = []
    for i in range(args.instances):
        rng = harness._instance_rng(seed, i)
        depth = int(rng.integers(args.depth_min, args.depth_max + 1))
        c = random_circuit(args.ensemble, args.n_qubits, depth,
                           int(rng.integers(0, 2 ** 63)))
        rep = measure_report(simulate_pure(c))
        rows.append({
            "index": i, "depth": depth,
            "meyer_wallach_q": rep.meyer_wallach_q,
            "magic_m2": rep.magic_m2,
            "tangle3": rep.tangle3,
        })
    if args.out:
        with open(args.out, "w") as fh:
            for row in rows:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
    qs = [r["meyer_wallach_q"] for r in rows]
    ms = [r["magic_m2"] for r in rows]
    _emit({
        "instances": len(rows),
        "meyer_wallach_q_mean": float(np.mean(qs)),
        "magic_m2_mean": float(np.mean(ms)),
        "out": args.out,
    })
    return 0


def cmd_ghz(args) -> int:
    seed = int(os.environ.get("QRCBELL_SEED", args.seed))
    targets = [_target(t, max(args.n_values)) for t in args.targets]
    rows = harness.ghz_suite(
        args.n_values, family=args.family, shots=args.shots,
        repeats=args.repeats, seed=seed, targets=targets,
    )
    _emit({"rows": rows})
    return 0


def cmd_reps(args) -> int:
    cfg = _load_config(args.config)
    table = cfg.table()
    pairs = []
    settings_by_value = []
    with open(args.records) as fh:
        for line in fh:
            rec = json.loads(line)
            c = random_circuit(cfg.ensemble, cfg.n_qubits, rec["depth"],
                               rec["circuit_seed"])
            pairs.append((c, rec["value"]))
            settings_by_value.append((c.seed, rec["angles"]))
    angles_by_seed = {s: a for s, a in settings_by_value}
    reps = select_representatives(pairs, lo=args.lo, width=args.width,
                                  count=args.count)
    settings_by_bin = {
        b.index: MeasurementSettings(np.asarray(angles_by_seed[b.circuit.seed]))
        for b in reps.bins
    }
    target = _target(args.target, cfg.n_qubits)
    manifest = export_representatives(reps, settings_by_bin, table, target, args.out)
    _emit({
        "bins": [{"index": b["index"], "ideal_value": b["ideal_value"]}
                 for b in manifest["bins"]],
        "out": args.out,
    })
    return 0


def cmd_bench(args) -> int:
    with open(args.manifest) as fh:
        manifest = json.load(fh)
    if args.measured:
        with open(args.measured) as fh:
            measured = json.load(fh)
    else:
        measured = harness.simulate_device_measurements(
            manifest, p=args.simulate_p, shots=args.shots,
            repeats=args.repeats,
            seed=int(os.environ.get("QRCBELL_SEED", args.seed)),
        )
    report = harness.bench_protocol(manifest, measured,
                                    max_abs_delta=args.max_abs_delta)
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(report, fh, sort_keys=True, indent=2)
            fh.write("\n")
    if args.plot:
        from . import plotting
        plotting.plot_bench(report, args.plot)
    _emit({
        "pass": report["pass"],
        "max_abs_delta": report["max_abs_delta"],
        "metrics": report["metrics"],
        "missing_bins": report["missing_bins"],
        "out": args.out,
    })
    return 0


def cmd_plot(args) -> int:
    from . import plotting
    if args.kind == "hist":
        hist = harness.load_histogram_csv(args.input)
        plotting.plot_histogram(hist, args.out, title=args.title)
    elif args.kind == "bench":
        with open(args.input) as fh:
            plotting.plot_bench(json.load(fh), args.out, title=args.title)
    else:
        raise HarnessError(f"unknown plot kind {args.kind!r}")
    _emit({"out": args.out})
    return 0


# ---------------------------------------------------------------------------
# Parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qrcbell",
        description="Random-circuit Bell-violation distributions, measures, "
                    "transpilation, and device benchmarking.",
    )
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="emit random circuits as JSON/QASM")
    g.add_argument("--ensemble", default="clifford_t")
    g.add_argument("--n-qubits", type=int, default=3)
    g.add_argument("--depth", type=int, default=30)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--qasm", action="store_true")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("violate", help="optimize one state's violation")
    v.add_argument("--circuit", help="circuit JSON file (overrides generation)")
    v.add_argument("--ensemble", default="haar")
    v.add_argument("--n-qubits", type=int, default=3)
    v.add_argument("--depth", type=int, default=30)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--family", default="svetlichny_minus")
    v.add_argument("--noise", type=float, default=0.0)
    v.add_argument("--restarts", type=int, default=10)
    v.set_defaults(func=cmd_violate)

    s = sub.add_parser("sweep", help="distribution/noise/depth run from a config")
    s.add_argument("--config", required=True, help="JSON ExperimentConfig")
    s.add_argument("--mode", choices=("distribution", "noise", "depth"),
                   default="distribution")
    s.add_argument("--values", nargs="*", default=[],
                   help="swept parameter values (noise/depth modes)")
    s.add_argument("--out", required=True)
    s.add_argument("--name", default="run")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--plot", action="store_true")
    s.set_defaults(func=cmd_sweep)

    m = sub.add_parser("measures", help="entanglement/magic over an ensemble")
    m.add_argument("--ensemble", default="haar")
    m.add_argument("--n-qubits", type=int, default=3)
    m.add_argument("--instances", type=int, default=100)
    m.add_argument("--depth-min", type=int, default=10)
    m.add_argument("--depth-max", type=int, default=60)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out", help="JSONL output path")
    m.set_defaults(func=cmd_measures)

    z = sub.add_parser("ghz", help="GHZ violation suite")
    z.add_argument("--n-values", type=int, nargs="+", default=[2, 3, 4, 5])
    z.add_argument("--family", default="svetlichny_minus")
    z.add_argument("--shots", type=int, default=0)
    z.add_argument("--repeats", type=int, default=1)
    z.add_argument("--seed", type=int, default=0)
    z.add_argument("--targets", nargs="*", default=[],
                   choices=("IQM_like", "IonQ_like"))
    z.set_defaults(func=cmd_ghz)

    r = sub.add_parser("reps", help="select + export representative circuits")
    r.add_argument("--config", required=True)
    r.add_argument("--records", required=True, help="records JSONL from sweep")
    r.add_argument("--target", required=True, choices=("IQM_like", "IonQ_like"))
    r.add_argument("--lo", type=float, default=4.0)
    r.add_argument("--width", type=float, default=0.2)
    r.add_argument("--count", type=int, default=8)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_reps)

    b = sub.add_parser("bench", help="ideal-vs-measured protocol comparison")
    b.add_argument("--manifest", required=True)
    b.add_argument("--measured", help="JSON {bin index: [values]}; omitted = simulate")
    b.add_argument("--simulate-p", type=float, default=0.05)
    b.add_argument("--shots", type=int, default=0)
    b.add_argument("--repeats", type=int, default=1)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--max-abs-delta", type=float, default=0.5)
    b.add_argument("--out")
    b.add_argument("--plot", help="SVG output path")
    b.set_defaults(func=cmd_bench)

    pl = sub.add_parser("plot", help="render a saved CSV/JSON as SVG")
    pl.add_argument("--kind", choices=("hist", "bench"), default="hist")
    pl.add_argument("--input", required=True)
    pl.add_argument("--out", required=True)
    pl.add_argument("--title", default="")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except CONFIG_ERRORS as exc:
        log.error("configuration error: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        log.exception("runtime failure")
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
