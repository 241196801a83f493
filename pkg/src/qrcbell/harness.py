"""Experiment orchestration and persistence.

Runs batches of (generate circuit, simulate, optimize angles, quantify)
instances, aggregates them into violation histograms and fraction tables,
and provides the device-benchmarking building blocks: shot-limited
correlator sampling, histogram comparison, and the manifest-driven
ideal-vs-measured protocol.

Reproducibility contract: instance i derives its randomness from
SeedSequence(master_seed, spawn_key=(i,)), instances are processed in
fixed-size chunks, and aggregation is in index order, so outputs are
byte-identical for any worker count.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .circuit import (
    Circuit,
    GateSpec,
    NoiseModel,
    circuit_digest,
    circuit_from_dict,
    gate_counts,
    random_circuit,
    simulate_noisy,
    simulate_pure,
)
from .inequality import (
    CoefficientTable,
    FAMILIES,
    MeasurementSettings,
    chsh_table,
    mermin_table,
    svetlichny_table,
)
from .measures import MAX_MAGIC_QUBITS, measure_report
from .optimize import (
    OptimizerConfig,
    correlation_tensors_mixed,
    correlation_tensors_pure,
    random_directions,
    seesaw_batch,
)
from .qstate import DensityMatrix, StateVector, apply_unitary
from .transpile import basis_rotation

log = logging.getLogger(__name__)

VIOLATION_EPS = 1e-9
BOUND_SLACK = 1e-6
CHUNK_SIZE = 256  # fixed regardless of worker count


class HarnessError(ValueError):
    """Raised for invalid experiment configuration or mismatched data."""


@dataclass(frozen=True)
class ExperimentConfig:
    family: str = "svetlichny_minus"
    ensemble: str = "haar"
    n_qubits: int = 3
    instances: int = 1000
    depth_min: int = 10
    depth_max: int = 60
    p1: float = 0.0
    p2: float = 0.0
    restarts: int = 10
    max_iterations: int = 200
    tolerance: float = 1e-8
    shots: int = 0
    seed: int = 0
    bin_fraction: float = 0.05
    compute_measures: bool = True

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise HarnessError(f"unknown inequality family {self.family!r}")
        if self.instances < 1:
            raise HarnessError("instances must be >= 1")
        if self.shots < 0:
            raise HarnessError("shots must be >= 0")
        if not 1 <= self.depth_min <= self.depth_max:
            raise HarnessError("need 1 <= depth_min <= depth_max")
        if not 0.0 < self.bin_fraction <= 1.0:
            raise HarnessError("bin_fraction must be in (0, 1]")

    def table(self) -> CoefficientTable:
        if self.family == "chsh":
            return chsh_table()
        if self.family == "mermin":
            return mermin_table(self.n_qubits)
        sign = "plus" if self.family.endswith("plus") else "minus"
        return svetlichny_table(self.n_qubits, sign)

    def noise(self) -> NoiseModel:
        return NoiseModel(self.p1, self.p2)

    def optimizer(self) -> OptimizerConfig:
        return OptimizerConfig(
            restarts=self.restarts,
            max_iterations=self.max_iterations,
            tolerance=self.tolerance,
            seed=self.seed,
        )

    def to_dict(self) -> dict:
        return {
            "family": self.family, "ensemble": self.ensemble,
            "n_qubits": self.n_qubits, "instances": self.instances,
            "depth_min": self.depth_min, "depth_max": self.depth_max,
            "p1": self.p1, "p2": self.p2,
            "restarts": self.restarts, "max_iterations": self.max_iterations,
            "tolerance": self.tolerance, "shots": self.shots,
            "seed": self.seed, "bin_fraction": self.bin_fraction,
            "compute_measures": self.compute_measures,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        unknown = set(d) - set(cls().to_dict())
        if unknown:
            raise HarnessError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class Histogram:
    edges: tuple
    counts: tuple
    total: int
    classical_bound: float
    quantum_bound: float
    violation_fraction: float
    attrition: int = 0

    @classmethod
    def from_values(
        cls, values, classical_bound: float, quantum_bound: float,
        bin_fraction: float = 0.05, attrition: int = 0,
    ) -> "Histogram":
        values = np.asarray(values, dtype=float)
        if values.size and values.max() > quantum_bound + BOUND_SLACK:
            raise HarnessError(
                f"value {values.max()} exceeds quantum bound {quantum_bound}"
            )
        if values.size and values.min() < -BOUND_SLACK:
            raise HarnessError(f"negative violation value {values.min()}")
        width = bin_fraction * quantum_bound
        n_bins = int(np.ceil(quantum_bound / width - 1e-12))
        edges = np.arange(n_bins + 1) * width
        counts, _ = np.histogram(np.clip(values, 0.0, quantum_bound), bins=edges)
        frac = float(np.mean(values > classical_bound + VIOLATION_EPS)) if values.size else 0.0
        return cls(
            edges=tuple(float(e) for e in edges),
            counts=tuple(int(c) for c in counts),
            total=int(values.size),
            classical_bound=float(classical_bound),
            quantum_bound=float(quantum_bound),
            violation_fraction=frac,
            attrition=int(attrition),
        )

    def to_dict(self) -> dict:
        return {
            "edges": list(self.edges), "counts": list(self.counts),
            "total": self.total, "classical_bound": self.classical_bound,
            "quantum_bound": self.quantum_bound,
            "violation_fraction": self.violation_fraction,
            "attrition": self.attrition,
        }


@dataclass(frozen=True)
class RunRecord:
    index: int
    circuit_seed: int
    digest: str
    depth: int
    value: float
    violated: bool
    angles: tuple  # (N, 2, 2) nested tuples: party, setting, (theta, phi)
    gate_counts: dict
    measures: dict | None = None
    sampled_value: float | None = None

    def to_dict(self) -> dict:
        return {
            "index": self.index, "circuit_seed": self.circuit_seed,
            "digest": self.digest, "depth": self.depth,
            "value": self.value, "violated": self.violated,
            "angles": [[list(s) for s in party] for party in self.angles],
            "gate_counts": self.gate_counts, "measures": self.measures,
            "sampled_value": self.sampled_value,
        }


# ---------------------------------------------------------------------------
# Distribution runs

def _instance_rng(master_seed: int, index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return np.random.Generator(np.random.PCG64(ss))


def _run_chunk(cfg: ExperimentConfig, start: int, stop: int):
    """Process instances [start, stop); returns (records, errors)."""
    table = cfg.table()
    noise = cfg.noise()
    n = cfg.n_qubits
    prepared = []
    errors = []
    for i in range(start, stop):
        rng = _instance_rng(cfg.seed, i)
        depth = int(rng.integers(cfg.depth_min, cfg.depth_max + 1))
        circuit_seed = int(rng.integers(0, 2 ** 63))
        init = random_directions(rng, (cfg.restarts, n, 2))
        try:
            c = random_circuit(cfg.ensemble, n, depth, circuit_seed)
            if noise.is_noisy:
                state = simulate_noisy(c, noise)
            else:
                state = simulate_pure(c)
        except Exception as exc:  # per-instance attrition, not fatal
            log.warning("instance %d failed: %s", i, exc)
            errors.append({"index": i, "error": str(exc)})
            continue
        prepared.append((i, rng, c, state, init))
    records = []
    if prepared:
        states = [item[3] for item in prepared]
        if noise.is_noisy:
            R = correlation_tensors_mixed(np.stack([s.mat for s in states]), n)
        else:
            R = correlation_tensors_pure(np.stack([s.amps for s in states]), n)
        inits = np.stack([item[4] for item in prepared])
        values, dirs, _, _ = seesaw_batch(R, table, cfg.optimizer(), inits)
        for row, (i, rng, c, state, _) in enumerate(prepared):
            settings = MeasurementSettings.from_directions(dirs[row])
            measures = None
            if (
                cfg.compute_measures
                and not noise.is_noisy
                and n >= 2
                and n <= MAX_MAGIC_QUBITS
            ):
                rep = measure_report(state)
                measures = {
                    "meyer_wallach_q": rep.meyer_wallach_q,
                    "magic_m2": rep.magic_m2,
                }
                if rep.tangle3 is not None:
                    measures["tangle3"] = rep.tangle3
            sampled = None
            if cfg.shots > 0:
                sampled = estimate_bell_value(state, table, settings, cfg.shots, rng)
            records.append(RunRecord(
                index=i,
                circuit_seed=c.seed,
                digest=circuit_digest(c),
                depth=c.depth,
                value=float(values[row]),
                violated=bool(values[row] > table.classical_bound + VIOLATION_EPS),
                angles=tuple(
                    tuple(tuple(float(x) for x in s) for s in party)
                    for party in settings.angles
                ),
                gate_counts=gate_counts(c),
                measures=measures,
                sampled_value=sampled,
            ))
    return records, errors


def run_distribution(cfg: ExperimentConfig, workers: int = 1):
    """Run all instances of a config; returns (Histogram, [RunRecord])."""
    spans = [
        (lo, min(lo + CHUNK_SIZE, cfg.instances))
        for lo in range(0, cfg.instances, CHUNK_SIZE)
    ]
    if workers <= 1 or len(spans) == 1:
        chunks = [_run_chunk(cfg, lo, hi) for lo, hi in spans]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(
                _run_chunk, [cfg] * len(spans),
                [s[0] for s in spans], [s[1] for s in spans],
            ))
    records = [r for recs, _ in chunks for r in recs]
    errors = [e for _, errs in chunks for e in errs]
    records.sort(key=lambda r: r.index)
    table = cfg.table()
    hist = Histogram.from_values(
        [r.value for r in records],
        table.classical_bound, table.quantum_bound,
        bin_fraction=cfg.bin_fraction, attrition=len(errors),
    )
    return hist, records


def violation_fraction_table(cfgs, workers: int = 1) -> list:
    """Fraction grid over configs, with binomial standard errors."""
    rows = []
    for cfg in cfgs:
        hist, _ = run_distribution(cfg, workers=workers)
        f = hist.violation_fraction
        stderr = float(np.sqrt(f * (1.0 - f) / hist.total)) if hist.total else 0.0
        rows.append({
            "ensemble": cfg.ensemble, "family": cfg.family,
            "n_qubits": cfg.n_qubits, "instances": hist.total,
            "violation_fraction": f, "stderr": stderr,
        })
    return rows


def noise_sweep(cfg: ExperimentConfig, p_values, workers: int = 1) -> list:
    """One distribution run per depolarizing level (p1 = p2 = p)."""
    if not len(p_values):
        raise HarnessError("p_values must be non-empty")
    return [
        (float(p), run_distribution(replace(cfg, p1=float(p), p2=float(p)), workers)[0])
        for p in p_values
    ]


def depth_sweep(cfg: ExperimentConfig, depths, workers: int = 1) -> list:
    """One distribution run per fixed circuit depth."""
    if not len(depths):
        raise HarnessError("depths must be non-empty")
    return [
        (int(d), run_distribution(
            replace(cfg, depth_min=int(d), depth_max=int(d)), workers)[0])
        for d in depths
    ]


# ---------------------------------------------------------------------------
# GHZ suite and shot sampling

def ghz_circuit(n: int) -> Circuit:
    if n < 2:
        raise HarnessError("GHZ needs at least 2 qubits")
    gates = [GateSpec("h", (0,))]
    gates += [GateSpec("cnot", (q, q + 1)) for q in range(n - 1)]
    return Circuit(n, tuple(gates), ensemble="custom")


def ghz_state(n: int) -> StateVector:
    return simulate_pure(ghz_circuit(n))


def sample_correlator(state, directions, shots: int, rng: np.random.Generator) -> float:
    """Shot-limited estimate of <prod_i sigma.n_i> for one direction per qubit.

    Each qubit is rotated so its observable becomes Z, outcomes are sampled
    from the exact computational-basis distribution, and the mean of the
    +/-1 products is returned (unbiased).
    """
    if shots < 1:
        raise HarnessError("shots must be >= 1")
    directions = np.asarray(directions, dtype=float)
    n = directions.shape[0]
    rotations = []
    for i in range(n):
        x, y, z = directions[i]
        theta = np.arccos(np.clip(z, -1.0, 1.0))
        phi = np.arctan2(y, x)
        rotations.append(basis_rotation(theta, phi))
    if isinstance(state, StateVector):
        psi = state
        for i, Rm in enumerate(rotations):
            psi = apply_unitary(psi, Rm, (i,))
        probs = np.abs(psi.amps) ** 2
    elif isinstance(state, DensityMatrix):
        t = state.mat
        for i, Rm in enumerate(rotations):
            full = np.array([[1.0]])
            for j in range(n):
                full = np.kron(full, Rm if j == i else np.eye(2))
            t = full @ t @ full.conj().T
        probs = np.real(np.diag(t))
    else:
        raise HarnessError(f"unsupported state type {type(state)!r}")
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum()
    counts = rng.multinomial(shots, probs)
    parity = np.array([
        1.0 if bin(b).count("1") % 2 == 0 else -1.0 for b in range(2 ** n)
    ])
    return float(counts @ parity / shots)


def estimate_bell_value(
    state, table: CoefficientTable, settings: MeasurementSettings,
    shots: int, rng: np.random.Generator,
) -> float:
    """Shot-limited estimate of |<O>| at the given settings."""
    dirs = settings.directions()
    total = 0.0
    idx = np.arange(table.n_parties)
    for s, coeff in sorted(table.coeffs.items()):
        total += coeff * sample_correlator(state, dirs[idx, list(s)], shots, rng)
    return abs(total)


def _table_for(family: str, n: int) -> CoefficientTable:
    if family == "chsh":
        return chsh_table()
    if family == "mermin":
        return mermin_table(n)
    if family in FAMILIES:
        return svetlichny_table(n, "plus" if family.endswith("plus") else "minus")
    raise HarnessError(f"unknown inequality family {family!r}")


def ghz_suite(
    n_values, family: str = "svetlichny_minus", shots: int = 0,
    repeats: int = 1, seed: int = 0, targets=(),
) -> list:
    """Optimal violation of GHZ_N, optionally re-estimated per native target
    and/or with shot noise."""
    from .optimize import seesaw_maximize
    from .transpile import decompose

    rows = []
    for n in n_values:
        if not 2 <= n <= 8:
            raise HarnessError("GHZ suite supports 2 <= N <= 8")
        table = _table_for(family, n)
        circuit = ghz_circuit(n)
        psi = simulate_pure(circuit)
        res = seesaw_maximize(psi, table, OptimizerConfig(seed=seed))
        row = {
            "n_qubits": n, "family": table.family,
            "value": res.value,
            "classical_bound": table.classical_bound,
            "quantum_bound": table.quantum_bound,
            "shots": shots,
        }
        if shots > 0:
            rng = _instance_rng(seed, n)
            row["shot_estimates"] = [
                estimate_bell_value(psi, table, res.settings, shots, rng)
                for _ in range(repeats)
            ]
        for target in targets:
            native = simulate_pure(decompose(circuit, target))
            if shots > 0:
                rng = _instance_rng(seed, n)
                val = float(np.mean([
                    estimate_bell_value(native, table, res.settings, shots, rng)
                    for _ in range(repeats)
                ]))
            else:
                from .inequality import evaluate
                from .qstate import to_density
                val = evaluate(to_density(native), table, res.settings)
            row[f"value_{target.name}"] = val
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# Histogram comparison and the benchmarking protocol

def compare_histograms(h_ideal: Histogram, h_measured: Histogram) -> dict:
    if h_ideal.edges != h_measured.edges:
        raise HarnessError("histograms use different binnings")
    p = np.asarray(h_ideal.counts, dtype=float)
    q = np.asarray(h_measured.counts, dtype=float)
    p = p / p.sum() if p.sum() else p
    q = q / q.sum() if q.sum() else q
    return {
        "ks_distance": float(np.max(np.abs(np.cumsum(p) - np.cumsum(q)))),
        "total_variation": float(0.5 * np.sum(np.abs(p - q))),
        "fraction_delta": h_measured.violation_fraction - h_ideal.violation_fraction,
    }


def bench_protocol(manifest: dict, measured: dict, max_abs_delta: float = 0.5) -> dict:
    """Join per-bin measured values to the manifest's ideal values.

    `measured` maps bin index to a list of measured violation values
    (repetitions allowed).  Reports per-bin deltas and spread, aggregate
    histogram metrics, and a pass/fail against the delta threshold.
    """
    if "bins" not in manifest:
        raise HarnessError("manifest has no 'bins' entry")
    measured = {int(k): list(np.atleast_1d(v)) for k, v in measured.items()}
    bins = []
    missing = []
    ideal_vals = []
    measured_means = []
    for b in manifest["bins"]:
        idx = int(b["index"])
        ideal = float(b["ideal_value"])
        if idx not in measured or not measured[idx]:
            missing.append(idx)
            log.warning("bin %d missing from measured data; excluded", idx)
            continue
        vals = [float(v) for v in measured[idx]]
        mean = float(np.mean(vals))
        bins.append({
            "index": idx, "lo": float(b["lo"]), "hi": float(b["hi"]),
            "ideal_value": ideal, "measured_mean": mean,
            "measured_std": float(np.std(vals)), "repetitions": len(vals),
            "delta": mean - ideal,
        })
        ideal_vals.append(ideal)
        measured_means.append(mean)
    if not bins:
        raise HarnessError("no overlapping bins between manifest and measurements")
    cb = float(manifest.get("classical_bound", 0.0))
    qb = float(manifest.get("quantum_bound", max(ideal_vals + measured_means)))
    h_ideal = Histogram.from_values(ideal_vals, cb, qb)
    h_meas = Histogram.from_values(np.clip(measured_means, 0.0, qb), cb, qb)
    deltas = [b["delta"] for b in bins]
    return {
        "bins": bins,
        "missing_bins": missing,
        "metrics": compare_histograms(h_ideal, h_meas),
        "max_abs_delta": float(np.max(np.abs(deltas))),
        "mean_delta": float(np.mean(deltas)),
        "pass": bool(np.max(np.abs(deltas)) <= max_abs_delta),
    }


def simulate_device_measurements(
    manifest: dict, p: float = 0.05, shots: int = 0,
    repeats: int = 1, seed: int = 0,
) -> dict:
    """Stand-in for a hardware run: re-evaluate each manifest bin under
    depolarizing noise (and optional shot sampling)."""
    noise = NoiseModel(p, p)
    out = {}
    for b in manifest["bins"]:
        c = circuit_from_dict(b["circuit"])
        settings = MeasurementSettings(np.asarray(b["angles"], dtype=float))
        table = _table_from_manifest(manifest)
        rho = simulate_noisy(c, noise)
        vals = []
        rng = _instance_rng(seed, int(b["index"]))
        for _ in range(repeats):
            if shots > 0:
                vals.append(estimate_bell_value(rho, table, settings, shots, rng))
            else:
                from .inequality import evaluate
                vals.append(evaluate(rho, table, settings))
        out[int(b["index"])] = vals
    return out


def _table_from_manifest(manifest: dict) -> CoefficientTable:
    family = manifest["family"]
    n = int(manifest["n_parties"])
    if family == "chsh":
        return chsh_table()
    if family == "mermin":
        return mermin_table(n)
    return svetlichny_table(n, "plus" if family.endswith("plus") else "minus")


# ---------------------------------------------------------------------------
# Persistence

def save_records_jsonl(path: str, records) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")


def save_histogram_csv(path: str, hist: Histogram) -> None:
    lines = [
        f"# classical_bound={hist.classical_bound!r}",
        f"# quantum_bound={hist.quantum_bound!r}",
        f"# total={hist.total}",
        f"# violation_fraction={hist.violation_fraction!r}",
        f"# attrition={hist.attrition}",
        "bin_lo,bin_hi,count",
    ]
    for lo, hi, c in zip(hist.edges[:-1], hist.edges[1:], hist.counts):
        lines.append(f"{lo!r},{hi!r},{c}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_histogram_csv(path: str) -> Histogram:
    meta = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = float(val)
            elif not line.startswith("bin_lo"):
                lo, hi, count = line.split(",")
                rows.append((float(lo), float(hi), int(count)))
    if not rows:
        raise HarnessError(f"no histogram rows in {path}")
    edges = tuple(r[0] for r in rows) + (rows[-1][1],)
    return Histogram(
        edges=edges,
        counts=tuple(r[2] for r in rows),
        total=int(meta.get("total", sum(r[2] for r in rows))),
        classical_bound=meta.get("classical_bound", 0.0),
        quantum_bound=meta.get("quantum_bound", edges[-1]),
        violation_fraction=meta.get("violation_fraction", 0.0),
        attrition=int(meta.get("attrition", 0)),
    )


def summary_dict(cfg: ExperimentConfig, hist: Histogram) -> dict:
    return {"config": cfg.to_dict(), "histogram": hist.to_dict()}


def save_summary(path: str, cfg: ExperimentConfig, hist: Histogram) -> None:
    with open(path, "w") as fh:
        json.dump(summary_dict(cfg, hist), fh, sort_keys=True, indent=2)
        fh.write("\n")


def save_run_outputs(out_dir: str, name: str, cfg: ExperimentConfig,
                     hist: Histogram, records) -> dict:
    """Write records JSONL + summary JSON + histogram CSV; returns paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "records": os.path.join(out_dir, f"{name}.records.jsonl"),
        "summary": os.path.join(out_dir, f"{name}.summary.json"),
        "histogram": os.path.join(out_dir, f"{name}.hist.csv"),
    }
    save_records_jsonl(paths["records"], records)
    save_summary(paths["summary"], cfg, hist)
    save_histogram_csv(paths["histogram"], hist)
    return paths
