import json

import numpy as np
import pytest

from qrcbell.circuit import random_circuit
from qrcbell.harness import (
    ExperimentConfig,
    HarnessError,
    Histogram,
    bench_protocol,
    compare_histograms,
    depth_sweep,
    ghz_circuit,
    ghz_state,
    ghz_suite,
    load_histogram_csv,
    noise_sweep,
    run_distribution,
    sample_correlator,
    save_run_outputs,
    simulate_device_measurements,
    summary_dict,
    violation_fraction_table,
)
from qrcbell.inequality import MeasurementSettings
from qrcbell.transpile import export_representatives, iqm_like, select_representatives

SMALL = dict(instances=64, compute_measures=False, seed=5)


def small_cfg(**kw):
    base = dict(SMALL)
    base.update(kw)
    return ExperimentConfig(**base)


def test_config_validation():
    with pytest.raises(HarnessError):
        ExperimentConfig(instances=0)
    with pytest.raises(HarnessError):
        ExperimentConfig(family="nope")
    with pytest.raises(HarnessError):
        ExperimentConfig(depth_min=5, depth_max=2)
    with pytest.raises(HarnessError):
        ExperimentConfig.from_dict({"bogus_key": 1})


def test_config_round_trip():
    cfg = small_cfg(family="mermin", p1=0.01)
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


def test_histogram_binning():
    h = Histogram.from_values([0.1, 1.2, 5.6], 4.0, 4 * np.sqrt(2))
    assert len(h.counts) == 20
    assert sum(h.counts) == 3
    assert h.violation_fraction == pytest.approx(1 / 3)
    with pytest.raises(HarnessError):
        Histogram.from_values([7.0], 4.0, 4 * np.sqrt(2))  # above quantum bound


def test_run_distribution_basic():
    hist, records = run_distribution(small_cfg())
    assert hist.total == 64 and hist.attrition == 0
    assert [r.index for r in records] == list(range(64))
    for r in records[:5]:
        assert 0.0 <= r.value <= hist.quantum_bound + 1e-6
        assert r.violated == (r.value > hist.classical_bound + 1e-9)
        assert np.asarray(r.angles).shape == (3, 2, 2)


def test_run_distribution_worker_independence():
    cfg = small_cfg(instances=70)
    h1, r1 = run_distribution(cfg, workers=1)
    h2, r2 = run_distribution(cfg, workers=3)
    assert summary_dict(cfg, h1) == summary_dict(cfg, h2)
    assert [a.to_dict() for a in r1] == [b.to_dict() for b in r2]


def test_run_distribution_measures_attached():
    _, records = run_distribution(small_cfg(instances=4, compute_measures=True))
    for r in records:
        assert set(r.measures) == {"meyer_wallach_q", "magic_m2", "tangle3"}


def test_noisy_distribution_lowers_values():
    clean, _ = run_distribution(small_cfg())
    noisy, _ = run_distribution(small_cfg(p1=0.05, p2=0.05))
    assert noisy.violation_fraction < clean.violation_fraction


def test_violation_fraction_table_shape():
    rows = violation_fraction_table([small_cfg(instances=32)])
    assert rows[0]["instances"] == 32
    assert 0.0 <= rows[0]["violation_fraction"] <= 1.0
    assert rows[0]["stderr"] >= 0.0


def test_sweeps():
    rows = noise_sweep(small_cfg(instances=32), [0.0, 0.2])
    assert rows[0][1].violation_fraction >= rows[1][1].violation_fraction
    rows = depth_sweep(small_cfg(instances=16), [5, 20])
    assert [d for d, _ in rows] == [5, 20]
    with pytest.raises(HarnessError):
        noise_sweep(small_cfg(), [])


def test_ghz_suite_bounds():
    rows = ghz_suite([3, 4], family="svetlichny_minus")
    for row in rows:
        assert row["value"] == pytest.approx(row["quantum_bound"], abs=1e-6)
    rows = ghz_suite([2], family="mermin")
    assert rows[0]["value"] == pytest.approx(np.sqrt(2), abs=1e-6)
    with pytest.raises(HarnessError):
        ghz_suite([1])


def test_ghz_suite_with_target_and_shots():
    rows = ghz_suite([3], shots=800, repeats=3, seed=2, targets=[iqm_like(3)])
    row = rows[0]
    assert len(row["shot_estimates"]) == 3
    # transpiled circuit reproduces the ideal value up to shot noise
    assert row["value_IQM_like"] == pytest.approx(row["value"], abs=0.6)


def test_sample_correlator_deterministic_outcome():
    # Bell state <ZZ> has zero variance: every shot gives +1
    psi = ghz_state(2)
    rng = np.random.default_rng(0)
    val = sample_correlator(psi, [[0, 0, 1], [0, 0, 1]], 1000, rng)
    assert val == 1.0


def test_sample_correlator_unbiased():
    psi = ghz_state(3)
    rng = np.random.default_rng(1)
    # <XXX> = 1 exactly; large-shot estimate of a noisy direction converges
    n = np.array([1.0, 1.0, 0.0]) / np.sqrt(2)
    exact = 0.0  # <(X+Y)/sqrt2 Z Z> on GHZ_3 vanishes
    est = sample_correlator(psi, [n, [0, 0, 1], [0, 0, 1]], 10 ** 6, rng)
    assert est == pytest.approx(exact, abs=0.005)
    with pytest.raises(HarnessError):
        sample_correlator(psi, [[0, 0, 1]] * 3, 0, rng)


def test_compare_histograms():
    h = Histogram.from_values([1.0, 4.5], 4.0, 4 * np.sqrt(2))
    same = compare_histograms(h, h)
    assert same == {"ks_distance": 0.0, "total_variation": 0.0,
                    "fraction_delta": 0.0}
    other = Histogram.from_values([0.1, 0.2], 4.0, 4 * np.sqrt(2))
    far = compare_histograms(h, other)
    assert far["total_variation"] == pytest.approx(1.0)
    with pytest.raises(HarnessError):
        compare_histograms(h, Histogram.from_values([0.5], 1.0, np.sqrt(2)))


def test_persistence_round_trip(tmp_path):
    cfg = small_cfg(instances=16)
    hist, records = run_distribution(cfg)
    paths = save_run_outputs(str(tmp_path), "t", cfg, hist, records)
    again = load_histogram_csv(paths["histogram"])
    assert again.counts == hist.counts
    assert again.violation_fraction == pytest.approx(hist.violation_fraction)
    lines = open(paths["records"]).read().splitlines()
    assert len(lines) == 16
    assert json.loads(lines[0])["index"] == 0
    summary = json.load(open(paths["summary"]))
    assert summary == summary_dict(cfg, hist)


@pytest.fixture(scope="module")
def bench_setup(tmp_path_factory):
    cfg = ExperimentConfig(
        family="svetlichny_minus", ensemble="clifford_t", n_qubits=3,
        instances=160, depth_min=20, depth_max=40, seed=8,
        compute_measures=False,
    )
    _, records = run_distribution(cfg)
    pairs = [
        (random_circuit(cfg.ensemble, cfg.n_qubits, r.depth, r.circuit_seed),
         r.value)
        for r in records
    ]
    reps = select_representatives(pairs)
    angles = {c.seed: r.angles for (c, _), r in zip(pairs, records)}
    settings = {
        b.index: MeasurementSettings(np.asarray(angles[b.circuit.seed]))
        for b in reps.bins
    }
    out = str(tmp_path_factory.mktemp("reps"))
    manifest = export_representatives(reps, settings, cfg.table(), iqm_like(3), out)
    return manifest


def test_bench_protocol_ideal_is_exact(bench_setup):
    manifest = bench_setup
    measured = {b["index"]: [b["ideal_value"]] for b in manifest["bins"]}
    report = bench_protocol(manifest, measured)
    assert report["pass"]
    assert report["max_abs_delta"] == pytest.approx(0.0, abs=1e-12)
    assert report["metrics"]["ks_distance"] == 0.0


def test_bench_protocol_noisy_device_negative_deltas(bench_setup):
    manifest = bench_setup
    measured = simulate_device_measurements(manifest, p=0.05, seed=3)
    report = bench_protocol(manifest, measured)
    assert all(b["delta"] < 0 for b in report["bins"])
    assert report["metrics"]["ks_distance"] > 0


def test_bench_protocol_missing_bin_excluded(bench_setup):
    manifest = bench_setup
    measured = {b["index"]: [b["ideal_value"]] for b in manifest["bins"][1:]}
    report = bench_protocol(manifest, measured)
    assert report["missing_bins"] == [manifest["bins"][0]["index"]]
    assert report["pass"]
    with pytest.raises(HarnessError):
        bench_protocol(manifest, {})
    with pytest.raises(HarnessError):
        bench_protocol({"nope": 1}, measured)
