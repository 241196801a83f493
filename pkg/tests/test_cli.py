import json
import os

import pytest

from qrcbell.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip().startswith("{") else out)


@pytest.fixture()
def cfg_path(tmp_path):
    cfg = {
        "family": "svetlichny_minus", "ensemble": "clifford_t",
        "n_qubits": 3, "instances": 48, "depth_min": 20, "depth_max": 40,
        "seed": 7, "compute_measures": False,
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_generate(tmp_path, capsys):
    out = str(tmp_path / "gen")
    code, data = run_cli(capsys, "generate", "--ensemble", "clifford_t",
                         "--count", "2", "--qasm", "--out", out)
    assert code == 0
    assert len(data["written"]) == 4
    for p in data["written"]:
        assert os.path.exists(p)


def test_violate(capsys):
    code, data = run_cli(capsys, "violate", "--ensemble", "haar",
                         "--n-qubits", "3", "--seed", "3")
    assert code == 0
    assert 0 <= data["value"] <= data["quantum_bound"] + 1e-6
    assert data["violated"] == (data["value"] > data["classical_bound"] + 1e-9)


def test_violate_from_file(tmp_path, capsys):
    out = str(tmp_path / "gen")
    _, gen = run_cli(capsys, "generate", "--ensemble", "clifford", "--n-qubits",
                     "2", "--depth", "10", "--out", out)
    code, data = run_cli(capsys, "violate", "--circuit", gen["written"][0],
                         "--family", "chsh")
    assert code == 0
    assert data["family"] == "chsh"


def test_sweep_distribution_and_plot(tmp_path, cfg_path, capsys):
    out = str(tmp_path / "run")
    code, data = run_cli(capsys, "sweep", "--config", cfg_path,
                         "--out", out, "--name", "demo", "--plot")
    assert code == 0
    assert data["total"] == 48
    for p in data["paths"].values():
        assert os.path.exists(p)
    assert data["paths"]["figure"].endswith(".svg")
    # re-plot from the saved CSV
    fig2 = str(tmp_path / "again.svg")
    code, _ = run_cli(capsys, "plot", "--kind", "hist",
                      "--input", data["paths"]["histogram"], "--out", fig2)
    assert code == 0 and os.path.exists(fig2)


def test_sweep_noise_mode(tmp_path, cfg_path, capsys):
    out = str(tmp_path / "run")
    code, data = run_cli(capsys, "sweep", "--config", cfg_path, "--mode",
                         "noise", "--values", "0", "0.2", "--out", out)
    assert code == 0
    fracs = [r["violation_fraction"] for r in data["sweep"]]
    assert fracs[0] >= fracs[1]


def test_measures(tmp_path, capsys):
    out = str(tmp_path / "m.jsonl")
    code, data = run_cli(capsys, "measures", "--ensemble", "haar",
                         "--n-qubits", "3", "--instances", "5", "--out", out)
    assert code == 0
    assert data["instances"] == 5
    assert len(open(out).read().splitlines()) == 5


def test_ghz(capsys):
    code, data = run_cli(capsys, "ghz", "--n-values", "2", "3",
                         "--family", "mermin")
    assert code == 0
    vals = [r["value"] for r in data["rows"]]
    assert vals[0] == pytest.approx(2 ** 0.5, abs=1e-6)
    assert vals[1] == pytest.approx(2.0, abs=1e-6)


def test_reps_and_bench(tmp_path, cfg_path, capsys):
    run_dir = str(tmp_path / "run")
    _, sweep = run_cli(capsys, "sweep", "--config", cfg_path,
                       "--out", run_dir, "--name", "d")
    reps_dir = str(tmp_path / "reps")
    code, reps = run_cli(capsys, "reps", "--config", cfg_path,
                         "--records", sweep["paths"]["records"],
                         "--target", "IQM_like", "--out", reps_dir)
    assert code == 0 and len(reps["bins"]) >= 1
    manifest = os.path.join(reps_dir, "manifest.json")
    assert os.path.exists(manifest)
    report = str(tmp_path / "report.json")
    fig = str(tmp_path / "bench.svg")
    code, bench = run_cli(capsys, "bench", "--manifest", manifest,
                          "--simulate-p", "0.05", "--out", report,
                          "--plot", fig)
    assert code == 0
    assert bench["metrics"]["fraction_delta"] <= 0
    assert os.path.exists(report) and os.path.exists(fig)


def test_seed_env_override(tmp_path, capsys, monkeypatch):
    out1 = str(tmp_path / "a")
    out2 = str(tmp_path / "b")
    _, a = run_cli(capsys, "generate", "--seed", "1", "--out", out1)
    monkeypatch.setenv("QRCBELL_SEED", "1")
    _, b = run_cli(capsys, "generate", "--seed", "999", "--out", out2)
    assert open(a["written"][0]).read() == open(b["written"][0]).read()


def test_workers_env_override(tmp_path, cfg_path, capsys, monkeypatch):
    out1 = str(tmp_path / "w1")
    _, a = run_cli(capsys, "sweep", "--config", cfg_path, "--out", out1,
                   "--name", "x", "--workers", "1")
    monkeypatch.setenv("QRCBELL_WORKERS", "2")
    out2 = str(tmp_path / "w2")
    _, b = run_cli(capsys, "sweep", "--config", cfg_path, "--out", out2,
                   "--name", "x")
    assert a["violation_fraction"] == b["violation_fraction"]
    s1 = json.load(open(a["paths"]["summary"]))
    s2 = json.load(open(b["paths"]["summary"]))
    assert s1 == s2


def test_exit_codes(tmp_path, capsys):
    assert main(["sweep", "--config", "/nonexistent.json", "--out", "x"]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"instances": -3}))
    assert main(["sweep", "--config", str(bad), "--out", str(tmp_path)]) == 1
    assert main(["--help"]) == 0
    assert main(["no-such-command"]) == 1
    capsys.readouterr()
