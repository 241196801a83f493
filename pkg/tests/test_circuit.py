import numpy as np
import pytest

from qrcbell.circuit import (
    Circuit,
    CircuitError,
    GateSpec,
    NoiseModel,
    circuit_digest,
    circuit_from_dict,
    circuit_to_dict,
    enumerate_stabilizer_states,
    gate_counts,
    gate_matrix,
    haar_unitary,
    ms_matrix,
    prx_matrix,
    random_circuit,
    random_depth,
    simulate_noisy,
    simulate_pure,
)
from qrcbell.qstate import to_density

ENSEMBLES = ("clifford", "clifford_t", "native_iqm", "native_ionq", "haar")
EDGES = ((0, 1), (0, 2), (1, 2))


def make(ens, n, depth, seed):
    conn = EDGES if ens.startswith("native") else None
    return random_circuit(ens, n, depth, seed, connectivity=conn)


def test_gate_matrices_unitary():
    rng = np.random.default_rng(3)
    specs = [
        GateSpec("h", (0,)), GateSpec("s", (0,)), GateSpec("t", (0,)),
        GateSpec("cnot", (0, 1)), GateSpec("cz", (0, 1)),
        GateSpec("prx", (0,), tuple(rng.uniform(0, np.pi, 2))),
        GateSpec("gpi", (0,), (rng.uniform(0, 2 * np.pi),)),
        GateSpec("gpi2", (0,), (rng.uniform(0, 2 * np.pi),)),
        GateSpec("ms", (0, 1), tuple(rng.uniform(0, 2 * np.pi, 2))),
        GateSpec("rz", (0,), (rng.uniform(-np.pi, np.pi),)),
    ]
    for g in specs:
        U = gate_matrix(g)
        assert np.allclose(U.conj().T @ U, np.eye(U.shape[0]), atol=1e-12), g.kind


def test_prx_special_cases():
    X = np.array([[0, 1], [1, 0]])
    Y = np.array([[0, -1j], [1j, 0]])
    assert np.allclose(prx_matrix(np.pi, 0.0), -1j * X)
    assert np.allclose(prx_matrix(np.pi, np.pi / 2), -1j * Y)


def test_ms_entangles():
    # MS(0,0) maps |00> to (|00> - i|11>)/sqrt(2)
    col = ms_matrix(0.0, 0.0)[:, 0]
    assert np.allclose(col, [1 / np.sqrt(2), 0, 0, -1j / np.sqrt(2)])


def test_haar_unitary_is_unitary_and_covariant():
    rng = np.random.default_rng(0)
    U = haar_unitary(8, rng)
    assert np.allclose(U.conj().T @ U, np.eye(8), atol=1e-12)
    # first-moment check: mean of |U_00|^2 over draws ~ 1/dim
    vals = [abs(haar_unitary(4, rng)[0, 0]) ** 2 for _ in range(2000)]
    assert np.mean(vals) == pytest.approx(0.25, abs=0.02)


def test_random_circuit_determinism():
    for ens in ENSEMBLES:
        a = make(ens, 3, 7, seed=42)
        b = make(ens, 3, 7, seed=42)
        assert a == b
        c = make(ens, 3, 7, seed=43)
        assert a != c


def test_random_circuit_gate_closure():
    allowed = {
        "clifford": {"h", "s", "cnot"},
        "clifford_t": {"h", "s", "t", "cnot"},
        "native_iqm": {"prx", "cz"},
        "native_ionq": {"gpi", "gpi2", "ms"},
        "haar": {"unitary"},
    }
    for ens, kinds in allowed.items():
        c = make(ens, 3, 20, seed=1)
        assert {g.kind for g in c.gates} <= kinds, ens


def test_random_circuit_layers_disjoint():
    # within a layer every qubit is touched at most once; over the whole
    # circuit the per-layer structure shows as depth metadata
    c = random_circuit("clifford_t", 4, 15, seed=5)
    assert c.depth == 15
    assert all(max(g.targets) < 4 for g in c.gates)


def test_random_depth_range():
    rng = np.random.default_rng(8)
    draws = [random_depth(rng, 10, 60) for _ in range(500)]
    assert min(draws) >= 10 and max(draws) <= 60
    assert len(set(draws)) > 30  # actually spread over the range


def test_simulate_pure_ghz():
    gates = (GateSpec("h", (0,)), GateSpec("cnot", (0, 1)), GateSpec("cnot", (1, 2)))
    psi = simulate_pure(Circuit(3, gates))
    expect = np.zeros(8)
    expect[0] = expect[7] = 1 / np.sqrt(2)
    assert np.allclose(psi.amps, expect)


def test_simulate_noisy_matches_pure_at_p0():
    c = random_circuit("clifford_t", 3, 10, seed=2)
    psi = simulate_pure(c)
    rho = simulate_noisy(c, NoiseModel(0.0, 0.0))
    assert np.allclose(rho.mat, to_density(psi).mat, atol=1e-12)


def test_simulate_noisy_full_depolarization():
    c = random_circuit("clifford", 2, 5, seed=3)
    rho = simulate_noisy(c, NoiseModel(1.0, 1.0))
    assert np.allclose(rho.mat, np.eye(4) / 4, atol=1e-12)
    rho.validate_positive()


def test_gate_counts():
    gates = (GateSpec("h", (0,)), GateSpec("h", (1,)), GateSpec("cnot", (0, 1)))
    counts = gate_counts(Circuit(2, gates))
    assert counts["total"] == 3
    assert counts["two_qubit"] == 1
    assert counts["per_kind"]["h"] == 2


def test_stabilizer_state_counts():
    assert len(enumerate_stabilizer_states(1)) == 6
    assert len(enumerate_stabilizer_states(2)) == 60
    with pytest.raises(CircuitError):
        enumerate_stabilizer_states(4)


def test_serialization_round_trip():
    for ens in ("clifford_t", "native_ionq"):
        c = make(ens, 3, 8, seed=7)
        c2 = circuit_from_dict(circuit_to_dict(c))
        assert c2 == c


def test_digest_stability_and_sensitivity():
    a = circuit_digest(random_circuit("haar", 3, 6, seed=1))
    b = circuit_digest(random_circuit("haar", 3, 6, seed=1))
    c = circuit_digest(random_circuit("haar", 3, 6, seed=2))
    assert a == b
    assert a != c


def test_invalid_circuits_rejected():
    with pytest.raises(CircuitError):
        Circuit(2, (GateSpec("h", (2,)),))  # target out of range
    with pytest.raises(CircuitError):
        random_circuit("clifford", 2, 0, seed=0)  # zero depth
    with pytest.raises(CircuitError):
        random_circuit("no_such_ensemble", 2, 5, seed=0)
