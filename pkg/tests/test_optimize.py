import numpy as np
import pytest

from qrcbell.circuit import haar_unitary, random_circuit, simulate_pure
from qrcbell.inequality import chsh_table, mermin_table, svetlichny_table
from qrcbell.optimize import (
    OptimizeError,
    OptimizerConfig,
    chsh_horodecki,
    correlation_tensor,
    correlation_tensors_pure,
    grid_oracle,
    random_directions,
    seesaw_batch,
    seesaw_maximize,
)
from qrcbell.qstate import StateVector, partial_trace, to_density


def haar_state(n, seed):
    rng = np.random.default_rng(seed)
    U = haar_unitary(2 ** n, rng)
    return StateVector.from_amplitudes(U[:, 0])


def bell_state():
    return StateVector.from_amplitudes([1, 0, 0, 1])


def ghz(n):
    amps = np.zeros(2 ** n)
    amps[0] = amps[-1] = 1
    return StateVector.from_amplitudes(amps)


def test_correlation_tensor_bell():
    R = correlation_tensor(bell_state())
    # Phi+ has <XX> = 1, <YY> = -1, <ZZ> = 1, zero cross terms
    assert R[0, 0] == pytest.approx(1.0)
    assert R[1, 1] == pytest.approx(-1.0)
    assert R[2, 2] == pytest.approx(1.0)
    assert abs(R - np.diag(np.diag(R))).max() < 1e-12


def test_correlation_tensor_pure_vs_mixed():
    psi = haar_state(3, 4)
    a = correlation_tensor(psi)
    b = correlation_tensor(to_density(psi))
    assert np.allclose(a, b, atol=1e-12)


def test_random_directions_unit_norm():
    rng = np.random.default_rng(0)
    d = random_directions(rng, (5, 3, 2))
    assert d.shape == (5, 3, 2, 3)
    assert np.allclose(np.linalg.norm(d, axis=-1), 1.0)


def test_config_validation():
    with pytest.raises(OptimizeError):
        OptimizerConfig(restarts=0)
    with pytest.raises(OptimizeError):
        OptimizerConfig(max_iterations=0)


def test_chsh_bell_reaches_tsirelson():
    res = seesaw_maximize(bell_state(), chsh_table())
    assert res.value == pytest.approx(np.sqrt(2), abs=1e-7)
    assert res.violated_classical
    assert res.converged


def test_mermin_ghz_saturates():
    for n in (2, 3, 4, 5):
        res = seesaw_maximize(ghz(n), mermin_table(n))
        assert res.value == pytest.approx(2 ** ((n - 1) / 2), abs=1e-6), n


def test_svetlichny_ghz_saturates():
    for n in (3, 4, 5):
        res = seesaw_maximize(ghz(n), svetlichny_table(n))
        assert res.value == pytest.approx(2 ** (n - 1) * np.sqrt(2), abs=1e-6), n


def test_product_state_no_violation():
    psi = StateVector.zero(3)
    res = seesaw_maximize(psi, svetlichny_table(3))
    assert not res.violated_classical
    # product states reach exactly the classical bound
    assert res.value == pytest.approx(4.0, abs=1e-6)


def test_value_never_exceeds_quantum_bound():
    table = svetlichny_table(3)
    for seed in range(20):
        res = seesaw_maximize(haar_state(3, seed), table)
        assert res.value <= table.quantum_bound + 1e-6


def test_seesaw_matches_horodecki():
    table = chsh_table()
    worst = 0.0
    for seed in range(40):
        psi = haar_state(2, seed)
        res = seesaw_maximize(psi, table)
        exact = chsh_horodecki(to_density(psi))
        worst = max(worst, abs(res.value - exact))
    assert worst < 1e-6


def test_horodecki_on_mixed_states():
    # reduced state of a 3-qubit Haar state is mixed; optimizer must agree
    for seed in (3, 7):
        rho = partial_trace(to_density(haar_state(3, seed)), keep=[0, 1])
        res = seesaw_maximize(rho, chsh_table())
        assert res.value == pytest.approx(chsh_horodecki(rho), abs=1e-6)


def test_batch_results_independent_of_composition():
    # optimizing a state alone or inside a larger batch gives the same value
    table = svetlichny_table(3)
    cfg = OptimizerConfig(seed=0)
    psis = np.stack([haar_state(3, s).amps for s in range(6)])
    R = correlation_tensors_pure(psis, 3)
    rng = np.random.default_rng(99)
    init = random_directions(rng, (6, cfg.restarts, 3, 2))
    vals_all, _, _, _ = seesaw_batch(R, table, cfg, init)
    vals_solo, _, _, _ = seesaw_batch(R[2:3], table, cfg, init[2:3])
    assert vals_all[2] == pytest.approx(vals_solo[0], abs=1e-12)


def test_seesaw_monotone_ge_grid_oracle():
    table = svetlichny_table(3)
    for seed in range(5):
        psi = haar_state(3, seed + 100)
        res = seesaw_maximize(psi, table)
        lattice = grid_oracle(psi, table, step=np.pi / 6)
        assert res.value >= lattice - 1e-9


def test_grid_oracle_ghz_hits_exact_value_at_fine_step():
    # the optimal GHZ settings lie on the pi/4 lattice
    val = grid_oracle(ghz(3), svetlichny_table(3), step=np.pi / 4)
    assert val == pytest.approx(4 * np.sqrt(2), abs=1e-9)


def test_noisy_state_violation_shrinks():
    from qrcbell.circuit import Circuit, GateSpec, NoiseModel, simulate_noisy

    gates = (GateSpec("h", (0,)), GateSpec("cnot", (0, 1)), GateSpec("cnot", (1, 2)))
    table = svetlichny_table(3)
    clean = seesaw_maximize(simulate_pure(Circuit(3, gates)), table).value
    noisy = seesaw_maximize(
        simulate_noisy(Circuit(3, gates), NoiseModel(0.05, 0.05)), table
    ).value
    assert noisy < clean
