import numpy as np
import pytest

from qrcbell.circuit import enumerate_stabilizer_states, haar_unitary
from qrcbell.measures import (
    MeasureError,
    measure_report,
    meyer_wallach_q,
    pauli_expectations,
    stabilizer_renyi_2,
    three_tangle,
)
from qrcbell.qstate import StateVector, apply_unitary


def ghz(n):
    amps = np.zeros(2 ** n)
    amps[0] = amps[-1] = 1
    return StateVector.from_amplitudes(amps)


def w_state():
    amps = np.zeros(8)
    amps[1] = amps[2] = amps[4] = 1
    return StateVector.from_amplitudes(amps)


def t_plus():
    # T H |0>
    return StateVector.from_amplitudes([1, np.exp(1j * np.pi / 4)])


def random_local_unitaries(n, rng):
    return [haar_unitary(2, rng) for _ in range(n)]


def apply_locals(psi, us):
    for q, u in enumerate(us):
        psi = apply_unitary(psi, u, (q,))
    return psi


def test_three_tangle_reference_states():
    assert three_tangle(ghz(3)) == pytest.approx(1.0, abs=1e-9)
    assert three_tangle(w_state()) == pytest.approx(0.0, abs=1e-9)
    assert three_tangle(StateVector.zero(3)) == pytest.approx(0.0, abs=1e-9)


def test_three_tangle_generalized_ghz():
    # cos(a)|000> + sin(a)|111> has tangle sin^2(2a)
    for a in (0.2, 0.7, 1.1):
        amps = np.zeros(8)
        amps[0], amps[7] = np.cos(a), np.sin(a)
        psi = StateVector.from_amplitudes(amps)
        assert three_tangle(psi) == pytest.approx(np.sin(2 * a) ** 2, abs=1e-9)


def test_three_tangle_local_unitary_invariance():
    rng = np.random.default_rng(17)
    base = ghz(3)
    for _ in range(30):
        rotated = apply_locals(base, random_local_unitaries(3, rng))
        assert three_tangle(rotated) == pytest.approx(1.0, abs=1e-9)


def test_three_tangle_arity_guard():
    with pytest.raises(MeasureError):
        three_tangle(StateVector.zero(2))


def test_meyer_wallach_reference_states():
    for n in (2, 3, 4):
        assert meyer_wallach_q(ghz(n)) == pytest.approx(1.0, abs=1e-12)
        assert meyer_wallach_q(StateVector.zero(n)) == pytest.approx(0.0, abs=1e-12)
    assert meyer_wallach_q(w_state()) == pytest.approx(8 / 9, abs=1e-12)


def test_meyer_wallach_local_unitary_invariance():
    rng = np.random.default_rng(23)
    base = w_state()
    ref = meyer_wallach_q(base)
    for _ in range(30):
        rotated = apply_locals(base, random_local_unitaries(3, rng))
        assert meyer_wallach_q(rotated) == pytest.approx(ref, abs=1e-10)


def test_pauli_expectations_normalization():
    # sum over all Pauli strings of <P>^2 equals 2^n for pure states
    rng = np.random.default_rng(31)
    for n in (1, 2, 3):
        amps = rng.standard_normal(2 ** n) + 1j * rng.standard_normal(2 ** n)
        psi = StateVector.from_amplitudes(amps)
        exps = pauli_expectations(psi)
        assert np.sum(exps ** 2) == pytest.approx(2 ** n, abs=1e-9)


def test_magic_zero_on_stabilizer_states():
    for psi in enumerate_stabilizer_states(2):
        assert stabilizer_renyi_2(psi) == pytest.approx(0.0, abs=1e-9)


def test_magic_t_state():
    assert stabilizer_renyi_2(t_plus()) == pytest.approx(np.log(4 / 3), abs=1e-9)


def test_magic_local_clifford_invariance():
    # magic of T|+> tensor |0> equals magic of T|+>
    joint = StateVector.from_amplitudes(np.kron(t_plus().amps, [1, 0]))
    assert stabilizer_renyi_2(joint) == pytest.approx(np.log(4 / 3), abs=1e-9)


def test_magic_nonnegative_on_random_states():
    rng = np.random.default_rng(41)
    for _ in range(20):
        amps = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        m = stabilizer_renyi_2(StateVector.from_amplitudes(amps))
        assert m >= -1e-12


def test_measure_report_fields():
    rep = measure_report(ghz(3))
    assert rep.tangle3 == pytest.approx(1.0, abs=1e-9)
    assert rep.meyer_wallach_q == pytest.approx(1.0, abs=1e-9)
    assert rep.magic_m2 == pytest.approx(0.0, abs=1e-9)
    rep4 = measure_report(ghz(4))
    assert rep4.tangle3 is None  # only defined for three qubits
