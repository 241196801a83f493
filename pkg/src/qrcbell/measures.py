"""Entanglement and magic quantifiers for pure states.

Three scalar diagnostics: the 3-tangle (residual tripartite entanglement,
the modulus of Cayley's hyperdeterminant of the amplitude tensor), the
Meyer-Wallach global entanglement Q (average linear entropy of the
single-qubit reductions), and the stabilizer 2-Renyi entropy M2 (a magic
monotone, zero exactly on stabilizer states).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qstate import PAULIS, StateVector, partial_trace, purity, to_density

MAX_MAGIC_QUBITS = 8  # 4^n Pauli expectations

_ID2 = np.eye(2, dtype=complex)
_PAULIS_WITH_ID = np.concatenate([_ID2[None], PAULIS], axis=0)


class MeasureError(ValueError):
    """Raised when a quantifier is requested for an unsupported state."""


@dataclass(frozen=True)
class MeasureReport:
    """Bundle of quantifiers for one state; tangle3 is None unless n=3."""

    tangle3: float | None
    meyer_wallach_q: float
    magic_m2: float

    def __post_init__(self):
        if self.tangle3 is not None and not -1e-9 <= self.tangle3 <= 1 + 1e-9:
            raise MeasureError(f"tangle3 {self.tangle3} out of range")
        if not -1e-9 <= self.meyer_wallach_q <= 1 + 1e-9:
            raise MeasureError(f"Q {self.meyer_wallach_q} out of range")
        if self.magic_m2 < -1e-9:
            raise MeasureError(f"magic {self.magic_m2} negative")


def three_tangle(psi: StateVector) -> float:
    """3-tangle tau_3 = 4 |d1 - 2 d2 + 4 d3| of a three-qubit pure state.

    d1, d2, d3 are the degree-4 monomial sums of Cayley's 2x2x2
    hyperdeterminant in the amplitudes t[i, j, k] (qubit 0 first index).
    """
    if psi.n_qubits != 3:
        raise MeasureError("three_tangle requires exactly 3 qubits")
    t = psi.amps.reshape(2, 2, 2)
    d1 = (
        t[0, 0, 0] ** 2 * t[1, 1, 1] ** 2
        + t[0, 0, 1] ** 2 * t[1, 1, 0] ** 2
        + t[0, 1, 0] ** 2 * t[1, 0, 1] ** 2
        + t[1, 0, 0] ** 2 * t[0, 1, 1] ** 2
    )
    d2 = (
        t[0, 0, 0] * t[1, 1, 1] * t[0, 1, 1] * t[1, 0, 0]
        + t[0, 0, 0] * t[1, 1, 1] * t[1, 0, 1] * t[0, 1, 0]
        + t[0, 0, 0] * t[1, 1, 1] * t[1, 1, 0] * t[0, 0, 1]
        + t[0, 1, 1] * t[1, 0, 0] * t[1, 0, 1] * t[0, 1, 0]
        + t[0, 1, 1] * t[1, 0, 0] * t[1, 1, 0] * t[0, 0, 1]
        + t[1, 0, 1] * t[0, 1, 0] * t[1, 1, 0] * t[0, 0, 1]
    )
    d3 = (
        t[0, 0, 0] * t[1, 1, 0] * t[1, 0, 1] * t[0, 1, 1]
        + t[1, 1, 1] * t[0, 0, 1] * t[0, 1, 0] * t[1, 0, 0]
    )
    val = 4.0 * abs(d1 - 2.0 * d2 + 4.0 * d3)
    return float(min(val, 1.0) if val <= 1 + 1e-9 else val)


def meyer_wallach_q(psi: StateVector) -> float:
    """Q = 2 - (2/n) sum_i Tr[rho_i^2] over single-qubit reductions."""
    n = psi.n_qubits
    if n < 2:
        raise MeasureError("meyer_wallach_q requires at least 2 qubits")
    rho = to_density(psi)
    total = sum(purity(partial_trace(rho, keep=[i])) for i in range(n))
    q = 2.0 - (2.0 / n) * total
    if not -1e-9 <= q <= 1 + 1e-9:
        raise MeasureError(f"Q = {q} outside [0, 1]")
    return float(np.clip(q, 0.0, 1.0))


def pauli_expectations(psi: StateVector) -> np.ndarray:
    """<psi|P|psi> for all 4^n Pauli strings, shape (4,)*n, real.

    Works on the projector tensor rho[kets, bras] and contracts one
    (ket, bra) axis pair per qubit against the {I, X, Y, Z} stack, so the
    intermediate never exceeds 4^n entries.
    """
    n = psi.n_qubits
    t = psi.amps.reshape((2,) * n)
    r = np.multiply.outer(t, t.conj())  # axes: kets 0..n-1, bras n..2n-1
    for q in range(n):
        # After q steps: kets of qubits q.., bras of qubits q.., labels.
        # Tr over qubit q: sum_{ij} rho[.. i .., .. j ..] P_a[j, i].
        r = np.tensordot(r, _PAULIS_WITH_ID, axes=([0, n - q], [2, 1]))
    return r.real


def stabilizer_renyi_2(psi: StateVector) -> float:
    """M2 = -log( sum_P <psi|P|psi>^4 / 2^n ), natural log, exact Pauli sum."""
    n = psi.n_qubits
    if n > MAX_MAGIC_QUBITS:
        raise MeasureError(f"stabilizer_renyi_2 capped at {MAX_MAGIC_QUBITS} qubits")
    exp = pauli_expectations(psi)
    total = float(np.sum(exp ** 4)) / 2 ** n
    m2 = -np.log(total)
    return float(max(m2, 0.0))


def measure_report(psi: StateVector) -> MeasureReport:
    return MeasureReport(
        tangle3=three_tangle(psi) if psi.n_qubits == 3 else None,
        meyer_wallach_q=meyer_wallach_q(psi),
        magic_m2=stabilizer_renyi_2(psi),
    )
