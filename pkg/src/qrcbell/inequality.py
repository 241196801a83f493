"""Coefficient tables and Bell operators for CHSH, Mermin, and Svetlichny.

Normalization follows the convention in which the Mermin polynomial has
classical bound 1 and quantum bound 2^((N-1)/2); CHSH is the N=2 Mermin
table (classical bound 1, quantum bound sqrt(2)).  The Svetlichny
combination is unnormalized: classical (hybrid) bound 2^(N-1), quantum
bound 2^(N-1) sqrt(2).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .qstate import DensityMatrix, HermitianObservable, PAULIS, expectation

FAMILIES = ("chsh", "mermin", "svetlichny_plus", "svetlichny_minus")

MAX_PARTIES = 10  # 2^N correlators; keep the table size bounded


class InequalityError(ValueError):
    """Raised for unsupported inequality families or arity mismatches."""


@dataclass(frozen=True)
class InequalitySpec:
    family: str
    n_parties: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InequalityError(f"unknown family {self.family!r}")
        if self.family == "chsh" and self.n_parties != 2:
            raise InequalityError("chsh is defined for exactly 2 parties")
        if not 2 <= self.n_parties <= MAX_PARTIES:
            raise InequalityError(f"n_parties must be in [2, {MAX_PARTIES}]")


@dataclass(frozen=True)
class CoefficientTable:
    """Signed weight per setting string s in {0,1}^N (1 = primed)."""

    family: str
    n_parties: int
    coeffs: dict
    classical_bound: float
    quantum_bound: float

    def tensor(self) -> np.ndarray:
        t = np.zeros((2,) * self.n_parties)
        for s, c in self.coeffs.items():
            t[s] = c
        return t

    def to_json(self) -> str:
        entries = [
            {"s": "".join(map(str, s)), "coeff": c}
            for s, c in sorted(self.coeffs.items())
        ]
        return json.dumps(
            {
                "family": self.family,
                "n_parties": self.n_parties,
                "entries": entries,
                "bounds": {
                    "classical": self.classical_bound,
                    "quantum": self.quantum_bound,
                },
            },
            indent=2,
        )


@dataclass(frozen=True)
class MeasurementSettings:
    """Per party and setting, a Bloch direction given as (theta, phi)."""

    angles: np.ndarray  # shape (N, 2, 2): party, setting, (theta, phi)

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float)
        if a.ndim != 3 or a.shape[1:] != (2, 2):
            raise InequalityError(f"angles shape {a.shape} must be (N, 2, 2)")
        if not np.all(np.isfinite(a)):
            raise InequalityError("angles must be finite")
        a = a.copy()
        a.flags.writeable = False
        object.__setattr__(self, "angles", a)

    @property
    def n_parties(self) -> int:
        return self.angles.shape[0]

    def directions(self) -> np.ndarray:
        """Unit vectors, shape (N, 2, 3)."""
        th = self.angles[..., 0]
        ph = self.angles[..., 1]
        return np.stack(
            [np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1
        )

    @classmethod
    def from_directions(cls, dirs: np.ndarray) -> "MeasurementSettings":
        d = np.asarray(dirs, dtype=float)
        norm = np.linalg.norm(d, axis=-1, keepdims=True)
        d = d / norm
        theta = np.arccos(np.clip(d[..., 2], -1.0, 1.0))
        phi = np.mod(np.arctan2(d[..., 1], d[..., 0]), 2 * np.pi)
        return cls(np.stack([theta, phi], axis=-1))


def mermin_table(n_parties: int) -> CoefficientTable:
    """Mermin polynomial coefficients via the standard recursion.

    M_2 = (A1 A2 + A1' A2 + A1 A2' - A1' A2') / 2, and
    M_N = M_{N-1} (A_N + A_N') / 2 + M'_{N-1} (A_N - A_N') / 2
    with M' the prime-swapped polynomial.
    """
    if n_parties < 2:
        raise InequalityError("mermin requires at least 2 parties")
    m = {(0, 0): 0.5, (1, 0): 0.5, (0, 1): 0.5, (1, 1): -0.5}
    mp = {tuple(1 - b for b in s): c for s, c in m.items()}
    for _ in range(3, n_parties + 1):
        new = {}
        for s, c in m.items():
            for last, sign in ((0, 0.5), (1, 0.5)):
                new[s + (last,)] = new.get(s + (last,), 0.0) + sign * c
        for s, c in mp.items():
            for last, sign in ((0, 0.5), (1, -0.5)):
                new[s + (last,)] = new.get(s + (last,), 0.0) + sign * c
        m = {s: c for s, c in new.items() if abs(c) > 1e-15}
        mp = {tuple(1 - b for b in s): c for s, c in m.items()}
    return CoefficientTable(
        family="mermin",
        n_parties=n_parties,
        coeffs=m,
        classical_bound=1.0,
        quantum_bound=2.0 ** ((n_parties - 1) / 2.0),
    )


def chsh_table() -> CoefficientTable:
    """CHSH in the half-normalized convention (classical 1, quantum sqrt 2)."""
    t = mermin_table(2)
    return CoefficientTable("chsh", 2, t.coeffs, t.classical_bound, t.quantum_bound)


def svetlichny_table(n_parties: int, sign: str = "minus") -> CoefficientTable:
    """Svetlichny coefficients: (-1)^(t(t +/- 1)/2) with t the prime count."""
    if n_parties < 2:
        raise InequalityError("svetlichny requires at least 2 parties")
    if n_parties > MAX_PARTIES:
        raise InequalityError(f"n_parties capped at {MAX_PARTIES}")
    if sign not in ("plus", "minus"):
        raise InequalityError(f"sign must be 'plus' or 'minus', got {sign!r}")
    off = 1 if sign == "plus" else -1
    coeffs = {}
    for s in itertools.product((0, 1), repeat=n_parties):
        t = sum(s)
        coeffs[s] = float((-1) ** ((t * (t + off)) // 2))
    return CoefficientTable(
        family=f"svetlichny_{sign}",
        n_parties=n_parties,
        coeffs=coeffs,
        classical_bound=2.0 ** (n_parties - 1),
        quantum_bound=2.0 ** (n_parties - 1) * np.sqrt(2.0),
    )


def table_for(spec: InequalitySpec, sign: str = "minus") -> CoefficientTable:
    if spec.family == "chsh":
        return chsh_table()
    if spec.family == "mermin":
        return mermin_table(spec.n_parties)
    if spec.family == "svetlichny_plus":
        return svetlichny_table(spec.n_parties, "plus")
    return svetlichny_table(spec.n_parties, "minus")


def local_observable(theta: float, phi: float) -> HermitianObservable:
    """sigma . n for the unit direction (theta, phi); eigenvalues +/-1."""
    n = np.array(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)]
    )
    return HermitianObservable(1, np.tensordot(n, PAULIS, axes=(0, 0)))


def bell_operator(table: CoefficientTable, ms: MeasurementSettings) -> HermitianObservable:
    """sum_s coeff(s) (x)_i sigma . n_{i, s_i}."""
    n = table.n_parties
    if ms.n_parties != n:
        raise InequalityError(
            f"settings for {ms.n_parties} parties, table for {n}"
        )
    dirs = ms.directions()
    obs = np.tensordot(dirs, PAULIS, axes=(2, 0))  # (N, 2, 2, 2)
    total = np.zeros((2 ** n, 2 ** n), dtype=complex)
    for s, c in table.coeffs.items():
        term = obs[0, s[0]]
        for i in range(1, n):
            term = np.kron(term, obs[i, s[i]])
        total += c * term
    return HermitianObservable(n, (total + total.conj().T) / 2)


def evaluate(rho: DensityMatrix, table: CoefficientTable, ms: MeasurementSettings) -> float:
    """|Tr(rho O)| for the Bell operator built from the settings."""
    if rho.n_qubits != table.n_parties:
        raise InequalityError(
            f"state has {rho.n_qubits} qubits, table has {table.n_parties} parties"
        )
    return abs(expectation(rho, bell_operator(table, ms)))
