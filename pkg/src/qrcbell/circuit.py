"""Gate library, random circuit generation, and circuit simulation.

Ensembles:
    clifford     -- H, S, CNOT
    clifford_t   -- H, S, T, CNOT
    native_iqm   -- PRX(theta, phi), CZ (connectivity-restricted)
    native_ionq  -- GPI(phi), GPI2(phi), MS(phi0, phi1)
    haar         -- one global Haar-random unitary per layer

Gate conventions (all angles in radians):
    PRX(theta, phi) = exp(-i (theta/2) (cos(phi) X + sin(phi) Y))
    GPI(phi)        = cos(phi) X + sin(phi) Y          (pi pulse)
    GPI2(phi)       = PRX(pi/2, phi)                   (pi/2 pulse)
    MS(phi0, phi1)  = exp(-i (pi/4) X_phi0 (x) X_phi1)
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .qstate import (
    DensityMatrix,
    QStateError,
    StateVector,
    apply_unitary,
    apply_unitary_rho,
    depolarize,
    to_density,
)

ENSEMBLES = ("clifford", "clifford_t", "native_iqm", "native_ionq", "haar")

_SQ2 = 1.0 / np.sqrt(2.0)
_FIXED_GATES = {
    "h": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    "s": np.diag([1.0, 1.0j]),
    "t": np.diag([1.0, np.exp(1j * np.pi / 4)]),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.diag([1.0, -1.0]),
    "cnot": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
    "cz": np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex),
}

GATE_ARITY = {
    "h": 1, "s": 1, "t": 1, "x": 1, "y": 1, "z": 1,
    "cnot": 2, "cz": 2,
    "prx": 1, "gpi": 1, "gpi2": 1, "ms": 2,
    "rz": 1, "unitary": None,
}
GATE_PARAMS = {
    "h": 0, "s": 0, "t": 0, "x": 0, "y": 0, "z": 0, "cnot": 0, "cz": 0,
    "prx": 2, "gpi": 1, "gpi2": 1, "ms": 2, "rz": 1,
}


class CircuitError(ValueError):
    """Raised for malformed gates, circuits, or generation parameters."""


@dataclass(frozen=True, eq=False)
class GateSpec:
    kind: str
    targets: tuple
    params: tuple = ()
    matrix: np.ndarray | None = None  # only for kind == "unitary"

    def __eq__(self, other):
        if not isinstance(other, GateSpec):
            return NotImplemented
        if (self.kind, self.targets, self.params) != (
            other.kind, other.targets, other.params
        ):
            return False
        if self.matrix is None or other.matrix is None:
            return self.matrix is other.matrix
        return np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash((self.kind, self.targets, self.params))

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.kind not in GATE_ARITY:
            raise CircuitError(f"unknown gate kind {self.kind!r}")
        if not all(np.isfinite(self.params)):
            raise CircuitError(f"non-finite parameters {self.params}")
        if self.kind == "unitary":
            if self.matrix is None:
                raise CircuitError("unitary gate needs an explicit matrix")
            mat = np.asarray(self.matrix, dtype=complex)
            if mat.shape != (2 ** len(self.targets),) * 2:
                raise CircuitError("unitary matrix does not match target count")
            object.__setattr__(self, "matrix", mat)
        else:
            arity = GATE_ARITY[self.kind]
            if len(self.targets) != arity:
                raise CircuitError(
                    f"{self.kind} expects {arity} targets, got {self.targets}"
                )
            if len(self.params) != GATE_PARAMS[self.kind]:
                raise CircuitError(
                    f"{self.kind} expects {GATE_PARAMS[self.kind]} params"
                )


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple
    ensemble: str = "custom"
    seed: int = 0
    depth: int = 0

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if any(t >= self.n_qubits for t in g.targets):
                raise CircuitError(
                    f"gate {g.kind} targets {g.targets} exceed {self.n_qubits} qubits"
                )


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing parameters applied after each gate."""

    p1: float = 0.0
    p2: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.p1 <= 1.0 and 0.0 <= self.p2 <= 1.0):
            raise CircuitError("noise parameters must lie in [0, 1]")

    @property
    def is_noisy(self) -> bool:
        return self.p1 > 0.0 or self.p2 > 0.0


def prx_matrix(theta: float, phi: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array(
        [[c, -1j * np.exp(-1j * phi) * s], [-1j * np.exp(1j * phi) * s, c]]
    )


def gpi_matrix(phi: float) -> np.ndarray:
    return np.array([[0, np.exp(-1j * phi)], [np.exp(1j * phi), 0]], dtype=complex)


def ms_matrix(phi0: float, phi1: float) -> np.ndarray:
    x0 = np.cos(phi0) * _FIXED_GATES["x"] + np.sin(phi0) * _FIXED_GATES["y"]
    x1 = np.cos(phi1) * _FIXED_GATES["x"] + np.sin(phi1) * _FIXED_GATES["y"]
    gen = np.kron(x0, x1)
    # exp(-i pi/4 G) with G an involution: cos(pi/4) I - i sin(pi/4) G
    return np.cos(np.pi / 4) * np.eye(4) - 1j * np.sin(np.pi / 4) * gen


def rz_matrix(lam: float) -> np.ndarray:
    return np.diag([np.exp(-1j * lam / 2), np.exp(1j * lam / 2)])


def gate_matrix(g: GateSpec) -> np.ndarray:
    if g.kind in _FIXED_GATES:
        return _FIXED_GATES[g.kind]
    if g.kind == "prx":
        return prx_matrix(*g.params)
    if g.kind == "gpi":
        return gpi_matrix(*g.params)
    if g.kind == "gpi2":
        return prx_matrix(np.pi / 2, g.params[0])
    if g.kind == "ms":
        return ms_matrix(*g.params)
    if g.kind == "rz":
        return rz_matrix(*g.params)
    if g.kind == "unitary":
        return g.matrix
    raise CircuitError(f"unknown gate kind {g.kind!r}")


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    if dim < 2 or dim & (dim - 1):
        raise CircuitError(f"dimension {dim} is not a power of two")
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_depth(rng: np.random.Generator, d_min: int, d_max: int) -> int:
    if not 1 <= d_min <= d_max:
        raise CircuitError(f"invalid depth bounds [{d_min}, {d_max}]")
    return int(rng.integers(d_min, d_max + 1))


# Probability that an unassigned qubit draws a single-qubit gate rather
# than attempting to pair up for a two-qubit gate.
SINGLE_GATE_PROB = 2.0 / 3.0


def _single_gate(ensemble: str, q: int, rng: np.random.Generator) -> GateSpec:
    if ensemble == "clifford":
        kind = ("h", "s")[rng.integers(2)]
        return GateSpec(kind, (q,))
    if ensemble == "clifford_t":
        kind = ("h", "s", "t")[rng.integers(3)]
        return GateSpec(kind, (q,))
    if ensemble == "native_iqm":
        return GateSpec("prx", (q,), (rng.uniform(0, 2 * np.pi), rng.uniform(0, 2 * np.pi)))
    if ensemble == "native_ionq":
        if rng.integers(2):
            return GateSpec("gpi", (q,), (rng.uniform(0, 2 * np.pi),))
        return GateSpec("gpi2", (q,), (rng.uniform(0, 2 * np.pi),))
    raise CircuitError(f"no single-qubit gates for ensemble {ensemble!r}")


def _two_gate(ensemble: str, a: int, b: int, rng: np.random.Generator) -> GateSpec:
    if ensemble in ("clifford", "clifford_t"):
        return GateSpec("cnot", (a, b))
    if ensemble == "native_iqm":
        return GateSpec("cz", (min(a, b), max(a, b)))
    if ensemble == "native_ionq":
        return GateSpec("ms", (a, b), (rng.uniform(0, 2 * np.pi), rng.uniform(0, 2 * np.pi)))
    raise CircuitError(f"no two-qubit gates for ensemble {ensemble!r}")


def random_circuit(
    ensemble: str,
    n_qubits: int,
    depth: int,
    seed: int,
    connectivity=None,
) -> Circuit:
    """Deterministic random circuit for (ensemble, n_qubits, depth, seed).

    Per layer, qubits are visited in a random order; each unassigned qubit
    draws a single-qubit gate with probability 2/3, otherwise it pairs with
    a random unassigned partner (restricted to the connectivity graph for
    native ensembles) for a two-qubit gate, and stays idle if no partner
    remains.
    """
    if ensemble not in ENSEMBLES:
        raise CircuitError(f"unknown ensemble {ensemble!r}")
    if n_qubits < 1:
        raise CircuitError("n_qubits must be >= 1")
    if depth < 1:
        raise CircuitError("depth must be >= 1")
    if ensemble.startswith("native") and connectivity is None:
        raise CircuitError(f"ensemble {ensemble!r} requires a connectivity edge list")
    rng = np.random.Generator(np.random.PCG64(seed))
    adj: dict[int, set] = {q: set() for q in range(n_qubits)}
    if connectivity is not None:
        for a, b in connectivity:
            adj[int(a)].add(int(b))
            adj[int(b)].add(int(a))
    else:
        for q in range(n_qubits):
            adj[q] = set(range(n_qubits)) - {q}

    gates = []
    for _ in range(depth):
        if ensemble == "haar":
            gates.append(
                GateSpec("unitary", tuple(range(n_qubits)), (),
                         haar_unitary(2 ** n_qubits, rng))
            )
            continue
        order = rng.permutation(n_qubits)
        unassigned = set(range(n_qubits))
        for q in order:
            q = int(q)
            if q not in unassigned:
                continue
            unassigned.discard(q)
            if rng.random() < SINGLE_GATE_PROB:
                gates.append(_single_gate(ensemble, q, rng))
            else:
                partners = sorted(adj[q] & unassigned)
                if not partners:
                    continue
                p = partners[rng.integers(len(partners))]
                unassigned.discard(p)
                pair = (q, p) if rng.integers(2) else (p, q)
                gates.append(_two_gate(ensemble, *pair, rng))
    return Circuit(n_qubits, tuple(gates), ensemble=ensemble, seed=int(seed), depth=depth)


def simulate_pure(c: Circuit) -> StateVector:
    state = StateVector.zero(c.n_qubits)
    for g in c.gates:
        state = apply_unitary(state, gate_matrix(g), g.targets)
    return state


def simulate_noisy(c: Circuit, nm: NoiseModel) -> DensityMatrix:
    """Apply each gate followed by depolarizing noise on its qubits."""
    rho = to_density(StateVector.zero(c.n_qubits))
    for g in c.gates:
        rho = apply_unitary_rho(rho, gate_matrix(g), g.targets)
        p = nm.p1 if len(g.targets) == 1 else nm.p2
        if p > 0:
            rho = depolarize(rho, p, g.targets)
    return rho


def gate_counts(c: Circuit) -> dict:
    per_kind: dict[str, int] = {}
    two = 0
    for g in c.gates:
        per_kind[g.kind] = per_kind.get(g.kind, 0) + 1
        if len(g.targets) == 2:
            two += 1
    return {"total": len(c.gates), "two_qubit": two, "per_kind": per_kind}


# ---------------------------------------------------------------------------
# Stabilizer-state enumeration (small-n oracle)

_STAB_ROUND = 9  # canonicalization grid, 1e-9


def _canonical_key(amps: np.ndarray) -> bytes:
    idx = np.argmax(np.abs(amps) > 1e-9)
    phase = amps[idx] / abs(amps[idx])
    canon = np.round(amps / phase, _STAB_ROUND) + 0.0  # +0.0 kills -0.0
    return canon.tobytes()


def enumerate_stabilizer_states(n: int) -> list[StateVector]:
    """All n-qubit stabilizer states (n <= 3) by BFS closure under H, S, CNOT.

    States are deduplicated up to global phase.  Counts: 6, 60, 1080 for
    n = 1, 2, 3.
    """
    if n not in (1, 2, 3):
        raise CircuitError("stabilizer enumeration supported for n in {1, 2, 3}")
    gens = []
    for q in range(n):
        gens.append((_FIXED_GATES["h"], (q,)))
        gens.append((_FIXED_GATES["s"], (q,)))
    for a in range(n):
        for b in range(n):
            if a != b:
                gens.append((_FIXED_GATES["cnot"], (a, b)))
    start = StateVector.zero(n)
    seen = {_canonical_key(start.amps): start}
    frontier = [start]
    while frontier:
        nxt = []
        for st in frontier:
            for U, tg in gens:
                new = apply_unitary(st, U, tg)
                key = _canonical_key(new.amps)
                if key not in seen:
                    seen[key] = new
                    nxt.append(new)
        frontier = nxt
    return list(seen.values())


# ---------------------------------------------------------------------------
# Serialization

def circuit_to_dict(c: Circuit) -> dict:
    gates = []
    for g in c.gates:
        entry = {"kind": g.kind, "targets": list(g.targets), "params": list(g.params)}
        if g.kind == "unitary":
            entry["matrix"] = [
                [[float(v.real), float(v.imag)] for v in row] for row in g.matrix
            ]
        gates.append(entry)
    return {
        "n_qubits": c.n_qubits,
        "ensemble": c.ensemble,
        "seed": c.seed,
        "depth": c.depth,
        "gates": gates,
    }


def circuit_from_dict(d: dict) -> Circuit:
    gates = []
    for entry in d["gates"]:
        mat = None
        if entry["kind"] == "unitary":
            mat = np.array(
                [[complex(re, im) for re, im in row] for row in entry["matrix"]]
            )
        gates.append(
            GateSpec(entry["kind"], tuple(entry["targets"]),
                     tuple(entry.get("params", ())), mat)
        )
    return Circuit(
        d["n_qubits"], tuple(gates),
        ensemble=d.get("ensemble", "custom"),
        seed=int(d.get("seed", 0)),
        depth=int(d.get("depth", 0)),
    )


def circuit_digest(c: Circuit) -> str:
    """Stable 16-hex identifier of a circuit.

    Circuits from a named ensemble are fully determined by their generation
    parameters, so those suffice (this avoids serializing per-layer Haar
    matrices); anything else is digested from the full gate list.
    """
    if c.ensemble in ENSEMBLES:
        blob = json.dumps(
            {"ensemble": c.ensemble, "n_qubits": c.n_qubits,
             "depth": c.depth, "seed": c.seed},
            sort_keys=True, separators=(",", ":"),
        )
    else:
        blob = json.dumps(circuit_to_dict(c), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
