"""Rewrite abstract circuits into hardware-native gate sets.

Two targets are supported: a PRX/CZ machine ("IQM_like") and a
GPI/GPI2/MS machine ("IonQ_like").  Single-qubit gates go through ZXZ
angle extraction; Z rotations are virtual (tracked per qubit, commuted
through the natives, and materialized as physical pulses at the end so
the full unitary round-trips).  Two-qubit gates are rewritten onto
connectivity edges, with SWAP insertion when routing is enabled.

Also houses the phase-invariant unitary distance used to verify the
rewrites, and the per-bin representative-circuit selection used for
device export.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, CircuitError, GateSpec, gate_counts, gate_matrix

TARGET_NAMES = ("IQM_like", "IonQ_like")
NATIVE_KINDS = {
    "IQM_like": frozenset({"prx", "cz"}),
    "IonQ_like": frozenset({"gpi", "gpi2", "ms"}),
}
MAX_UNITARY_QUBITS = 6

_ANGLE_EPS = 1e-12


class TranspileError(ValueError):
    """Raised for unsupported gates, bad targets, or routing failures."""


@dataclass(frozen=True)
class NativeTarget:
    name: str
    n_qubits: int
    connectivity: tuple  # edge list of qubit pairs

    def __post_init__(self):
        if self.name not in TARGET_NAMES:
            raise TranspileError(f"unknown target {self.name!r}")
        edges = tuple(
            (int(min(a, b)), int(max(a, b))) for a, b in self.connectivity
        )
        for a, b in edges:
            if not (0 <= a < self.n_qubits and 0 <= b < self.n_qubits) or a == b:
                raise TranspileError(f"edge ({a}, {b}) references invalid qubits")
        object.__setattr__(self, "connectivity", edges)

    @property
    def native_kinds(self) -> frozenset:
        return NATIVE_KINDS[self.name]

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.connectivity


def all_to_all_edges(n_qubits: int) -> tuple:
    return tuple(
        (a, b) for a in range(n_qubits) for b in range(a + 1, n_qubits)
    )


def line_edges(n_qubits: int) -> tuple:
    return tuple((q, q + 1) for q in range(n_qubits - 1))


def iqm_like(n_qubits: int, connectivity=None) -> NativeTarget:
    edges = all_to_all_edges(n_qubits) if connectivity is None else connectivity
    return NativeTarget("IQM_like", n_qubits, edges)


def ionq_like(n_qubits: int, connectivity=None) -> NativeTarget:
    edges = all_to_all_edges(n_qubits) if connectivity is None else connectivity
    return NativeTarget("IonQ_like", n_qubits, edges)


# ---------------------------------------------------------------------------
# Single-qubit angle extraction

def su2_zxz(V: np.ndarray):
    """Angles (s, theta, b) with V ~ RZ(s) @ PRX(theta, -b) up to phase.

    Writes V (projected to SU(2)) as RZ(a) RX(theta) RZ(b) and reports
    s = a + b, so a single PRX pulse plus a trailing virtual Z suffice.
    """
    det = V[0, 0] * V[1, 1] - V[0, 1] * V[1, 0]
    V = V / np.sqrt(det)
    theta = 2.0 * math.atan2(abs(V[1, 0]), abs(V[0, 0]))
    if abs(V[1, 0]) < _ANGLE_EPS:
        return 2.0 * float(np.angle(V[1, 1])), 0.0, 0.0
    if abs(V[0, 0]) < _ANGLE_EPS:
        diff = 2.0 * float(np.angle(V[1, 0])) + np.pi
        return 0.0, np.pi, -diff / 2.0
    ssum = -2.0 * float(np.angle(V[0, 0]))
    diff = 2.0 * float(np.angle(V[1, 0])) + np.pi
    return ssum, theta, (ssum - diff) / 2.0


def basis_rotation(theta: float, phi: float) -> np.ndarray:
    """2x2 unitary R with R (sigma . n) R^dag = Z (measurement prologue)."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    V = np.array(
        [[c, -s * np.exp(-1j * phi)], [s * np.exp(1j * phi), c]], dtype=complex
    )
    return V.conj().T


# ---------------------------------------------------------------------------
# Decomposition

def _expand_two_qubit(g: GateSpec, target_name: str) -> list:
    """Rewrite cnot/cz/ms into the target's two-qubit gate plus locals."""
    a, b = g.targets
    if target_name == "IQM_like":
        if g.kind == "cz":
            return [g]
        if g.kind == "cnot":
            return [GateSpec("h", (b,)), GateSpec("cz", (a, b)), GateSpec("h", (b,))]
        if g.kind == "ms":
            p0, p1 = g.params
            # MS(p0,p1) ~ (RZ(p0) x RZ(p1)) (HxH)(SxS) CZ (HxH) (RZ(-p0) x RZ(-p1))
            return [
                GateSpec("rz", (a,), (-p0,)), GateSpec("rz", (b,), (-p1,)),
                GateSpec("h", (a,)), GateSpec("h", (b,)),
                GateSpec("cz", (a, b)),
                GateSpec("s", (a,)), GateSpec("s", (b,)),
                GateSpec("h", (a,)), GateSpec("h", (b,)),
                GateSpec("rz", (a,), (p0,)), GateSpec("rz", (b,), (p1,)),
            ]
    else:
        if g.kind == "ms":
            return [g]
        if g.kind == "cz":
            # CZ ~ (RZ(-pi/2) x RZ(-pi/2)) (HxH) MS(0,0) (HxH)
            return [
                GateSpec("h", (a,)), GateSpec("h", (b,)),
                GateSpec("ms", (a, b), (0.0, 0.0)),
                GateSpec("h", (a,)), GateSpec("h", (b,)),
                GateSpec("rz", (a,), (-np.pi / 2,)), GateSpec("rz", (b,), (-np.pi / 2,)),
            ]
        if g.kind == "cnot":
            return (
                [GateSpec("h", (b,))]
                + _expand_two_qubit(GateSpec("cz", (a, b)), target_name)
                + [GateSpec("h", (b,))]
            )
    raise TranspileError(f"unsupported two-qubit gate {g.kind!r}")


def _route_path(target: NativeTarget, a: int, b: int) -> list:
    """Shortest connectivity path from a to b (BFS)."""
    adj = {q: [] for q in range(target.n_qubits)}
    for x, y in target.connectivity:
        adj[x].append(y)
        adj[y].append(x)
    prev = {a: None}
    queue = deque([a])
    while queue:
        q = queue.popleft()
        if q == b:
            path = [b]
            while prev[path[-1]] is not None:
                path.append(prev[path[-1]])
            return path[::-1]
        for nb in sorted(adj[q]):
            if nb not in prev:
                prev[nb] = q
                queue.append(nb)
    raise TranspileError(f"qubits {a} and {b} are disconnected on {target.name}")


def _swap_sequence(a: int, b: int) -> list:
    return [GateSpec("cnot", (a, b)), GateSpec("cnot", (b, a)), GateSpec("cnot", (a, b))]


def decompose(c: Circuit, target: NativeTarget, route: bool = True) -> Circuit:
    """Rewrite a circuit into the target's native gate set.

    The output acts on the same qubit labeling (SWAP pairs inserted and
    undone around routed gates) and equals the input unitary up to a
    global phase.
    """
    if c.n_qubits > target.n_qubits:
        raise TranspileError(
            f"circuit needs {c.n_qubits} qubits, target has {target.n_qubits}"
        )
    pending = np.zeros(target.n_qubits)
    out = []
    work = deque(c.gates)
    while work:
        g = work.popleft()
        if g.kind == "unitary":
            raise TranspileError("raw unitary gates cannot be transpiled")
        if len(g.targets) == 1:
            q = g.targets[0]
            _emit_single(gate_matrix(g), q, pending, out, target.name)
            continue
        a, b = g.targets
        if g.kind == "cz" and target.name == "IQM_like" or (
            g.kind == "ms" and target.name == "IonQ_like"
        ):
            if not target.has_edge(a, b):
                if not route:
                    raise TranspileError(
                        f"no edge ({a}, {b}) on {target.name} and routing disabled"
                    )
                path = _route_path(target, a, b)
                moves = []
                for i in range(len(path) - 2):
                    moves += _swap_sequence(path[i], path[i + 1])
                moved = GateSpec(g.kind, (path[-2], b), g.params)
                work.extendleft(reversed(moves + [moved] + moves[::-1]))
                continue
            if g.kind == "cz":
                out.append(g)  # diagonal: commutes with the virtual Zs
            else:
                p0 = g.params[0] - pending[a]
                p1 = g.params[1] - pending[b]
                out.append(GateSpec("ms", (a, b), (p0, p1)))
            continue
        work.extendleft(reversed(_expand_two_qubit(g, target.name)))
    for q in range(target.n_qubits):
        _materialize_z(q, pending, out, target.name)
    return Circuit(
        c.n_qubits, tuple(out),
        ensemble=f"{c.ensemble}@{target.name}", seed=c.seed, depth=c.depth,
    )


def _emit_single(U: np.ndarray, q: int, pending, out, target_name: str):
    """Append natives realizing U . RZ(pending[q]) ~ RZ(new pending) . natives."""
    V = U @ np.diag(
        [np.exp(-0.5j * pending[q]), np.exp(0.5j * pending[q])]
    )
    s, theta, b = su2_zxz(V)
    if theta < 1e-11:
        pending[q] = s
        return
    phi = -b
    if target_name == "IQM_like":
        out.append(GateSpec("prx", (q,), (theta, phi)))
        pending[q] = s
    else:
        # RZ(s) PRX(theta, phi) = RZ(s + theta) GPI2(pi/2 - theta + phi) GPI2(3pi/2 + phi)
        out.append(GateSpec("gpi2", (q,), (np.mod(3 * np.pi / 2 + phi, 2 * np.pi),)))
        out.append(GateSpec("gpi2", (q,), (np.mod(np.pi / 2 - theta + phi, 2 * np.pi),)))
        pending[q] = s + theta


def _materialize_z(q: int, pending, out, target_name: str):
    s = pending[q]
    pending[q] = 0.0
    if abs(np.exp(1j * s) - 1.0) < 1e-12:
        return
    if target_name == "IQM_like":
        # RZ(s) ~ PRX(pi, s/2) PRX(pi, 0)
        out.append(GateSpec("prx", (q,), (np.pi, 0.0)))
        out.append(GateSpec("prx", (q,), (np.pi, np.mod(s / 2, 2 * np.pi))))
    else:
        # RZ(s) = GPI(s/2) GPI(0), exactly
        out.append(GateSpec("gpi", (q,), (0.0,)))
        out.append(GateSpec("gpi", (q,), (np.mod(s / 2, 2 * np.pi),)))


def is_native(c: Circuit, target: NativeTarget) -> bool:
    return all(g.kind in target.native_kinds for g in c.gates)


# ---------------------------------------------------------------------------
# Equivalence verification

def circuit_unitary(c: Circuit) -> np.ndarray:
    """Full 2^n x 2^n unitary of a circuit (n <= 6)."""
    n = c.n_qubits
    if n > MAX_UNITARY_QUBITS:
        raise TranspileError(f"unitary construction capped at {MAX_UNITARY_QUBITS} qubits")
    U = np.eye(2 ** n, dtype=complex).reshape((2,) * n + (2 ** n,))
    for g in c.gates:
        k = len(g.targets)
        m = gate_matrix(g).reshape((2,) * (2 * k))
        axes = list(g.targets)
        U = np.tensordot(m, U, axes=(list(range(k, 2 * k)), axes))
        U = np.moveaxis(U, range(k), axes)
    return U.reshape(2 ** n, 2 ** n)


def unitary_distance(a: Circuit, b: Circuit) -> float:
    """1 - |Tr(U_a^dag U_b)| / 2^n; zero iff equal up to global phase."""
    if a.n_qubits != b.n_qubits:
        raise TranspileError("circuits act on different qubit counts")
    Ua = circuit_unitary(a)
    Ub = circuit_unitary(b)
    return float(1.0 - abs(np.trace(Ua.conj().T @ Ub)) / 2 ** a.n_qubits)


# ---------------------------------------------------------------------------
# Representative selection

@dataclass(frozen=True)
class RepresentativeBin:
    index: int
    lo: float
    hi: float
    circuit: Circuit
    value: float
    gate_counts: dict


@dataclass(frozen=True)
class RepresentativeSet:
    origin: float
    width: float
    count: int
    bins: tuple  # RepresentativeBin, one per non-empty bin, ascending


def select_representatives(
    results, lo: float = 4.0, width: float = 0.2, count: int = 8
) -> RepresentativeSet:
    """Pick one circuit per value bin, minimizing gate usage.

    `results` is an iterable of (circuit, violation value).  Bins are the
    half-open intervals [lo + j*width, lo + (j+1)*width).  Within a bin the
    representative minimizes (two-qubit count, total count, seed).
    """
    if width <= 0:
        raise TranspileError("bin width must be positive")
    best: dict[int, tuple] = {}
    for circuit, value in results:
        j = int(np.floor((value - lo) / width))
        if not 0 <= j < count:
            continue
        counts = gate_counts(circuit)
        key = (counts["two_qubit"], counts["total"], circuit.seed)
        if j not in best or key < best[j][0]:
            best[j] = (key, circuit, float(value), counts)
    bins = tuple(
        RepresentativeBin(
            index=j,
            lo=lo + j * width,
            hi=lo + (j + 1) * width,
            circuit=entry[1],
            value=entry[2],
            gate_counts=entry[3],
        )
        for j, entry in sorted(best.items())
    )
    return RepresentativeSet(origin=lo, width=width, count=count, bins=bins)


# ---------------------------------------------------------------------------
# Device export

def single_qubit_layer(mats, target: NativeTarget) -> tuple:
    """Native gates realizing one single-qubit unitary per listed qubit.

    `mats` is an iterable of (qubit, 2x2 matrix).  Virtual Zs are
    materialized immediately since nothing follows the layer.
    """
    pending = np.zeros(target.n_qubits)
    out: list = []
    for q, m in mats:
        _emit_single(np.asarray(m, dtype=complex), q, pending, out, target.name)
    for q in range(target.n_qubits):
        _materialize_z(q, pending, out, target.name)
    return tuple(out)


def measurement_prologue(angles, setting, target: NativeTarget) -> tuple:
    """Native gates rotating each qubit's chosen observable onto Z.

    `angles` has shape (N, 2, 2) (party, setting, (theta, phi)); `setting`
    is the N-bit choice of primed/unprimed per party.  After these gates a
    computational-basis readout samples the selected correlator.
    """
    angles = np.asarray(angles, dtype=float)
    mats = [
        (q, basis_rotation(*angles[q, setting[q]]))
        for q in range(angles.shape[0])
    ]
    return single_qubit_layer(mats, target)


def export_representatives(
    reps: RepresentativeSet, settings_by_bin: dict, table,
    target: NativeTarget, out_dir: str,
) -> dict:
    """Write per-bin native QASM programs plus a manifest.

    For every representative bin and every setting string with a nonzero
    coefficient, emits one measured QASM file (native circuit followed by
    the measurement prologue).  The manifest ties each bin to its ideal
    value, optimal angles, serialized circuit, and file names, and is
    written as manifest.json in `out_dir`.
    """
    import json
    import os

    from .circuit import circuit_digest, circuit_to_dict
    from .qasm import to_qasm

    os.makedirs(out_dir, exist_ok=True)
    bins = []
    for b in reps.bins:
        settings = settings_by_bin[b.index]
        native = decompose(b.circuit, target)
        if unitary_distance(b.circuit, native) > 1e-9:
            raise TranspileError(f"native rewrite of bin {b.index} failed verification")
        angles = np.asarray(settings.angles, dtype=float)
        files = {}
        for s in sorted(table.coeffs):
            bits = "".join(map(str, s))
            prologue = measurement_prologue(angles, s, target)
            measured = Circuit(
                native.n_qubits, native.gates + prologue,
                ensemble=native.ensemble, seed=native.seed, depth=native.depth,
            )
            fname = f"bin{b.index:02d}_s{bits}.qasm"
            with open(os.path.join(out_dir, fname), "w") as fh:
                fh.write(to_qasm(measured, include_measurement=True))
            files[bits] = fname
        bins.append({
            "index": b.index, "lo": b.lo, "hi": b.hi,
            "ideal_value": b.value,
            "digest": circuit_digest(b.circuit),
            "angles": angles.tolist(),
            "circuit": circuit_to_dict(b.circuit),
            "native_gate_counts": gate_counts(native),
            "qasm_files": files,
        })
    manifest = {
        "target": target.name,
        "family": table.family,
        "n_parties": table.n_parties,
        "classical_bound": table.classical_bound,
        "quantum_bound": table.quantum_bound,
        "origin": reps.origin, "width": reps.width, "count": reps.count,
        "bins": bins,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return manifest
