"""OpenQASM 3 export and re-import of circuits.

Every emitted gate is defined in the header in terms of the builtin U and
gphase, so the files stand alone.  The parser handles exactly this dialect
(the gates we emit, one statement per line) and rebuilds a Circuit; raw
`unitary` gates have no textual form and cannot be exported.
"""

from __future__ import annotations

import re

from .circuit import Circuit, CircuitError, GateSpec, GATE_ARITY, GATE_PARAMS

# prx(theta, phi) == U(theta, phi - pi/2, pi/2 - phi) exactly (no phase).
_GATE_DEFS = {
    "h": "gate h q { U(pi/2, 0, pi) q; }",
    "s": "gate s q { U(0, 0, pi/2) q; }",
    "t": "gate t q { U(0, 0, pi/4) q; }",
    "x": "gate x q { U(pi, 0, pi) q; }",
    "y": "gate y q { U(pi, pi/2, pi/2) q; }",
    "z": "gate z q { U(0, 0, pi) q; }",
    "rz": "gate rz(lam) q { gphase(-lam/2); U(0, 0, lam) q; }",
    "cnot": "gate cnot a, b { ctrl @ U(pi, 0, pi) a, b; }",
    "cz": "gate cz a, b { ctrl @ U(0, 0, pi) a, b; }",
    "prx": "gate prx(theta, phi) q { U(theta, phi - pi/2, pi/2 - phi) q; }",
    "gpi": "gate gpi(phi) q { gphase(pi/2); U(pi, phi - pi/2, pi/2 - phi) q; }",
    "gpi2": "gate gpi2(phi) q { U(pi/2, phi - pi/2, pi/2 - phi) q; }",
    "ms": (
        "gate ms(phi0, phi1) a, b { gphase(-pi/4); rz(-phi0) a; rz(-phi1) b; "
        "h a; h b; cz a, b; s a; s b; h a; h b; rz(phi0) a; rz(phi1) b; }"
    ),
}
# ms is defined in terms of rz/h/s/cz, so those must precede it.
_DEF_ORDER = ("h", "s", "t", "x", "y", "z", "rz", "cnot", "cz", "prx", "gpi", "gpi2", "ms")
_MS_DEPS = ("rz", "h", "s", "cz")


class QasmError(ValueError):
    """Raised for unexportable circuits or unparseable text."""


def to_qasm(c: Circuit, include_measurement: bool = False) -> str:
    """Render a circuit as OpenQASM 3 text."""
    kinds = {g.kind for g in c.gates}
    if "unitary" in kinds:
        raise QasmError("raw unitary gates have no OpenQASM form")
    if "ms" in kinds:
        kinds.update(_MS_DEPS)
    lines = ["OPENQASM 3.0;", ""]
    for kind in _DEF_ORDER:
        if kind in kinds:
            lines.append(_GATE_DEFS[kind])
    lines.append("")
    lines.append(f"qubit[{c.n_qubits}] q;")
    if include_measurement:
        lines.append(f"bit[{c.n_qubits}] m;")
    lines.append("")
    for g in c.gates:
        args = ", ".join(f"q[{t}]" for t in g.targets)
        params = f"({', '.join(repr(float(v)) for v in g.params)})" if g.params else ""
        lines.append(f"{g.kind}{params} {args};")
    if include_measurement:
        lines.append("m = measure q;")
    return "\n".join(lines) + "\n"


_APP_RE = re.compile(
    r"^(?P<name>[a-z][a-z0-9_]*)\s*(?:\((?P<params>[^)]*)\))?\s+(?P<args>q\[\d+\](?:\s*,\s*q\[\d+\])*);$"
)
_QUBIT_RE = re.compile(r"^qubit\[(\d+)\]\s+\w+;$")


def from_qasm(text: str) -> Circuit:
    """Parse OpenQASM 3 text emitted by to_qasm back into a Circuit."""
    n_qubits = None
    gates = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("//"):
            continue
        if line.startswith("OPENQASM"):
            continue
        if line.startswith("gate ") or line.startswith("bit["):
            continue  # header library / classical registers
        if line.endswith("measure q;"):
            continue
        m = _QUBIT_RE.match(line)
        if m:
            n_qubits = int(m.group(1))
            continue
        m = _APP_RE.match(line)
        if not m:
            raise QasmError(f"unparseable statement: {line!r}")
        name = m.group("name")
        if name not in GATE_ARITY or name == "unitary":
            raise QasmError(f"unknown gate {name!r}")
        params = tuple(
            float(tok) for tok in m.group("params").split(",")
        ) if m.group("params") else ()
        targets = tuple(int(t) for t in re.findall(r"q\[(\d+)\]", m.group("args")))
        if len(params) != GATE_PARAMS[name]:
            raise QasmError(f"{name} expects {GATE_PARAMS[name]} parameters")
        gates.append(GateSpec(name, targets, params))
    if n_qubits is None:
        raise QasmError("missing qubit register declaration")
    try:
        return Circuit(n_qubits, tuple(gates))
    except CircuitError as exc:
        raise QasmError(str(exc)) from exc
