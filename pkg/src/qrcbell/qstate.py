"""Dense linear algebra for multi-qubit states.

Pure states are stored as flat complex amplitude vectors, mixed states as
full density matrices.  Qubit 0 is the most-significant bit of the
computational-basis index throughout the package, so ``|10>`` on two qubits
is index 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-10
HERM_TOL = 1e-10
EIG_TOL = 1e-9

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# x, y, z stack used for Bloch-vector contractions.
PAULIS = np.stack([PAULI_X, PAULI_Y, PAULI_Z])


class QStateError(ValueError):
    """Raised for invalid states, operators, or qubit targets."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


def _check_targets(targets, n_qubits: int) -> tuple[int, ...]:
    targets = tuple(int(t) for t in targets)
    if len(set(targets)) != len(targets):
        raise QStateError(f"duplicate targets {targets}")
    if any(t < 0 or t >= n_qubits for t in targets):
        raise QStateError(f"targets {targets} out of range for {n_qubits} qubits")
    return targets


def _check_unitary(U: np.ndarray, tol: float = NORM_TOL) -> np.ndarray:
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise QStateError(f"operator shape {U.shape} is not square")
    d = U.shape[0]
    if d & (d - 1) or d == 0:
        raise QStateError(f"operator dimension {d} is not a power of two")
    if np.max(np.abs(U.conj().T @ U - np.eye(d))) > tol:
        raise QStateError("operator is not unitary")
    return U


@dataclass(frozen=True)
class StateVector:
    """Pure n-qubit state; amplitudes normalized to one."""

    n_qubits: int
    amps: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        if self.n_qubits < 1 or amps.size != 2 ** self.n_qubits:
            raise QStateError(
                f"{amps.size} amplitudes do not match {self.n_qubits} qubits"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-8:
            raise QStateError(f"state norm {norm} is not 1")
        object.__setattr__(self, "amps", _freeze(amps))

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        amps = np.zeros(2 ** n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def from_amplitudes(cls, amps) -> "StateVector":
        amps = np.asarray(amps, dtype=complex).reshape(-1)
        n = int(np.log2(amps.size))
        if 2 ** n != amps.size:
            raise QStateError("amplitude count is not a power of two")
        return cls(n, amps / np.linalg.norm(amps))

    def tensor(self) -> np.ndarray:
        return self.amps.reshape((2,) * self.n_qubits)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace n-qubit density matrix."""

    n_qubits: int
    mat: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.mat, dtype=complex)
        dim = 2 ** self.n_qubits
        if self.n_qubits < 1 or mat.shape != (dim, dim):
            raise QStateError(f"matrix shape {mat.shape} does not match {self.n_qubits} qubits")
        if np.max(np.abs(mat - mat.conj().T)) > HERM_TOL:
            raise QStateError("density matrix is not Hermitian")
        if abs(np.trace(mat).real - 1.0) > 1e-8:
            raise QStateError(f"trace {np.trace(mat)} is not 1")
        object.__setattr__(self, "mat", _freeze(mat))

    def validate_positive(self, tol: float = EIG_TOL) -> None:
        ev = np.linalg.eigvalsh(self.mat)
        if ev.min() < -tol:
            raise QStateError(f"negative eigenvalue {ev.min()}")

    @classmethod
    def maximally_mixed(cls, n_qubits: int) -> "DensityMatrix":
        dim = 2 ** n_qubits
        return cls(n_qubits, np.eye(dim, dtype=complex) / dim)


@dataclass(frozen=True)
class HermitianObservable:
    """Hermitian operator on ``arity`` qubits."""

    arity: int
    mat: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.mat, dtype=complex)
        dim = 2 ** self.arity
        if mat.shape != (dim, dim):
            raise QStateError(f"observable shape {mat.shape} does not match arity {self.arity}")
        if np.max(np.abs(mat - mat.conj().T)) > 1e-12:
            raise QStateError("observable is not Hermitian")
        object.__setattr__(self, "mat", _freeze(mat))


def to_density(psi: StateVector) -> DensityMatrix:
    return DensityMatrix(psi.n_qubits, np.outer(psi.amps, psi.amps.conj()))


def apply_unitary(state: StateVector, U: np.ndarray, targets) -> StateVector:
    """Apply a 2^k x 2^k unitary to the listed qubits of a pure state."""
    targets = _check_targets(targets, state.n_qubits)
    U = _check_unitary(U)
    k = len(targets)
    if U.shape[0] != 2 ** k:
        raise QStateError(f"unitary dim {U.shape[0]} does not match {k} targets")
    psi = state.tensor()
    Ut = U.reshape((2,) * (2 * k))
    psi = np.tensordot(Ut, psi, axes=(list(range(k, 2 * k)), targets))
    psi = np.moveaxis(psi, list(range(k)), targets)
    return StateVector(state.n_qubits, psi.reshape(-1))


def _one_sided(mat: np.ndarray, rho_t: np.ndarray, targets, n: int, side: str) -> np.ndarray:
    """Multiply `mat` onto the row (side='l') or column (side='r') indices."""
    k = len(targets)
    mt = mat.reshape((2,) * (2 * k))
    if side == "l":
        axes = list(targets)
        out = np.tensordot(mt, rho_t, axes=(list(range(k, 2 * k)), axes))
        return np.moveaxis(out, list(range(k)), axes)
    axes = [n + t for t in targets]
    out = np.tensordot(rho_t, mt.conj(), axes=(axes, list(range(k, 2 * k))))
    # tensordot appended the new column axes at the end; restore positions.
    return np.moveaxis(out, list(range(2 * n - k, 2 * n)), axes)


def apply_unitary_rho(rho: DensityMatrix, U: np.ndarray, targets) -> DensityMatrix:
    """rho -> U rho U^dagger on the listed qubits."""
    targets = _check_targets(targets, rho.n_qubits)
    U = _check_unitary(U)
    n = rho.n_qubits
    t = rho.mat.reshape((2,) * (2 * n))
    t = _one_sided(U, t, targets, n, "l")
    t = _one_sided(U, t, targets, n, "r")
    return DensityMatrix(n, t.reshape(2 ** n, 2 ** n))


def apply_kraus(rho: DensityMatrix, kraus, targets) -> DensityMatrix:
    """rho -> sum_i K_i rho K_i^dagger on the listed qubits."""
    targets = _check_targets(targets, rho.n_qubits)
    kraus = [np.asarray(K, dtype=complex) for K in kraus]
    if not kraus:
        raise QStateError("empty Kraus set")
    dim = kraus[0].shape[0]
    comp = sum(K.conj().T @ K for K in kraus)
    if np.max(np.abs(comp - np.eye(dim))) > NORM_TOL:
        raise QStateError("Kraus operators do not resolve the identity")
    n = rho.n_qubits
    t = rho.mat.reshape((2,) * (2 * n))
    acc = np.zeros_like(t)
    for K in kraus:
        term = _one_sided(K, t, targets, n, "l")
        acc = acc + _one_sided(K, term, targets, n, "r")
    return DensityMatrix(n, acc.reshape(2 ** n, 2 ** n))


def depolarizing_kraus(p: float, n_targets: int = 1) -> list[np.ndarray]:
    """Kraus set of the n-qubit depolarizing channel.

    Single qubit: {sqrt(1-3p/4) I, sqrt(p/4) X, Y, Z}; the k-qubit version
    puts weight p/4^k on every non-identity Pauli product.
    """
    if not 0.0 <= p <= 1.0:
        raise QStateError(f"depolarizing parameter {p} outside [0, 1]")
    ops = [I2, PAULI_X, PAULI_Y, PAULI_Z]
    prods = [np.array([[1.0]], dtype=complex)]
    for _ in range(n_targets):
        prods = [np.kron(a, b) for a in prods for b in ops]
    dim = 4 ** n_targets
    out = []
    for i, P in enumerate(prods):
        w = 1.0 - (dim - 1) * p / dim if i == 0 else p / dim
        if w > 0:
            out.append(np.sqrt(w) * P)
    return out


def depolarize(rho: DensityMatrix, p: float, targets) -> DensityMatrix:
    """Depolarizing channel via the Pauli-twirl identity.

    Equivalent to ``apply_kraus`` with ``depolarizing_kraus`` (the uniform
    Pauli average on k qubits is total depolarization), but O(4^n) instead
    of O(16^k 4^n).
    """
    targets = _check_targets(targets, rho.n_qubits)
    if not 0.0 <= p <= 1.0:
        raise QStateError(f"depolarizing parameter {p} outside [0, 1]")
    if p == 0.0:
        return rho
    n = rho.n_qubits
    k = len(targets)
    t = rho.mat.reshape((2,) * (2 * n))
    reduced = t
    for q in sorted(targets, reverse=True):
        reduced = np.trace(reduced, axis1=q, axis2=reduced.ndim // 2 + q)
    # Re-embed identity/2^k on the traced qubits.
    eye = np.eye(2 ** k).reshape((2,) * (2 * k)) / 2 ** k
    mixed = np.transpose(np.multiply.outer(eye, reduced), _embed_perm(n, targets))
    out = (1.0 - p) * t + p * mixed
    return DensityMatrix(n, out.reshape(2 ** n, 2 ** n))


def _embed_perm(n: int, targets) -> list[int]:
    """Axis permutation mapping (t_rows, t_cols, rest_rows, rest_cols) to
    interleaved (rows..., cols...) order."""
    k = len(targets)
    rest = [q for q in range(n) if q not in targets]
    src = {}
    for i, q in enumerate(targets):
        src[q] = i
        src[n + q] = k + i
    for i, q in enumerate(rest):
        src[q] = 2 * k + i
        src[n + q] = 2 * k + (n - k) + i
    return [src[a] for a in range(2 * n)]


def partial_trace(rho: DensityMatrix, keep) -> DensityMatrix:
    """Reduced density matrix over the listed qubits (in the given order)."""
    keep = tuple(int(q) for q in keep)
    if not keep:
        raise QStateError("empty keep list")
    _check_targets(keep, rho.n_qubits)
    n = rho.n_qubits
    t = rho.mat.reshape((2,) * (2 * n))
    drop = [q for q in range(n) if q not in keep]
    for q in sorted(drop, reverse=True):
        # Axis positions shift as axes are consumed only for higher indices,
        # so trace from the highest qubit down.
        t = np.trace(t, axis1=q, axis2=t.ndim // 2 + q)
    # Remaining row axes are the kept qubits in increasing order.
    inc = sorted(keep)
    perm = [inc.index(q) for q in keep]
    k = len(keep)
    t = np.transpose(t, perm + [k + p for p in perm])
    return DensityMatrix(k, t.reshape(2 ** k, 2 ** k))


def expectation(rho: DensityMatrix, obs: HermitianObservable) -> float:
    if obs.arity != rho.n_qubits:
        raise QStateError(
            f"observable arity {obs.arity} does not match {rho.n_qubits} qubits"
        )
    val = np.einsum("ij,ji->", rho.mat, obs.mat)
    if abs(val.imag) > 1e-9:
        raise QStateError(f"expectation has imaginary residue {val.imag}")
    return float(val.real)


def purity(rho: DensityMatrix) -> float:
    return float(np.einsum("ij,ji->", rho.mat, rho.mat).real)
