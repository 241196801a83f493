"""Measurement-angle optimization for Bell-operator expectations.

The main routine is a see-saw coordinate ascent: the objective is linear in
each measurement direction, so every update is an exact maximization over
the Bloch sphere (set the direction to the normalized coefficient vector).
The objective never decreases, and restarts from random settings absorb
local maxima and the overall sign ambiguity.

Everything is phrased in terms of the state's Pauli correlation tensor
R[a1..aN] = Tr(rho sigma_a1 x ... x sigma_aN), so a full sweep costs a few
small tensor contractions regardless of Hilbert-space dimension.

Two independent oracles are provided for validation: the closed-form
Horodecki criterion for CHSH, and an exact exhaustive maximum over a finite
angle lattice (computed with branch-and-bound pruning, which cannot change
the result, only the runtime).
"""

from __future__ import annotations

import string
from dataclasses import dataclass

import numpy as np

from .inequality import CoefficientTable, InequalityError, MeasurementSettings
from .qstate import DensityMatrix, PAULIS, StateVector

DEGENERATE_NORM = 1e-12


class OptimizeError(ValueError):
    """Raised for dimension mismatches or corrupted inputs."""


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 10
    max_iterations: int = 200
    tolerance: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise OptimizeError("restarts must be >= 1")
        if self.max_iterations < 1:
            raise OptimizeError("max_iterations must be >= 1")


@dataclass(frozen=True)
class ViolationResult:
    value: float
    settings: MeasurementSettings
    violated_classical: bool
    violation_margin: float
    restarts_used: int
    iterations: int
    converged: bool


# ---------------------------------------------------------------------------
# Correlation tensors

def _subscripts(n: int):
    letters = string.ascii_lowercase
    paulis = letters[:n]
    kets = letters[n:2 * n]
    bras = letters[2 * n:3 * n]
    return paulis, kets, bras


def correlation_tensors_pure(psis: np.ndarray, n: int) -> np.ndarray:
    """Batched R[b, a1..aN] = <psi_b| P_a1 x .. x P_aN |psi_b> (real)."""
    psis = np.asarray(psis, dtype=complex).reshape(-1, *([2] * n))
    p, k, b = _subscripts(n)
    ops = ",".join(f"{p[i]}{b[i]}{k[i]}" for i in range(n))
    sub = f"A{b},{ops},A{k}->A{p}"
    out = np.einsum(sub, psis.conj(), *([PAULIS] * n), psis, optimize=True)
    return np.ascontiguousarray(out.real)


def correlation_tensors_mixed(rhos: np.ndarray, n: int) -> np.ndarray:
    """Batched R[b, a1..aN] = Tr(rho_b P_a1 x .. x P_aN) (real)."""
    rhos = np.asarray(rhos, dtype=complex).reshape(-1, *([2] * (2 * n)))
    p, k, b = _subscripts(n)
    ops = ",".join(f"{p[i]}{k[i]}{b[i]}" for i in range(n))
    sub = f"A{b}{k},{ops}->A{p}"
    out = np.einsum(sub, rhos, *([PAULIS] * n), optimize=True)
    return np.ascontiguousarray(out.real)


def correlation_tensor(state) -> np.ndarray:
    if isinstance(state, StateVector):
        return correlation_tensors_pure(state.amps[None], state.n_qubits)[0]
    if isinstance(state, DensityMatrix):
        return correlation_tensors_mixed(state.mat[None], state.n_qubits)[0]
    raise OptimizeError(f"unsupported state type {type(state)!r}")


# ---------------------------------------------------------------------------
# See-saw coordinate ascent

def random_directions(rng: np.random.Generator, shape) -> np.ndarray:
    """Uniform unit vectors on the sphere with the given leading shape."""
    v = rng.standard_normal(tuple(shape) + (3,))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def seesaw_batch(
    R: np.ndarray,
    table: CoefficientTable,
    cfg: OptimizerConfig,
    init_dirs: np.ndarray,
):
    """Run see-saw on a batch of correlation tensors.

    R has shape (B, 3, .., 3); init_dirs has shape (B, restarts, N, 2, 3).
    Returns (values, directions, iterations, converged) where values is the
    per-state best |<O>| over restarts and directions has shape (B, N, 2, 3).

    Each (state, restart) trajectory depends only on its own data, so
    results are independent of how states are grouped into batches.
    """
    n = table.n_parties
    if R.ndim != n + 1 or R.shape[1:] != (3,) * n:
        raise OptimizeError(f"correlation tensor shape {R.shape} does not match N={n}")
    if not np.all(np.isfinite(R)):
        raise OptimizeError("non-finite correlation tensor (corrupted state)")
    C = table.tensor()
    B, rst = init_dirs.shape[:2]
    M = np.array(init_dirs, dtype=float)

    p, k, _ = _subscripts(n)
    cflat = np.ascontiguousarray(C.reshape(-1))

    def contract(T, tsub, j):
        """Trade party j's Pauli axis for a setting axis (contract with M)."""
        out = tsub.replace(p[j], k[j])
        if "B" not in out:
            out = "AB" + out[1:]
        sub = f"{tsub},AB{k[j]}{p[j]}->{out}"
        return np.einsum(sub, T, M[:, :, j], optimize=True), out

    def update(i, G, gsub):
        """Exact sphere maximization of both settings of party i."""
        v = np.einsum(f"{gsub},{k}->AB{k[i]}{p[i]}", G, C, optimize=True)
        norm = np.linalg.norm(v, axis=-1, keepdims=True)
        ok = active[..., None, None] & (norm > DEGENERATE_NORM)
        M[:, :, i] = np.where(ok, np.divide(v, norm, where=norm > 0), M[:, :, i])

    active = np.ones((B, rst), dtype=bool)
    T, tsub = R, "A" + p
    for j in range(n - 1, -1, -1):
        T, tsub = contract(T, tsub, j)
    F_prev = T.reshape(B, rst, -1) @ cflat
    iters = np.full((B, rst), cfg.max_iterations, dtype=int)
    for sweep in range(1, cfg.max_iterations + 1):
        if not active.any():
            break
        # Party 0's linear coefficients come from contracting every other
        # party; for party i > 0 we reuse a prefix P holding the already
        # updated parties 0..i-1 and contract only the trailing ones.
        T, tsub = R, "A" + p
        for j in range(n - 1, 0, -1):
            T, tsub = contract(T, tsub, j)
        update(0, T, tsub)
        P, psub = contract(R, "A" + p, 0)
        for i in range(1, n):
            T, tsub = P, psub
            for j in range(n - 1, i, -1):
                T, tsub = contract(T, tsub, j)
            update(i, T, tsub)
            if i < n - 1:
                P, psub = contract(P, psub, i)
        E, _ = contract(T, tsub, n - 1)
        F = E.reshape(B, rst, -1) @ cflat
        imp = F - F_prev
        if imp.min() < -1e-9:
            raise OptimizeError(f"see-saw objective decreased by {-imp.min()}")
        newly = active & (imp < cfg.tolerance)
        iters[newly] = sweep
        active &= ~newly
        F_prev = F

    values = np.abs(F_prev)
    best = np.argmax(values, axis=1)
    rows = np.arange(B)
    return (
        values[rows, best],
        M[rows, best],
        iters[rows, best],
        ~active[rows, best],
    )


def seesaw_maximize(state, table: CoefficientTable, cfg: OptimizerConfig | None = None) -> ViolationResult:
    """Best measurement settings for one state, over cfg.restarts starts."""
    cfg = cfg or OptimizerConfig()
    n_qubits = state.n_qubits
    if n_qubits != table.n_parties:
        raise OptimizeError(
            f"state has {n_qubits} qubits, table has {table.n_parties} parties"
        )
    R = correlation_tensor(state)[None]
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    init = random_directions(rng, (1, cfg.restarts, table.n_parties, 2))
    values, dirs, iters, conv = seesaw_batch(R, table, cfg, init)
    value = float(values[0])
    if value > table.quantum_bound + 1e-6:
        raise OptimizeError(
            f"optimized value {value} exceeds quantum bound {table.quantum_bound}"
        )
    return ViolationResult(
        value=value,
        settings=MeasurementSettings.from_directions(dirs[0]),
        violated_classical=value > table.classical_bound + 1e-9,
        violation_margin=value - table.classical_bound,
        restarts_used=cfg.restarts,
        iterations=int(iters[0]),
        converged=bool(conv[0]),
    )


# ---------------------------------------------------------------------------
# Closed-form CHSH oracle (Horodecki criterion)

def chsh_horodecki(rho: DensityMatrix) -> float:
    """Maximal CHSH value of a two-qubit state in the 1/2-normalization.

    Builds T_ab = Tr(rho sigma_a x sigma_b) and returns sqrt(u1 + u2) with
    u1 >= u2 the two largest eigenvalues of T^T T.
    """
    if rho.n_qubits != 2:
        raise OptimizeError("Horodecki criterion applies to two-qubit states")
    rt = rho.mat.reshape(2, 2, 2, 2)
    T = np.einsum("ikjl,aji,blk->ab", rt, PAULIS, PAULIS).real
    u = np.linalg.eigvalsh(T.T @ T)
    return float(np.sqrt(u[-1] + u[-2]))


# ---------------------------------------------------------------------------
# Exact lattice-search oracle

def _lattice_directions(step: float) -> np.ndarray:
    m = round(np.pi / step)
    if m < 1 or abs(np.pi / m - step) > 1e-12:
        raise OptimizeError(f"step {step} does not divide pi")
    thetas = np.arange(m + 1) * step
    phis = np.arange(2 * m) * step
    th, ph = np.meshgrid(thetas, phis, indexing="ij")
    d = np.stack(
        [np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1
    ).reshape(-1, 3)
    # Deduplicate the phi-degenerate poles.
    _, idx = np.unique(np.round(d, 10), axis=0, return_index=True)
    return d[np.sort(idx)]


def _hemisphere(D: np.ndarray) -> np.ndarray:
    """Representatives of each +/- direction pair (lexicographic z, x, y)."""
    eps = 1e-12
    z, x, y = D[:, 2], D[:, 0], D[:, 1]
    keep = (z > eps) | ((np.abs(z) <= eps) & (x > eps)) | (
        (np.abs(z) <= eps) & (np.abs(x) <= eps) & (y > eps)
    )
    return D[keep]


def _slot_pairs(Dh: np.ndarray, D: np.ndarray) -> np.ndarray:
    """All (setting-0 in hemisphere, setting-1 anywhere) pairs, (P, 2, 3)."""
    i, j = np.meshgrid(np.arange(len(Dh)), np.arange(len(D)), indexing="ij")
    return np.stack([Dh[i.ravel()], D[j.ravel()]], axis=1)


def _grid_max_2(R: np.ndarray, C: np.ndarray, D: np.ndarray, Dh: np.ndarray) -> float:
    # w_l = sum_k C[k, l] R^T n1_k; F = sum_l max_d d . w_l
    P0 = Dh @ R  # (Lh, 3)
    P1 = D @ R
    total = np.zeros((len(Dh), len(D)))
    for setting in (0, 1):
        W = (
            C[0, setting] * P0[:, None, :] + C[1, setting] * P1[None, :, :]
        )
        total += (W @ D.T).max(axis=-1)
    return float(total.max())


def _grid_max_3(
    R: np.ndarray, C: np.ndarray, D: np.ndarray, Dh: np.ndarray, incumbent: float
) -> float:
    """Exact lattice max for N=3 with bound-based pruning.

    The last party's two settings are maximized in closed form over the
    lattice (exactly equivalent to enumerating them).  An achieved lattice
    value is used as incumbent; combinations whose norm upper bound cannot
    exceed it are skipped, which never changes the maximum.
    """
    X = _slot_pairs(Dh, D)  # party-1 setting pairs, (Nx, 2, 3); party 2 same
    K = np.einsum("kml,abc->kamblc", C, R)
    A = np.einsum("xka,kamblc->xmblc", X, K).reshape(len(X), 6, 6)
    Yf = X.reshape(len(X), 6)
    # Per-row bound: F <= |w0| + |w1| <= sqrt(2) |A^T y| <= 2 sigma_max(A)
    # since |y|^2 = |n20|^2 + |n21|^2 = 2.
    s6 = np.linalg.svd(A, compute_uv=False)[:, 0]
    best = incumbent
    order = np.argsort(-s6)
    live = order[2.0 * s6[order] > best - 1e-9]
    chunk = 16
    for lo in range(0, len(live), chunk):
        idx = live[lo:lo + chunk]
        idx = idx[2.0 * s6[idx] > best - 1e-9]  # re-check against updated best
        if idx.size == 0:
            break  # sorted by bound: nothing later can survive either
        W = np.matmul(Yf, A[idx])  # (cx, Ny, 6) with axis 2 = (l, c)
        b0 = np.sqrt(np.einsum("xyc,xyc->xy", W[..., :3], W[..., :3]))
        b1 = np.sqrt(np.einsum("xyc,xyc->xy", W[..., 3:], W[..., 3:]))
        cand = (b0 + b1) > best - 1e-9
        if not cand.any():
            continue
        Wc = W[cand].reshape(-1, 2, 3)
        vals = (Wc @ D.T).max(axis=-1).reshape(-1, 2).sum(axis=1)
        if vals.size:
            best = max(best, float(vals.max()))
    return best


def grid_oracle(state, table: CoefficientTable, step: float) -> float:
    """Exact maximum of the Bell value over a finite angle lattice.

    theta runs over {0, step, .., pi} and phi over {0, step, .., 2pi - step}
    for every party and setting.  The result is a lower bound on the true
    optimum.  Supported for N <= 3.
    """
    n = table.n_parties
    if n > 3:
        raise OptimizeError("lattice oracle supported for N <= 3")
    R = correlation_tensor(state)
    C = table.tensor()
    D = _lattice_directions(step)
    Dh = _hemisphere(D)
    if n == 2:
        return _grid_max_2(R, C, D, Dh)
    # Coarse-to-fine incumbent seeding: coarser lattices are sub-lattices of
    # the requested one, so their maxima are achieved lattice values.
    m = round(np.pi / step)
    incumbent = -np.inf
    for factor in (8, 4, 2):
        if m % factor == 0 and m // factor >= 2:
            cd = _lattice_directions(step * factor)
            incumbent = _grid_max_3(R, C, cd, _hemisphere(cd), incumbent)
    return _grid_max_3(R, C, D, Dh, incumbent)
