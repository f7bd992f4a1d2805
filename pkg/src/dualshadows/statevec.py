"""Dense statevector engine: gates, Pauli rotations, sampling, ground states.

Amplitude index convention: qubit 0 is the least significant bit of the
basis-state index.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .pauli import PauliString

MAX_QUBITS = 24

H_GATE = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S_GATE = np.array([[1, 0], [0, 1j]], dtype=complex)
CLIFFORD_1Q = {"H": H_GATE, "S": S_GATE, "I": np.eye(2, dtype=complex)}


class StateVector:
    """Mutable dense state over n qubits (single owning writer)."""

    def __init__(self, n: int, amps: np.ndarray | None = None):
        if n > MAX_QUBITS:
            raise ValueError(f"{n} qubits exceeds cap of {MAX_QUBITS}")
        self.n = n
        if amps is None:
            self.amps = np.zeros(1 << n, dtype=complex)
            self.amps[0] = 1.0
        else:
            amps = np.asarray(amps, dtype=complex)
            if amps.shape != (1 << n,):
                raise ValueError("amplitude array has wrong length")
            self.amps = amps.copy()

    def copy(self) -> "StateVector":
        return StateVector(self.n, self.amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalize(self) -> None:
        self.amps /= np.linalg.norm(self.amps)

    def dump(self) -> bytes:
        """Little-endian complex doubles, qubit 0 = least significant bit."""
        return self.amps.astype("<c16").tobytes()

    @classmethod
    def load(cls, n: int, raw: bytes) -> "StateVector":
        return cls(n, np.frombuffer(raw, dtype="<c16"))


def _pauli_phases(n: int, p: PauliString) -> tuple[np.ndarray, complex]:
    """Sign vector s[b] and scalar c with (P v)[b] = c * s[b] * v[b ^ x]."""
    idx = np.arange(1 << n, dtype=np.uint32)
    par = np.bitwise_count((idx ^ np.uint32(p.x)) & np.uint32(p.z)) & 1
    signs = 1.0 - 2.0 * par.astype(np.float64)
    w_y = bin(p.x & p.z).count("1")
    return signs, (1j) ** ((p.phase + w_y) % 4)


def apply_pauli(state: StateVector, p: PauliString) -> None:
    """state <- P state (in place)."""
    if p.n != state.n:
        raise ValueError("qubit count mismatch")
    signs, c = _pauli_phases(state.n, p)
    if p.x:
        idx = np.arange(1 << state.n, dtype=np.intp) ^ p.x
        state.amps = c * signs * state.amps[idx]
    else:
        state.amps = c * signs * state.amps


def pauli_matvec(n: int, p: PauliString, v: np.ndarray) -> np.ndarray:
    signs, c = _pauli_phases(n, p)
    if p.x:
        idx = np.arange(1 << n, dtype=np.intp) ^ p.x
        return c * signs * v[idx]
    return c * signs * v


def apply_pauli_rotation(state: StateVector, p: PauliString, theta: float) -> None:
    """state <- exp(i * theta/2 * P) state; requires Hermitian P."""
    if not p.is_hermitian():
        raise ValueError(f"rotation generator must be Hermitian, got phase i^{p.phase}")
    if theta == 0.0:
        return
    half = 0.5 * theta
    pv = pauli_matvec(state.n, p, state.amps)
    state.amps = np.cos(half) * state.amps + (1j * np.sin(half)) * pv


def _axes_view(state: StateVector, qubits: tuple[int, ...]) -> np.ndarray:
    """Reshape amps to [2]*n with listed qubits as the leading axes."""
    t = state.amps.reshape([2] * state.n)
    # axis k of the reshape corresponds to qubit n-1-k
    axes = [state.n - 1 - q for q in qubits]
    return np.moveaxis(t, axes, range(len(qubits)))


def apply_1q(state: StateVector, q: int, u: np.ndarray) -> None:
    if not 0 <= q < state.n:
        raise IndexError("qubit out of range")
    view = _axes_view(state, (q,))
    res = np.tensordot(u, view, axes=([1], [0]))
    state.amps = np.moveaxis(res, 0, state.n - 1 - q).reshape(-1).copy()


def apply_clifford_1q(state: StateVector, q: int, which: str) -> None:
    apply_1q(state, q, CLIFFORD_1Q[which])


def apply_2q(state: StateVector, q1: int, q2: int, u: np.ndarray) -> None:
    """Apply 4x4 u in the |b_q1 b_q2> basis (q1 the more significant label)."""
    if q1 == q2:
        raise ValueError("qubits must differ")
    view = _axes_view(state, (q1, q2))
    res = np.tensordot(u.reshape(2, 2, 2, 2), view, axes=([2, 3], [0, 1]))
    res = np.moveaxis(res, (0, 1), (state.n - 1 - q1, state.n - 1 - q2))
    state.amps = res.reshape(-1).copy()


def apply_cnot(state: StateVector, control: int, target: int) -> None:
    cnot = np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    )
    apply_2q(state, control, target, cnot)


def expectation(state: StateVector, p: PauliString) -> float:
    if not p.is_hermitian():
        raise ValueError("expectation needs a Hermitian Pauli string")
    val = np.vdot(state.amps, pauli_matvec(state.n, p, state.amps))
    if abs(val.imag) > 1e-10:
        raise RuntimeError(f"non-real expectation {val}: phase bookkeeping bug")
    return float(val.real)


def probabilities(state: StateVector) -> np.ndarray:
    p = np.abs(state.amps) ** 2
    return p / p.sum()


def sample(state: StateVector, rng: np.random.Generator) -> int:
    """One computational-basis outcome, as an integer bit pattern."""
    cdf = np.cumsum(probabilities(state))
    return int(np.searchsorted(cdf, rng.random(), side="right"))


def sample_many(state: StateVector, rng: np.random.Generator, nshots: int) -> np.ndarray:
    cdf = np.cumsum(probabilities(state))
    return np.searchsorted(cdf, rng.random(nshots), side="right").astype(np.int64)


# -- Hamiltonians and ground states -----------------------------------


@dataclass
class HamiltonianSpec:
    """Term list sum_k coeff_k * P_k on n qubits plus sector constraints."""

    n: int
    terms: list[tuple[float, PauliString]]
    side: str  # "LGT" or "Ising"
    g: float
    constraints: list[PauliString]

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros_like(v)
        for c, p in self.terms:
            out += c * pauli_matvec(self.n, p, v)
        return out


def project_sector(n: int, constraints: list[PauliString], v: np.ndarray) -> np.ndarray:
    for c in constraints:
        v = 0.5 * (v + pauli_matvec(n, c, v))
    return v


def ground_state(
    h: HamiltonianSpec,
    seed: int = 1234,
    tol: float = 1e-12,
    maxiter: int = 100_000,
) -> StateVector:
    """Lowest state of h within the joint +1 eigenspace of its constraints."""
    n = h.n
    for a, b in zip(h.constraints, h.constraints[1:]):
        if not a.commutes(b):
            raise ValueError("sector constraints must commute")
    dim = 1 << n

    def op(v):
        v = project_sector(n, h.constraints, v)
        v = h.matvec(v)
        return project_sector(n, h.constraints, v)

    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    v0 = project_sector(n, h.constraints, v0)
    nv = np.linalg.norm(v0)
    if nv < 1e-12:
        raise ValueError("empty sector: projector annihilates generic vectors")
    v0 /= nv

    if dim <= 512:
        idn = np.eye(dim, dtype=complex)
        mat = np.column_stack([op(idn[:, k]) for k in range(dim)])
        evals, evecs = np.linalg.eigh(mat)
        k0 = int(np.argmin(evals))
        vec = evecs[:, k0]
        # deterministic gauge: make the largest amplitude real positive
        j = int(np.argmax(np.abs(vec)))
        vec = vec * (np.conj(vec[j]) / abs(vec[j]))
    else:
        lin = spla.LinearOperator((dim, dim), matvec=op, dtype=complex)
        evals, evecs = spla.eigsh(lin, k=1, which="SA", v0=v0, tol=tol, maxiter=maxiter)
        vec = evecs[:, 0]
    vec = project_sector(n, h.constraints, vec)
    nv = np.linalg.norm(vec)
    if nv < 0.5:
        raise RuntimeError("eigensolver converged outside the requested sector")
    state = StateVector(n, vec / nv)

    e = expectation_of_terms(state, h.terms)
    hv = h.matvec(state.amps)
    e2 = float(np.vdot(hv, hv).real)
    if e2 - e * e > 1e-8:
        raise RuntimeError(f"ground state energy variance {e2 - e * e:.2e} too large")
    return state


def expectation_of_terms(state: StateVector, terms) -> float:
    return float(
        sum(c * expectation(state, p) for c, p in terms)
    )
