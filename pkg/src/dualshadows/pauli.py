"""Phase-exact Pauli string algebra on n qubits.

Strings are stored in symplectic form: two n-bit masks (x, z) plus a power
of i. Qubit j carries I/X/Y/Z according to (x_j, z_j) = (0,0)/(1,0)/(1,1)/(0,1)
and the full operator is i**phase * prod_j P_j with the honest (Hermitian) Y.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PHASE_TAGS = {"+1": 0, "+i": 1, "-1": 2, "-i": 3}
TAG_OF_PHASE = {v: k for k, v in PHASE_TAGS.items()}

_SIGMA = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliString:
    n: int
    x: int = 0
    z: int = 0
    phase: int = 0  # exponent k of i**k

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("negative qubit count")
        mask = (1 << self.n) - 1
        if (self.x | self.z) & ~mask:
            raise ValueError("mask exceeds qubit count")
        object.__setattr__(self, "phase", self.phase % 4)

    # -- constructors -------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n, 0, 0, 0)

    @classmethod
    def from_ops(cls, n: int, ops: dict[int, str], phase: int = 0) -> "PauliString":
        x = z = 0
        for q, label in ops.items():
            if not 0 <= q < n:
                raise ValueError(f"qubit {q} out of range for n={n}")
            if label == "X":
                x |= 1 << q
            elif label == "Y":
                x |= 1 << q
                z |= 1 << q
            elif label == "Z":
                z |= 1 << q
            elif label != "I":
                raise ValueError(f"unknown Pauli label {label!r}")
        return cls(n, x, z, phase)

    @classmethod
    def from_text(cls, text: str, n: int) -> "PauliString":
        """Parse e.g. '+1 X3 Z7' or '-i Y0 Y2' (0-based qubits)."""
        parts = text.split()
        if not parts:
            raise ValueError("empty Pauli text")
        if parts[0] not in PHASE_TAGS:
            raise ValueError(f"missing phase tag in {text!r}")
        phase = PHASE_TAGS[parts[0]]
        ops: dict[int, str] = {}
        for tok in parts[1:]:
            label, q = tok[0], int(tok[1:])
            if q in ops:
                raise ValueError(f"duplicate qubit {q} in {text!r}")
            ops[q] = label
        return cls.from_ops(n, ops, phase)

    # -- queries ------------------------------------------------------

    def op_at(self, q: int) -> str:
        xb, zb = (self.x >> q) & 1, (self.z >> q) & 1
        return "IXZY"[xb + 2 * zb] if (xb, zb) != (1, 1) else "Y"

    def support(self) -> list[int]:
        m = self.x | self.z
        return [q for q in range(self.n) if (m >> q) & 1]

    def weights(self) -> tuple[int, int, int, int]:
        """(w_I, w_X, w_Y, w_Z)."""
        w_y = _popcount(self.x & self.z)
        w_x = _popcount(self.x & ~self.z)
        w_z = _popcount(self.z & ~self.x)
        return self.n - w_x - w_y - w_z, w_x, w_y, w_z

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    @property
    def w_xy(self) -> int:
        return _popcount(self.x)

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def is_hermitian(self) -> bool:
        return self.phase % 2 == 0

    def phase_value(self) -> complex:
        return (1, 1j, -1, -1j)[self.phase]

    # -- algebra ------------------------------------------------------

    def mul(self, other: "PauliString") -> "PauliString":
        if self.n != other.n:
            raise ValueError("qubit count mismatch")
        x1, z1, x2, z2 = self.x, self.z, other.x, other.z
        k = (
            self.phase
            + other.phase
            + _popcount(x1 & z1)
            + _popcount(x2 & z2)
            + 2 * _popcount(z1 & x2)
            - _popcount((x1 ^ x2) & (z1 ^ z2))
        )
        return PauliString(self.n, x1 ^ x2, z1 ^ z2, k % 4)

    def __mul__(self, other: "PauliString") -> "PauliString":
        return self.mul(other)

    def scaled(self, phase_step: int) -> "PauliString":
        """Multiply by i**phase_step."""
        return PauliString(self.n, self.x, self.z, self.phase + phase_step)

    def commutes(self, other: "PauliString") -> bool:
        if self.n != other.n:
            raise ValueError("qubit count mismatch")
        return (_popcount(self.x & other.z) + _popcount(self.z & other.x)) % 2 == 0

    # -- conversions --------------------------------------------------

    def to_text(self) -> str:
        toks = [TAG_OF_PHASE[self.phase]]
        for q in self.support():
            toks.append(f"{self.op_at(q)}{q}")
        return " ".join(toks)

    def to_matrix(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix; qubit 0 is the least significant bit."""
        m = np.array([[self.phase_value()]])
        for q in range(self.n - 1, -1, -1):
            m = np.kron(m, _SIGMA[self.op_at(q)])
        return m

    def __str__(self) -> str:
        return self.to_text()
