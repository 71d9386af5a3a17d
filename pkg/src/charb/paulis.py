"""Multi-qubit Pauli strings and the normalized Pauli (Liouville) basis.

Everything downstream works in the basis ``{sigma_0} ∪ sigma_q`` of normalized
Hermitian Paulis ``sigma = 2**(-q/2) * P`` with ``P`` a tensor product of
``{1, X, Y, Z}``.  The basis is ordered lexicographically with ``I < X < Y < Z``
on each factor and the leftmost qubit most significant, so the identity string
(the trace direction ``sigma_0``) is always index 0.  Density matrices become
real coefficient vectors ``|rho>>`` and POVM effects become covectors ``<<Q|``;
``tr(Q E(rho)) = <<Q| R |rho>>`` for a transfer matrix ``R``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

MAX_QUBITS = 3

_PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

_ORDER = "IXYZ"


class PauliError(ValueError):
    """Raised for malformed Pauli labels or unsupported qubit counts."""


def _check_qubits(q: int) -> None:
    if not 1 <= q <= MAX_QUBITS:
        raise PauliError(f"qubit count must be in 1..{MAX_QUBITS}, got {q}")


@dataclass(frozen=True)
class PauliString:
    """A tensor product of single-qubit Paulis, e.g. ``'XZ'`` = X ⊗ Z."""

    label: str

    def __post_init__(self) -> None:
        if not self.label or any(c not in _ORDER for c in self.label):
            raise PauliError(f"invalid Pauli label {self.label!r}")
        _check_qubits(self.num_qubits)

    @property
    def num_qubits(self) -> int:
        return len(self.label)

    @property
    def weight(self) -> int:
        """Number of non-identity tensor factors."""
        return sum(c != "I" for c in self.label)

    def matrix(self) -> np.ndarray:
        """Unnormalized 2^q x 2^q matrix of the string."""
        out = _PAULI_1Q[self.label[0]]
        for c in self.label[1:]:
            out = np.kron(out, _PAULI_1Q[c])
        return out

    def normalized(self) -> np.ndarray:
        """Hilbert-Schmidt normalized matrix ``2**(-q/2) * P``."""
        return self.matrix() / np.sqrt(2.0**self.num_qubits)

    def commutation_bit(self, other: "PauliString") -> int:
        """0 if the strings commute, 1 if they anticommute.

        Phase-free Pauli strings either commute or anticommute; the bit is the
        parity of the number of positions where both factors are non-identity
        and different.
        """
        if other.num_qubits != self.num_qubits:
            raise PauliError("commutation_bit requires equal qubit counts")
        count = 0
        for a, b in zip(self.label, other.label):
            if a != "I" and b != "I" and a != b:
                count += 1
        return count % 2

    def __str__(self) -> str:
        return self.label


@lru_cache(maxsize=None)
def enumerate_basis(q: int) -> tuple[PauliString, ...]:
    """All 4^q Pauli strings on q qubits, lexicographic with I < X < Y < Z."""
    _check_qubits(q)
    return tuple(PauliString("".join(t)) for t in product(_ORDER, repeat=q))


@lru_cache(maxsize=None)
def basis_index(label: str) -> int:
    """Index of a Pauli label in :func:`enumerate_basis` of its length."""
    s = PauliString(label)
    return sum(4 ** (s.num_qubits - 1 - i) * _ORDER.index(c) for i, c in enumerate(label))


@lru_cache(maxsize=None)
def _basis_stack(q: int) -> np.ndarray:
    """Array of shape (4^q, 2^q, 2^q) holding the normalized basis matrices."""
    return np.stack([p.normalized() for p in enumerate_basis(q)])


def vectorize(rho: np.ndarray, q: int | None = None) -> np.ndarray:
    """Expand a Hermitian operator in the normalized Pauli basis.

    Returns the real vector with entries ``tr(sigma_i rho)``.  Used both for
    states ``|rho>>`` and (as a covector) for POVM effects ``<<Q|``.
    """
    rho = np.asarray(rho, dtype=complex)
    if q is None:
        q = int(round(np.log2(rho.shape[0])))
    _check_qubits(q)
    if rho.shape != (2**q, 2**q):
        raise PauliError(f"operator shape {rho.shape} does not match q={q}")
    coeffs = np.einsum("kab,ba->k", _basis_stack(q), rho)
    if np.max(np.abs(coeffs.imag)) > 1e-12 * max(1.0, np.max(np.abs(coeffs.real))):
        raise PauliError("vectorize expects a (numerically) Hermitian operator")
    return coeffs.real.copy()


def devectorize(vec: np.ndarray, q: int | None = None) -> np.ndarray:
    """Inverse of :func:`vectorize`: rebuild the 2^q x 2^q matrix."""
    vec = np.asarray(vec, dtype=float)
    if q is None:
        q = int(round(np.log2(len(vec)) / 2))
    _check_qubits(q)
    if vec.shape != (4**q,):
        raise PauliError(f"vector length {vec.shape} does not match q={q}")
    return np.einsum("k,kab->ab", vec, _basis_stack(q))


def commutation_bit(a: str, b: str) -> int:
    """Convenience wrapper: anticommutation parity of two Pauli labels."""
    return PauliString(a).commutation_bit(PauliString(b))
