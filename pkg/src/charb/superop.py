"""Pauli transfer matrices (PTMs) and channel-level utilities.

A channel ``E`` on q qubits is stored as the real 4^q x 4^q matrix
``R_ij = tr(sigma_i E(sigma_j))`` over the normalized Pauli basis of
:mod:`charb.paulis`.  Composition of channels is matrix multiplication,
expectation values are ``<<Q| R |rho>>``, and the PTM of a unitary channel is
orthogonal, so group inverses are transposes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .paulis import PauliString, _check_qubits, devectorize, enumerate_basis, vectorize

ATOL_ALGEBRA = 1e-10
ATOL_PHYSICAL = 1e-9


class SuperopError(ValueError):
    """Raised for dimension mismatches or invalid channel parameters."""


# ---------------------------------------------------------------------------
# Common unitaries (matrices on the computational basis)
# ---------------------------------------------------------------------------

_S2 = 1.0 / np.sqrt(2.0)

UNITARIES: dict[str, np.ndarray] = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
    "H": _S2 * np.array([[1, 1], [1, -1]], dtype=complex),
    "S": np.diag([1, 1j]).astype(complex),
    "T": np.diag([1, np.exp(1j * np.pi / 4)]).astype(complex),
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
    "CNOT21": np.array(
        [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex
    ),
    "CPHASE": np.diag([1, 1, 1, -1]).astype(complex),
    "SWAP": np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
    ),
}


def unitary(name: str, q: int | None = None) -> np.ndarray:
    """Look up a named unitary, optionally embedding 1q gates as ``name@wire``.

    ``unitary("T", 1)`` is the plain T matrix; two-qubit embeddings are written
    directly by callers via :func:`kron_unitary`.
    """
    if name not in UNITARIES:
        raise SuperopError(f"unknown unitary {name!r}")
    return UNITARIES[name]


def kron_unitary(*names: str) -> np.ndarray:
    """Tensor product of named single-qubit unitaries, leftmost first."""
    out = UNITARIES[names[0]]
    for n in names[1:]:
        out = np.kron(out, UNITARIES[n])
    return out


# ---------------------------------------------------------------------------
# PTM construction
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _norm_stack(q: int) -> np.ndarray:
    return np.stack([p.normalized() for p in enumerate_basis(q)])


def ptm_of_unitary(u: np.ndarray) -> np.ndarray:
    """PTM of the unitary channel ``rho -> U rho U†``."""
    u = np.asarray(u, dtype=complex)
    dim = u.shape[0]
    q = int(round(np.log2(dim)))
    _check_qubits(q)
    if u.shape != (dim, dim):
        raise SuperopError("unitary must be square")
    if not np.allclose(u.conj().T @ u, np.eye(dim), atol=1e-12):
        raise SuperopError("matrix is not unitary")
    basis = _norm_stack(q)
    conj = np.einsum("ab,kbc,dc->kad", u, basis, u.conj())
    r = np.einsum("iab,kba->ik", basis, conj)
    if np.max(np.abs(r.imag)) > 1e-12:
        raise SuperopError("PTM of a unitary channel must be real")
    return np.ascontiguousarray(r.real)


def identity_ptm(q: int) -> np.ndarray:
    _check_qubits(q)
    return np.eye(4**q)


def depolarizing_ptm(q: int, p: float) -> np.ndarray:
    """PTM of ``rho -> p rho + (1-p) tr(rho) 1/2^q``: diag(1, p, ..., p)."""
    _check_qubits(q)
    d = np.full(4**q, float(p))
    d[0] = 1.0
    return np.diag(d)


def num_qubits_of(ptm: np.ndarray) -> int:
    dim = ptm.shape[0]
    q = int(round(np.log2(dim) / 2))
    if ptm.shape != (4**q, 4**q):
        raise SuperopError(f"PTM shape {ptm.shape} is not 4^q x 4^q")
    return q


def compose(*ptms: np.ndarray) -> np.ndarray:
    """Channel composition; ``compose(A, B)`` applies B first, then A."""
    out = np.asarray(ptms[0], dtype=float)
    for r in ptms[1:]:
        out = out @ r
    return out


def apply_ptm(ptm: np.ndarray, state_vec: np.ndarray) -> np.ndarray:
    return np.asarray(ptm) @ np.asarray(state_vec)


def expectation(effect_vec: np.ndarray, ptm: np.ndarray, state_vec: np.ndarray) -> float:
    """``<<Q| R |rho>>``: probability of effect Q after the channel."""
    return float(np.asarray(effect_vec) @ np.asarray(ptm) @ np.asarray(state_vec))


def avg_fidelity(ptm: np.ndarray) -> float:
    """Average gate fidelity of a channel to the identity.

    ``F_avg = (2^-q tr(R) + 1) / (2^q + 1)``, the standard trace formula.
    """
    q = num_qubits_of(ptm)
    return (2.0 ** (-q) * float(np.trace(ptm)) + 1.0) / (2.0**q + 1.0)


def is_unitary_ptm(ptm: np.ndarray, atol: float = ATOL_ALGEBRA) -> bool:
    """True when the PTM is orthogonal with first row/column e_0 (a unitary channel)."""
    r = np.asarray(ptm)
    d = r.shape[0]
    if not np.allclose(r.T @ r, np.eye(d), atol=atol):
        return False
    e0 = np.zeros(d)
    e0[0] = 1.0
    return np.allclose(r[0], e0, atol=atol) and np.allclose(r[:, 0], e0, atol=atol)


# ---------------------------------------------------------------------------
# Physicality
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CptpReport:
    """Result of a complete-positivity / trace-preservation check."""

    completely_positive: bool
    trace_preserving: bool
    unital: bool
    min_choi_eigenvalue: float
    tp_violation: float

    @property
    def cptp(self) -> bool:
        return self.completely_positive and self.trace_preserving


def choi_of_ptm(ptm: np.ndarray) -> np.ndarray:
    """Choi matrix ``sum_ij R_ij sigma_j^T ⊗ sigma_i`` (trace 2^q for TP maps)."""
    q = num_qubits_of(ptm)
    basis = _norm_stack(q)
    return np.einsum("ij,jab,icd->acbd", ptm, basis.transpose(0, 2, 1), basis).reshape(
        4**q, 4**q
    )


def cptp_check(ptm: np.ndarray, atol: float = ATOL_PHYSICAL) -> CptpReport:
    """Check complete positivity (Choi PSD), trace preservation and unitality."""
    q = num_qubits_of(ptm)
    choi = choi_of_ptm(ptm)
    eigs = np.linalg.eigvalsh(0.5 * (choi + choi.conj().T))
    e0 = np.zeros(4**q)
    e0[0] = 1.0
    tp_violation = float(np.max(np.abs(ptm[0] - e0)))
    unital = bool(np.max(np.abs(ptm[:, 0] - e0)) <= atol)
    return CptpReport(
        completely_positive=bool(eigs.min() >= -atol),
        trace_preserving=bool(tp_violation <= atol),
        unital=unital,
        min_choi_eigenvalue=float(eigs.min()),
        tp_violation=tp_violation,
    )


# ---------------------------------------------------------------------------
# States and effects
# ---------------------------------------------------------------------------


def state_zero(q: int) -> np.ndarray:
    """Density matrix of |0...0><0...0|."""
    _check_qubits(q)
    rho = np.zeros((2**q, 2**q), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def state_pauli_mix(label: str) -> np.ndarray:
    """The (possibly mixed) state ``2^-q (1 + P)`` for a Pauli string P."""
    p = PauliString(label)
    q = p.num_qubits
    return (np.eye(2**q) + p.matrix()) / 2**q


def effect_zero(q: int) -> np.ndarray:
    """Projector onto |0...0>, used as a measurement effect."""
    return state_zero(q)


def effect_pauli_half(label: str) -> np.ndarray:
    """The effect ``(1 + P)/2``: the +1 eigenspace projector of P."""
    p = PauliString(label)
    q = p.num_qubits
    return (np.eye(2**q) + p.matrix()) / 2


def state_vec(rho: np.ndarray) -> np.ndarray:
    """Vectorize a density matrix after validating trace 1."""
    v = vectorize(rho)
    q = int(round(np.log2(len(v)) / 2))
    trace = v[0] * 2 ** (q / 2)
    if abs(trace - 1.0) > 1e-9:
        raise SuperopError(f"state has trace {trace}, expected 1")
    return v


def effect_vec(op: np.ndarray) -> np.ndarray:
    """Vectorize a POVM effect (0 <= Q <= 1 checked loosely)."""
    eigs = np.linalg.eigvalsh(np.asarray(op, dtype=complex))
    if eigs.min() < -1e-9 or eigs.max() > 1 + 1e-9:
        raise SuperopError("effect must satisfy 0 <= Q <= 1")
    return vectorize(op)


def tensor_ptm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """PTM of the tensor product channel; consistent with label concatenation."""
    return np.kron(np.asarray(a), np.asarray(b))


__all__ = [
    "ATOL_ALGEBRA",
    "ATOL_PHYSICAL",
    "CptpReport",
    "SuperopError",
    "UNITARIES",
    "apply_ptm",
    "avg_fidelity",
    "choi_of_ptm",
    "compose",
    "cptp_check",
    "depolarizing_ptm",
    "effect_pauli_half",
    "effect_vec",
    "effect_zero",
    "expectation",
    "identity_ptm",
    "is_unitary_ptm",
    "kron_unitary",
    "num_qubits_of",
    "ptm_of_unitary",
    "state_pauli_mix",
    "state_vec",
    "state_zero",
    "tensor_ptm",
    "unitary",
]
