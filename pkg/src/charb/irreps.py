"""Irreducible-representation structure of gate groups in PTM form.

The superoperator representation G |-> PTM(G) of each builtin group splits
into inequivalent irreducible blocks, each carried by an orthogonal projector
P.  Twirling a channel E over the group leaves one scalar per block, the
quality parameter f = tr(P E) / tr(P), and the twirled channel is sum f P.
Character-weighted averages over a Pauli subgroup project onto single Pauli
directions and isolate individual decays.

Two independent routes produce the projectors: closed-form constructions per
family (:func:`analytic_decomposition`) and eigenvector clustering of a
twirled random matrix (:func:`numeric_decomposition`).  The numeric route only
works when the representation is multiplicity-free, which it verifies through
the character-square sum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .groups import GateGroup
from .paulis import PauliString, basis_index, enumerate_basis

PROJECTOR_ATOL = 1e-9


class IrrepError(ValueError):
    """Raised for malformed decompositions or unsupported groups."""


class MultiplicityError(IrrepError):
    """The representation carries an irrep more than once, so block
    projectors are not unique and eigenvector clustering is meaningless."""


class ConvergenceError(RuntimeError):
    """Power iteration failed to settle within the iteration budget."""


@dataclass(frozen=True)
class IrrepDecomposition:
    """Orthogonal projectors onto the irreducible blocks of a group's PTM rep."""

    group_name: str
    labels: tuple[str, ...]
    projectors: np.ndarray  # (k, D, D)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(int(round(np.trace(p))) for p in self.projectors)

    @property
    def num_qubits(self) -> int:
        return int(round(np.log2(self.projectors.shape[1]) / 2))

    def projector(self, label: str) -> np.ndarray:
        try:
            return self.projectors[self.labels.index(label)]
        except ValueError:
            raise IrrepError(
                f"no irrep {label!r} in {self.group_name}; have {self.labels}"
            ) from None

    def validate(self, group: GateGroup, atol: float = PROJECTOR_ATOL) -> None:
        """Check projector algebra and invariance under the group generators."""
        dim = self.projectors.shape[1]
        total = np.zeros((dim, dim))
        for lab, p in zip(self.labels, self.projectors):
            if np.abs(p - p.T).max() > atol or np.abs(p @ p - p).max() > atol:
                raise IrrepError(f"block {lab!r} is not an orthogonal projector")
            total += p
        if np.abs(total - np.eye(dim)).max() > atol:
            raise IrrepError(f"{self.group_name}: blocks do not resolve the identity")
        gens = group.generator_indices or range(min(group.order, 8))
        for gi in gens:
            g = group.ptms[int(gi)]
            for lab, p in zip(self.labels, self.projectors):
                if np.abs(g @ p - p @ g).max() > atol:
                    raise IrrepError(f"block {lab!r} is not invariant under {group.name}")


# ---------------------------------------------------------------------------
# Analytic constructions
# ---------------------------------------------------------------------------


def _diag_projector(dim: int, indices) -> np.ndarray:
    p = np.zeros((dim, dim))
    idx = np.asarray(list(indices), dtype=int)
    p[idx, idx] = 1.0
    return p


def _clifford_blocks(q: int) -> np.ndarray:
    dim = 4**q
    return np.stack(
        [_diag_projector(dim, [0]), _diag_projector(dim, range(1, dim))]
    )


def analytic_decomposition(group: GateGroup) -> IrrepDecomposition:
    """Closed-form irrep projectors for the builtin groups.

    ======================  =================================  ============
    group                   labels                             dims
    ======================  =================================  ============
    clifford1 / clifford2   trivial, adjoint                   1, 4^q - 1
    clifford1_tensor2       00, 10, 01, 11                     1, 3, 3, 9
    pauli(q)                one per Pauli string               all 1
    cnot_dihedral(q)        trivial, pauli_z, pauli_xy         1, 2^q - 1,
                                                               4^q - 2^q
    ======================  =================================  ============

    For ``clifford1_tensor2`` the two-bit label marks which wires transform in
    the adjoint block, leftmost qubit first.
    """
    name = group.name
    if name == "clifford1":
        return IrrepDecomposition(name, ("trivial", "adjoint"), _clifford_blocks(1))
    if name == "clifford2":
        return IrrepDecomposition(name, ("trivial", "adjoint"), _clifford_blocks(2))
    if name == "clifford1_tensor2":
        triv, adj = _clifford_blocks(1)
        one_qubit = {"0": triv, "1": adj}
        labels = ("00", "10", "01", "11")
        ptms = np.stack([np.kron(one_qubit[w[0]], one_qubit[w[1]]) for w in labels])
        return IrrepDecomposition(name, labels, ptms)
    if name.startswith("pauli("):
        q = group.q
        basis = enumerate_basis(q)
        ptms = np.stack([_diag_projector(4**q, [i]) for i in range(len(basis))])
        return IrrepDecomposition(name, tuple(p.label for p in basis), ptms)
    if name.startswith("cnot_dihedral("):
        q = group.q
        basis = enumerate_basis(q)
        z_type = [
            i
            for i, p in enumerate(basis)
            if i != 0 and set(p.label) <= {"I", "Z"}
        ]
        xy_type = [i for i in range(1, 4**q) if i not in z_type]
        ptms = np.stack(
            [
                _diag_projector(4**q, [0]),
                _diag_projector(4**q, z_type),
                _diag_projector(4**q, xy_type),
            ]
        )
        return IrrepDecomposition(name, ("trivial", "pauli_z", "pauli_xy"), ptms)
    raise IrrepError(
        f"no closed-form decomposition for {name!r}; use numeric_decomposition"
    )


# ---------------------------------------------------------------------------
# Numeric route: twirl a random matrix and cluster eigenvectors
# ---------------------------------------------------------------------------


def twirl(group: GateGroup, channel: np.ndarray) -> np.ndarray:
    """Exact group average of G^dagger E G over all elements.

    Group PTMs are orthogonal, so the adjoint is the transpose.
    """
    e = np.asarray(channel, dtype=float)
    tmp = np.einsum("gji,jk->gik", group.ptms, e)
    return np.einsum("gik,gkl->il", tmp, group.ptms) / group.order


def numeric_decomposition(
    group: GateGroup, seed: int = 2023, cluster_tol: float = 1e-6
) -> IrrepDecomposition:
    """Recover irrep projectors by twirling a random symmetric matrix.

    The twirl of a generic symmetric matrix is sum_k c_k P_k with distinct
    coefficients, so clustering its eigenvalues recovers the projectors.  This
    requires the representation to be multiplicity-free; the character-square
    sum E_G[tr(G)^2] must equal the number of clusters found, else
    :class:`MultiplicityError`.
    """
    dim = group.ptms.shape[1]
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((dim, dim))
    m = twirl(group, a + a.T)
    eigvals, eigvecs = np.linalg.eigh(m)

    clusters: list[list[int]] = [[0]]
    for i in range(1, dim):
        if eigvals[i] - eigvals[i - 1] < cluster_tol:
            clusters[-1].append(i)
        else:
            clusters.append([i])

    mult_sum = float(np.mean(np.trace(group.ptms, axis1=1, axis2=2) ** 2))
    if abs(mult_sum - len(clusters)) > 0.25:
        raise MultiplicityError(
            f"{group.name}: character-square sum {mult_sum:.3f} does not match "
            f"{len(clusters)} eigenvalue clusters; representation has "
            "multiplicities or the random twirl degenerated (try another seed)"
        )

    projectors = []
    for idx in clusters:
        v = eigvecs[:, idx]
        projectors.append(v @ v.T)
    # deterministic order: by descending rank, then by first supported axis
    def sort_key(p: np.ndarray):
        diag = np.diag(p)
        first = int(np.argmax(diag > 1e-9))
        return (-int(round(np.trace(p))), first)

    projectors.sort(key=sort_key)
    labels = tuple(f"block{i}" for i in range(len(projectors)))
    decomp = IrrepDecomposition(group.name, labels, np.stack(projectors))
    decomp.validate(group)
    return decomp


# ---------------------------------------------------------------------------
# Quality parameters and fidelity
# ---------------------------------------------------------------------------


def quality_parameters(
    decomp: IrrepDecomposition, channel: np.ndarray
) -> dict[str, float]:
    """Per-block decay scalars f = tr(P E) / tr(P) of a noise channel."""
    e = np.asarray(channel, dtype=float)
    return {
        lab: float(np.einsum("ij,ji->", p, e) / np.trace(p))
        for lab, p in zip(decomp.labels, decomp.projectors)
    }


def twirl_from_quality(
    decomp: IrrepDecomposition, quality: dict[str, float]
) -> np.ndarray:
    """Reassemble the twirled channel sum_k f_k P_k."""
    out = np.zeros_like(decomp.projectors[0])
    for lab, p in zip(decomp.labels, decomp.projectors):
        out += quality[lab] * p
    return out


def average_fidelity_from_quality(
    decomp: IrrepDecomposition, quality: dict[str, float]
) -> float:
    """Average gate fidelity from per-block quality parameters.

    F = (2^-q sum_k tr(P_k) f_k + 1) / (2^q + 1), the sum running over all
    blocks including the trivial one.
    """
    d = 2**decomp.num_qubits
    s = sum(
        np.trace(p) * quality[lab] for lab, p in zip(decomp.labels, decomp.projectors)
    )
    return float((s / d + 1.0) / (d + 1.0))


# ---------------------------------------------------------------------------
# Pauli characters
# ---------------------------------------------------------------------------


def pauli_character(sigma_hat: str | PauliString, group: GateGroup) -> np.ndarray:
    """Character values (+-1) of a Pauli group's elements for one irrep.

    The irreps of the phase-free Pauli group are labelled by Pauli strings;
    element P has character +1 when it commutes with the label and -1 when it
    anticommutes.  ``group`` must be a builtin ``pauli(q)`` group.
    """
    if not group.name.startswith("pauli("):
        raise IrrepError(f"characters are defined on pauli groups, not {group.name}")
    sig = sigma_hat if isinstance(sigma_hat, PauliString) else PauliString(sigma_hat)
    if sig.num_qubits != group.q:
        raise IrrepError(
            f"label {sig.label} has {sig.num_qubits} qubits, group has {group.q}"
        )
    chars = np.array(
        [1.0 if sig.commutation_bit(PauliString(lab)) == 0 else -1.0
         for lab in group.labels],
        dtype=float,
    )
    return chars


def character_projector(sigma_hat: str | PauliString) -> np.ndarray:
    """Rank-1 projector onto one Pauli axis of superoperator space.

    Equals the character-weighted average E[chi(P) PTM(P)] over the Pauli
    group; all its irreps are one-dimensional, so the average collapses to a
    single diagonal entry.
    """
    sig = sigma_hat if isinstance(sigma_hat, PauliString) else PauliString(sigma_hat)
    dim = 4**sig.num_qubits
    p = np.zeros((dim, dim))
    p[basis_index(sig.label), basis_index(sig.label)] = 1.0
    return p


# ---------------------------------------------------------------------------
# Interleaved mixing matrix
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MixingResult:
    """Mixing matrix of an interleaved gate over the nontrivial blocks.

    ``matrix[i, j] = tr(P_i C P_j C^dagger E) / tr(P_i)`` describes how the
    interleaved gate C shuffles decay weight between blocks each round.
    ``positive_power`` is the smallest k <= len(labels) with M^k entrywise
    positive (None if no such power, or if M has negative entries), which by
    Perron-Frobenius certifies a unique dominant decay rate.
    """

    labels: tuple[str, ...]
    matrix: np.ndarray
    eigenvalues: np.ndarray
    nonnegative: bool
    positive_power: int | None

    @property
    def irreducible(self) -> bool:
        return self.positive_power is not None


def mixing_matrix(
    decomp: IrrepDecomposition,
    interleaved_ptm: np.ndarray,
    error_ptm: np.ndarray | None = None,
    atol: float = 1e-12,
) -> MixingResult:
    """Mixing matrix of an interleaved gate, restricted to nontrivial blocks.

    With no error channel this is the ideal mixing matrix, whose rows sum
    to one.  Eigenvalues are sorted by descending magnitude (ties by real
    part); complex parts below ``atol`` are discarded.
    """
    c = np.asarray(interleaved_ptm, dtype=float)
    dim = c.shape[0]
    e = np.eye(dim) if error_ptm is None else np.asarray(error_ptm, dtype=float)

    keep = [
        (lab, p)
        for lab, p in zip(decomp.labels, decomp.projectors)
        if not (abs(np.trace(p) - 1.0) < 0.5 and p[0, 0] > 0.5)
    ]
    if not keep:
        raise IrrepError("decomposition has no nontrivial blocks")
    labels = tuple(lab for lab, _ in keep)
    n = len(keep)
    m = np.empty((n, n))
    for i, (_, pi) in enumerate(keep):
        for j, (_, pj) in enumerate(keep):
            m[i, j] = np.einsum("ij,jk,kl,lm,mi->", pi, c, pj, c.T, e) / np.trace(pi)

    eig = np.linalg.eigvals(m)
    order = np.lexsort((-eig.real, -np.abs(eig)))
    eig = eig[order]
    if np.abs(eig.imag).max() < 1e-9:
        eig = eig.real

    nonneg = bool(m.min() >= -atol)
    positive_power = None
    if nonneg:
        power = np.eye(n)
        for k in range(1, n + 1):
            power = power @ m
            if power.min() > atol:
                positive_power = k
                break
    return MixingResult(labels, m, eig, nonneg, positive_power)


# ---------------------------------------------------------------------------
# Gate-dependent decay rates (spectral route)
# ---------------------------------------------------------------------------


def block_basis(projector: np.ndarray, atol: float = PROJECTOR_ATOL) -> np.ndarray:
    """Orthonormal column basis B of a block, with P = B B^T (pivoted QR)."""
    p = np.asarray(projector, dtype=float)
    d = int(round(np.trace(p)))
    q, _, _ = scipy.linalg.qr(p, pivoting=True)
    b = q[:, :d]
    # pivoted QR can flip the subspace only through numerical rank issues
    if np.abs(b @ b.T - p).max() > 1e-7:
        raise IrrepError("projector basis extraction failed; is P a projector?")
    return b

def gate_dependent_decay_rate(
    group: GateGroup,
    noisy_ptms: np.ndarray,
    projector: np.ndarray,
    *,
    tol: float = 1e-10,
    max_iter: int = 10000,
    seed: int = 7,
) -> float:
    """Decay rate of one block for arbitrary (gate-dependent) noisy gates.

    Builds the group average Omega = E_G[ noisy(G) kron phi(G) ], where phi is
    the block subrepresentation, and returns its dominant eigenvalue by power
    iteration.  For gate-independent noise this reproduces tr(P E)/tr(P)
    exactly; for gate-dependent noise it is the decay the fitted exponential
    approaches.

    ``noisy_ptms`` must align index-by-index with ``group.ptms``.
    Raises :class:`ConvergenceError` if the iteration budget is exhausted.
    """
    noisy = np.asarray(noisy_ptms, dtype=float)
    if noisy.shape != group.ptms.shape:
        raise IrrepError(
            f"noisy_ptms shape {noisy.shape} does not match group {group.ptms.shape}"
        )
    b = block_basis(projector)
    phis = np.einsum("ia,gij,jb->gab", b, group.ptms, b)
    d_block = b.shape[1]
    dim = noisy.shape[1]
    omega = np.einsum("gij,gkl->ikjl", noisy, phis).reshape(
        dim * d_block, dim * d_block
    ) / group.order

    rng = np.random.default_rng(seed)
    v = rng.standard_normal(omega.shape[0])
    v /= np.linalg.norm(v)
    lam_prev = np.inf
    for _ in range(max_iter):
        w = omega @ v
        norm = np.linalg.norm(w)
        if norm < 1e-300:
            raise ConvergenceError("power iteration collapsed to zero vector")
        lam = float(v @ w)
        v = w / norm
        if abs(lam - lam_prev) < tol:
            return lam
        lam_prev = lam
    raise ConvergenceError(
        f"power iteration did not converge within {max_iter} iterations"
    )
