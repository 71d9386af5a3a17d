"""Finite gate groups represented by their PTMs.

Groups are generated by breadth-first closure over a generating set of
(orthogonal) unitary-channel PTMs.  Elements are deduplicated by a canonical
key: entries rounded to 9 decimals and serialized to bytes.  This is safe for
the builtin families, whose PTM entries are well separated (0, ±1/2, ±1/sqrt 2,
±1, ...) compared to the float error accumulated during closure.

Because unitary-channel PTMs are orthogonal matrices, the inverse of an element
is its transpose; inverse lookup therefore never needs a search.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .paulis import PauliString, _check_qubits, enumerate_basis
from .superop import UNITARIES, kron_unitary, num_qubits_of, ptm_of_unitary

CANONICAL_DECIMALS = 9
MULT_TABLE_MAX = 1200
DEFAULT_MAX_ORDER = 20000

BUILTIN_NAMES = ("clifford1", "clifford1_tensor2", "clifford2", "pauli", "cnot_dihedral")


class GroupError(ValueError):
    """Raised for failed closures, unknown builtins, or missing elements."""


def canonical_key(ptm: np.ndarray) -> bytes:
    """Rounded byte representation used to deduplicate group elements."""
    # adding 0.0 normalizes -0.0 so the key is sign-of-zero independent
    return (np.round(np.asarray(ptm, dtype=float), CANONICAL_DECIMALS) + 0.0).tobytes()


@dataclass
class GateGroup:
    """A finite group of unitary-channel PTMs with constant-time lookups."""

    name: str
    q: int
    ptms: np.ndarray  # shape (n, 4^q, 4^q)
    labels: list[str] | None = None
    generator_indices: list[int] = field(default_factory=list)
    _index: dict[bytes, int] = field(default_factory=dict, repr=False)
    _inverse: np.ndarray | None = field(default=None, repr=False)
    _mult_table: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if not self._index:
            self._index = {canonical_key(p): i for i, p in enumerate(self.ptms)}
        if len(self._index) != len(self.ptms):
            raise GroupError(f"{self.name}: duplicate elements in PTM list")

    def __len__(self) -> int:
        return len(self.ptms)

    @property
    def order(self) -> int:
        return len(self.ptms)

    def index_of(self, ptm: np.ndarray) -> int:
        """Index of an element given (a float approximation of) its PTM."""
        try:
            return self._index[canonical_key(ptm)]
        except KeyError:
            raise GroupError(f"PTM is not an element of {self.name}") from None

    def contains(self, ptm: np.ndarray) -> bool:
        return canonical_key(ptm) in self._index

    @property
    def inverse(self) -> np.ndarray:
        """inverse[i] = index of the inverse element (transpose lookup)."""
        if self._inverse is None:
            self._inverse = np.array(
                [self._index[canonical_key(p.T)] for p in self.ptms], dtype=np.int64
            )
        return self._inverse

    def multiplication_table(self) -> np.ndarray:
        """Dense table t[i, j] = index of element_i @ element_j.

        Only materialized for groups of order <= ``MULT_TABLE_MAX``; larger
        groups compose through the hash index instead (see :meth:`multiply`).
        """
        if self.order > MULT_TABLE_MAX:
            raise GroupError(
                f"{self.name} has order {self.order} > {MULT_TABLE_MAX}; "
                "use multiply()/index_of() which go through the hash index"
            )
        if self._mult_table is None:
            n = self.order
            table = np.empty((n, n), dtype=np.int32)
            chunk = max(1, (1 << 22) // (n * self.ptms.shape[1] ** 2))
            for start in range(0, n, chunk):
                rows = np.einsum(
                    "aij,bjk->abik", self.ptms[start : start + chunk], self.ptms
                )
                for a in range(rows.shape[0]):
                    for b in range(n):
                        table[start + a, b] = self._index[canonical_key(rows[a, b])]
            self._mult_table = table
        return self._mult_table

    def multiply(self, i: int, j: int) -> int:
        """Index of the product element_i @ element_j."""
        if self._mult_table is not None:
            return int(self._mult_table[i, j])
        return self._index[canonical_key(self.ptms[i] @ self.ptms[j])]

    def sample_uniform(self, rng: np.random.Generator, size: int | None = None):
        """Uniformly random element indices."""
        return rng.integers(0, self.order, size=size)

    def label_of(self, i: int) -> str:
        return self.labels[i] if self.labels is not None else str(i)


# ---------------------------------------------------------------------------
# Closure generation
# ---------------------------------------------------------------------------


def generate_group(
    generators: list[np.ndarray],
    name: str = "custom",
    max_order: int = DEFAULT_MAX_ORDER,
) -> GateGroup:
    """BFS closure of a list of unitary-channel PTMs.

    The element order is deterministic: identity first, then the distinct
    generators in the order given, then products in discovery order
    (frontier-major, generator-minor).  Raises :class:`GroupError` if the
    closure exceeds ``max_order``.
    """
    if not generators:
        raise GroupError("need at least one generator")
    gens = np.stack([np.asarray(g, dtype=float) for g in generators])
    q = num_qubits_of(gens[0])
    dim = 4**q
    if gens.shape[1:] != (dim, dim):
        raise GroupError("generators must share one PTM dimension")

    elements: list[np.ndarray] = [np.eye(dim)]
    index: dict[bytes, int] = {canonical_key(elements[0]): 0}
    gen_indices: list[int] = []
    for g in gens:
        key = canonical_key(g)
        if key not in index:
            index[key] = len(elements)
            elements.append(g)
        gen_indices.append(index[key])

    frontier = list(range(1, len(elements)))
    if not frontier:  # all generators were the identity
        frontier = [0]
    while frontier:
        products = np.einsum("fij,gjk->fgik", np.stack([elements[i] for i in frontier]), gens)
        new_frontier: list[int] = []
        for f in range(products.shape[0]):
            for g in range(products.shape[1]):
                key = canonical_key(products[f, g])
                if key not in index:
                    if len(elements) >= max_order:
                        raise GroupError(
                            f"closure of {name} exceeded max_order={max_order}"
                        )
                    index[key] = len(elements)
                    elements.append(np.ascontiguousarray(products[f, g]))
                    new_frontier.append(index[key])
        frontier = new_frontier

    group = GateGroup(
        name=name,
        q=q,
        ptms=np.stack(elements),
        generator_indices=gen_indices,
        _index=index,
    )
    return group


# ---------------------------------------------------------------------------
# Builtin families
# ---------------------------------------------------------------------------


def _pauli_group(q: int) -> GateGroup:
    """Phase-free Pauli conjugation group: 4^q diagonal ±1 PTMs."""
    basis = enumerate_basis(q)
    labels = [p.label for p in basis]
    ptms = np.zeros((len(basis), 4**q, 4**q))
    for i, p in enumerate(basis):
        signs = [1.0 if p.commutation_bit(s) == 0 else -1.0 for s in basis]
        ptms[i] = np.diag(signs)
    return GateGroup(
        name=f"pauli({q})",
        q=q,
        ptms=ptms,
        labels=labels,
        generator_indices=list(range(1, len(basis))),
    )


@lru_cache(maxsize=None)
def builtin_group(name: str, q: int | None = None) -> GateGroup:
    """Construct one of the builtin gate groups.

    ======================  ====  ======
    name                    q     order
    ======================  ====  ======
    clifford1               1     24
    clifford1_tensor2       2     576
    clifford2               2     11520
    pauli                   1..3  4^q
    cnot_dihedral           1, 2  16 / 6144
    ======================  ====  ======
    """
    if name == "clifford1":
        g = generate_group(
            [ptm_of_unitary(UNITARIES["H"]), ptm_of_unitary(UNITARIES["S"])],
            name="clifford1",
        )
        return g
    if name == "clifford1_tensor2":
        c1 = builtin_group("clifford1")
        n = c1.order
        ptms = np.einsum("aij,bkl->abikjl", c1.ptms, c1.ptms).reshape(n * n, 16, 16)
        labels = [f"{a}x{b}" for a in range(n) for b in range(n)]
        # generators of the tensor group: H, S on each wire, for closure reuse
        h, s = c1.generator_indices
        gen_idx = [h * n, s * n, h, s]
        return GateGroup(
            name="clifford1_tensor2",
            q=2,
            ptms=np.ascontiguousarray(ptms),
            labels=labels,
            generator_indices=gen_idx,
        )
    if name == "clifford2":
        gens = [
            ptm_of_unitary(kron_unitary("H", "I")),
            ptm_of_unitary(kron_unitary("I", "H")),
            ptm_of_unitary(kron_unitary("S", "I")),
            ptm_of_unitary(kron_unitary("I", "S")),
            ptm_of_unitary(UNITARIES["CNOT"]),
        ]
        return generate_group(gens, name="clifford2")
    if name == "pauli":
        if q is None:
            raise GroupError("pauli requires q")
        _check_qubits(q)
        return _pauli_group(q)
    if name == "cnot_dihedral":
        if q is None:
            raise GroupError("cnot_dihedral requires q")
        if q == 1:
            gens = [ptm_of_unitary(UNITARIES["X"]), ptm_of_unitary(UNITARIES["T"])]
        elif q == 2:
            gens = [
                ptm_of_unitary(UNITARIES["CNOT"]),
                ptm_of_unitary(UNITARIES["CNOT21"]),
                ptm_of_unitary(kron_unitary("X", "I")),
                ptm_of_unitary(kron_unitary("I", "X")),
                ptm_of_unitary(kron_unitary("T", "I")),
                ptm_of_unitary(kron_unitary("I", "T")),
            ]
        else:
            raise GroupError("cnot_dihedral is implemented for q in {1, 2}")
        return generate_group(gens, name=f"cnot_dihedral({q})")
    raise GroupError(f"unknown builtin group {name!r}; choose from {BUILTIN_NAMES}")


def sequence_inverse(
    group: GateGroup,
    indices: list[int] | np.ndarray,
    interleaved_ptm: np.ndarray | None = None,
    lookup_group: GateGroup | None = None,
) -> tuple[int, np.ndarray]:
    """Inverse of an applied gate sequence, as (index, PTM).

    ``indices`` lists the sequence in time order.  With an interleaved gate C
    the applied operator is ``C G_m ... C G_1`` (C after every gate); the
    inverse is its transpose.  The index is resolved in ``lookup_group`` when
    given (the closure group for interleaved runs), else in ``group``.
    """
    where = lookup_group if lookup_group is not None else group
    prod = np.eye(group.ptms.shape[1])
    for i in indices:
        prod = group.ptms[int(i)] @ prod
        if interleaved_ptm is not None:
            prod = interleaved_ptm @ prod
    inv = prod.T.copy()
    return where.index_of(inv), inv


def interleaved_closure(group: GateGroup, interleaved_ptm: np.ndarray) -> GateGroup:
    """Group generated by ``group`` and an interleaved gate.

    Uses the recorded generators of ``group`` when available so the closure
    runs over a small generating set.  Needed because inverses of interleaved
    sequences generally leave the original group.
    """
    if group.contains(interleaved_ptm):
        return group
    if group.generator_indices:
        gens = [group.ptms[i] for i in group.generator_indices]
    else:
        gens = list(group.ptms)
    gens.append(np.asarray(interleaved_ptm, dtype=float))
    return generate_group(gens, name=f"{group.name}+interleaved")
