"""Gate-group closures: orders, inverses, multiplication, builtin structure."""

import numpy as np
import pytest

from charb.groups import (
    GroupError,
    builtin_group,
    canonical_key,
    generate_group,
    interleaved_closure,
    sequence_inverse,
)
from charb.superop import ptm_of_unitary, unitary

KNOWN_ORDERS = {
    ("clifford1", None): 24,
    ("clifford1_tensor2", None): 576,
    ("clifford2", None): 11520,
    ("pauli", 1): 4,
    ("pauli", 2): 16,
    ("cnot_dihedral", 1): 16,
    ("cnot_dihedral", 2): 6144,
}


@pytest.mark.parametrize("name,q", sorted(KNOWN_ORDERS, key=str))
def test_builtin_orders(name, q):
    g = builtin_group(name, q)
    assert len(g) == KNOWN_ORDERS[(name, q)]


def test_clifford2_entries_are_signed_units():
    g = builtin_group("clifford2")
    vals = np.unique(np.round(g.ptms, 9))
    assert set(vals.tolist()) <= {-1.0, 0.0, 1.0}


def test_identity_is_element_zero():
    for name, q in KNOWN_ORDERS:
        g = builtin_group(name, q)
        assert np.allclose(g.ptms[0], np.eye(g.ptms.shape[1]))


def test_closure_under_sampled_products():
    g = builtin_group("clifford1_tensor2")
    rng = np.random.default_rng(11)
    for _ in range(50):
        i, j = rng.integers(len(g), size=2)
        prod = g.ptms[i] @ g.ptms[j]
        assert g.contains(prod)
        assert np.allclose(g.ptms[g.multiply(i, j)], prod, atol=1e-12)


def test_inverse_via_transpose():
    g = builtin_group("clifford1")
    for i in range(len(g)):
        inv = g.inverse[i]
        assert np.allclose(g.ptms[i] @ g.ptms[inv], np.eye(4), atol=1e-12)


def test_multiplication_table_against_hash_lookup():
    g = builtin_group("clifford1")
    table = g.multiplication_table()
    for i in range(0, 24, 5):
        for j in range(0, 24, 7):
            key = canonical_key(g.ptms[i] @ g.ptms[j])
            assert canonical_key(g.ptms[table[i, j]]) == key


def test_pauli_group_labels():
    g = builtin_group("pauli", 2)
    assert g.labels is not None
    assert g.labels[0] == "II"
    assert set(g.labels) == {
        a + b for a in "IXYZ" for b in "IXYZ"
    }
    # Pauli PTMs are diagonal sign matrices
    for r in g.ptms:
        assert np.allclose(r, np.diag(np.diag(r)))
        assert set(np.unique(np.diag(r))) <= {-1.0, 1.0}


def test_cnot_dihedral_two_qubit_structure():
    """Dual route for the order 6144: the group factors into 24 distinct
    classical actions on the computational basis times 256 elements acting
    trivially on it (diagonal-phase sector)."""
    g = builtin_group("cnot_dihedral", 2)
    # restrict each PTM to the span of II, IZ, ZI, ZZ: that is the classical
    # (computational-basis) action up to signs
    diag_idx = [0, 3, 12, 15]
    keys = {}
    for r in g.ptms:
        sub = r[np.ix_(diag_idx, diag_idx)]
        keys.setdefault(canonical_key(sub), 0)
        keys[canonical_key(sub)] += 1
    assert len(keys) == 24
    assert set(keys.values()) == {256}
    assert 24 * 256 == len(g)


def test_sequence_inverse_closes_the_loop():
    g = builtin_group("clifford1_tensor2")
    rng = np.random.default_rng(5)
    idx = rng.integers(len(g), size=6).tolist()
    inv_i, inv_ptm = sequence_inverse(g, idx)
    word = np.eye(16)
    for i in idx:
        word = g.ptms[i] @ word
    assert np.allclose(inv_ptm @ word, np.eye(16), atol=1e-10)
    assert np.allclose(g.ptms[inv_i], inv_ptm, atol=1e-10)


def test_sequence_inverse_with_interleaving():
    g = builtin_group("clifford2")
    c = ptm_of_unitary(unitary("CPHASE"))
    rng = np.random.default_rng(6)
    idx = rng.integers(len(g), size=4).tolist()
    inv_i, inv_ptm = sequence_inverse(g, idx, interleaved_ptm=c)
    word = np.eye(16)
    for i in idx:
        word = c @ (g.ptms[i] @ word)
    assert np.allclose(inv_ptm @ word, np.eye(16), atol=1e-10)


def test_generate_group_small_cyclic():
    s = ptm_of_unitary(unitary("S"))
    g = generate_group([s], name="s-cyclic")
    assert len(g) == 4  # S has order 4


def test_generate_group_order_cap():
    h = ptm_of_unitary(unitary("H"))
    s = ptm_of_unitary(unitary("S"))
    with pytest.raises(GroupError):
        generate_group([h, s], max_order=10)


def test_index_of_foreign_element_raises():
    g = builtin_group("pauli", 1)
    t = ptm_of_unitary(unitary("T"))
    with pytest.raises(GroupError):
        g.index_of(t)
    assert not g.contains(t)


def test_interleaved_closure_for_cphase():
    g = builtin_group("clifford1_tensor2")
    c = ptm_of_unitary(unitary("CPHASE"))
    assert interleaved_closure(g, c)
    # the SWAP-free local group does not absorb CPHASE itself
    assert not g.contains(c)


def test_sampling_is_uniform_and_seeded():
    g = builtin_group("pauli", 1)
    rng = np.random.default_rng(123)
    draws = [g.sample_uniform(rng) for _ in range(400)]
    counts = np.bincount(draws, minlength=4)
    assert counts.min() > 60  # crude uniformity check
    rng2 = np.random.default_rng(123)
    assert draws[:20] == [g.sample_uniform(rng2) for _ in range(20)]
