"""End-to-end acceptance checks for the character-benchmarking simulator.

Each test here guards one headline guarantee of the package at its stated
tolerance, and each prints a single summary line so a ``pytest -v`` run reads
as a checklist.  Unit-level coverage lives in the sibling test modules; these
tests deliberately cross module boundaries and, where possible, confront the
library against independently coded routes (full sequence enumeration, eigen
decompositions of small transfer matrices, closed-form expressions).
"""

import itertools
import json
import math
import os
import time

import numpy as np
import pytest

from charb.cli import main as cli_main
from charb.engine import ExperimentSpec, run_experiment
from charb.fitting import (
    dihedral_infidelity,
    fidelity_from_quality,
    fit_single_exponential,
    hoeffding_sample_size,
    hoeffding_sample_size_variant,
)
from charb.groups import builtin_group
from charb.irreps import (
    analytic_decomposition,
    character_projector,
    gate_dependent_decay_rate,
    mixing_matrix,
    numeric_decomposition,
    pauli_character,
    quality_parameters,
)
from charb.noise import NoiseModel, SpamModel, random_unitary_ptm
from charb.paulis import basis_index, commutation_bit, enumerate_basis
from charb.superop import (
    compose,
    effect_pauli_half,
    effect_vec,
    effect_zero,
    ptm_of_unitary,
    state_pauli_mix,
    state_vec,
    state_zero,
    unitary,
)

ALL_GROUPS = (
    ("clifford1", None),
    ("clifford1_tensor2", None),
    ("clifford2", None),
    ("pauli", 1),
    ("pauli", 2),
    ("cnot_dihedral", 1),
    ("cnot_dihedral", 2),
)


def _group(name, q):
    return builtin_group(name) if q is None else builtin_group(name, q)


def _sigma_states(label):
    """Preparation/effect pair with unit overlap on the chosen Pauli axis."""
    if set(label) == {"I"}:
        q = len(label)
        return state_vec(state_zero(q)), effect_vec(effect_zero(q))
    return (
        state_vec(state_pauli_mix(label)),
        effect_vec(effect_pauli_half(label)),
    )


def _containing_block(decomp, label):
    idx = basis_index(label)
    for lab in decomp.labels:
        if decomp.projector(lab)[idx, idx] > 0.5:
            return lab
    raise AssertionError(f"no block contains {label}")


def test_single_exponential_identity_every_group_and_axis():
    """Analytic decay equals A * f^m on every axis of every builtin group."""
    t0 = time.time()
    worst = 0.0
    lengths = tuple(range(1, 21))
    for gi, (name, q) in enumerate(ALL_GROUPS):
        g = _group(name, q)
        dec = analytic_decomposition(g)
        noise_ptm = random_unitary_ptm(g.q, 0.04, seed=31 + gi)
        noise = NoiseModel.gate_independent_ptm(noise_ptm)
        quality = quality_parameters(dec, noise_ptm)
        char_group = builtin_group("pauli", g.q)
        for sig in ["".join(t) for t in itertools.product("IXYZ", repeat=g.q)]:
            state, effect = _sigma_states(sig)
            spec = ExperimentSpec(
                group=g,
                lengths=lengths,
                num_sequences=1,
                noise=noise,
                mode="average",
                seed=5,
                char_group=char_group,
                sigma_hat=sig,
                state=state,
                effect=effect,
                noisy_inverse=False,
            )
            curve = run_experiment(spec)
            amp = float(effect @ character_projector(sig) @ state)
            f = quality[_containing_block(dec, sig)]
            model = amp * f ** np.asarray(lengths, dtype=float)
            worst = max(worst, float(np.max(np.abs(curve.values - model))))
    elapsed = time.time() - t0
    assert worst <= 1e-10
    assert elapsed < 120.0
    print(
        f"\n[ok] single-exponential identity: max |k_m - A f^m| = {worst:.3e} "
        f"over {len(ALL_GROUPS)} groups, m <= 20, in {elapsed:.1f}s"
    )


def _enumerated_char_average(group, char_group, sig, noise_ptm, spam, m):
    """Character-weighted average over every sequence, coded from scratch.

    Walks all |G|^m gate words and all character-group insertions explicitly
    (no projector shortcut, no group-element compilation) so that agreement
    with the engine's analytic mode checks a genuinely different code path.
    """
    rho = spam.prepare(state_vec(state_pauli_mix(sig)))
    q_eff = spam.effect(effect_vec(effect_pauli_half(sig)))
    total = 0.0
    for seq in itertools.product(range(group.order), repeat=m):
        word = group.ptms[seq[0]]
        for j in seq[1:]:
            word = group.ptms[j] @ word
        noisy_inv = noise_ptm @ word.T
        for t, lab in enumerate(char_group.labels):
            chi = 1.0 if commutation_bit(sig, lab) == 0 else -1.0
            chain = noise_ptm @ (group.ptms[seq[0]] @ char_group.ptms[t])
            for j in seq[1:]:
                chain = (noise_ptm @ group.ptms[j]) @ chain
            chain = noisy_inv @ chain
            total += chi * float(q_eff @ chain @ rho)
    return total / (group.order**m * char_group.order)


def test_enumeration_matches_analytic_average():
    """Full sequence enumeration agrees with the analytic mode to 1e-12."""
    spam = SpamModel(prep_fidelity=0.97, meas_fidelity=0.9)
    worst = 0.0
    for name in ("cnot_dihedral", "pauli"):
        g = builtin_group(name, 1)
        char_group = builtin_group("pauli", 1)
        noise_ptm = random_unitary_ptm(1, 0.05, seed=17)
        noise = NoiseModel.gate_independent_ptm(noise_ptm)
        for sig in ("Z", "X"):
            for m in (1, 2):
                spec = ExperimentSpec(
                    group=g,
                    lengths=(m,),
                    num_sequences=1,
                    noise=noise,
                    mode="average",
                    seed=0,
                    char_group=char_group,
                    sigma_hat=sig,
                    state=state_vec(state_pauli_mix(sig)),
                    effect=effect_vec(effect_pauli_half(sig)),
                    spam=spam,
                    noisy_inverse=True,
                )
                engine = run_experiment(spec).values[0]
                brute = _enumerated_char_average(
                    g, char_group, sig, noise_ptm, spam, m
                )
                worst = max(worst, abs(engine - brute))
    assert worst <= 1e-12
    print(f"\n[ok] brute-force enumeration vs analytic mode: max diff {worst:.3e}")


def test_figure_reproduction_all_windows(tmp_path):
    """The reproduce-figure command lands every summary number in its window."""
    t0 = time.time()
    rc = cli_main(["--out", str(tmp_path), "--threads", "4", "reproduce-figure"])
    elapsed = time.time() - t0
    assert rc == 0
    with open(os.path.join(str(tmp_path), "summary.json")) as fh:
        summary = json.load(fh)
    windows = [
        (preset, key, win)
        for preset, rep in summary["presets"].items()
        for key, win in rep["windows"].items()
    ]
    assert len(windows) == 8
    for preset, key, win in windows:
        assert win["pass"], f"{preset} {key} = {win['value']} not in [{win['low']}, {win['high']}]"
    assert summary["all_pass"] is True
    assert elapsed < 600.0
    print(f"\n[ok] figure reproduction: 8/8 windows pass in {elapsed:.1f}s")


def test_interleaved_mixing_and_deviation_envelope():
    """Noiseless mixing matrix is exact; the noisy decay deviates from its
    dominant eigenterm by at most C (1/3)^m."""
    g = builtin_group("clifford1_tensor2")
    dec = analytic_decomposition(g)
    cphase = ptm_of_unitary(unitary("CPHASE"))

    mix0 = mixing_matrix(dec, cphase)
    expected = np.array(
        [
            [1.0 / 3.0, 0.0, 2.0 / 3.0],
            [0.0, 1.0 / 3.0, 2.0 / 3.0],
            [2.0 / 9.0, 2.0 / 9.0, 5.0 / 9.0],
        ]
    )
    assert mix0.labels == ("10", "01", "11")
    assert np.max(np.abs(mix0.matrix - expected)) <= 1e-12
    eigs = np.sort(np.linalg.eigvals(mix0.matrix).real)
    assert np.max(np.abs(eigs - np.array([-1.0 / 9.0, 1.0 / 3.0, 1.0]))) <= 1e-12
    assert mix0.irreducible
    assert mix0.positive_power == 2

    err = random_unitary_ptm(2, 0.02, seed=5)
    err_c = random_unitary_ptm(2, 0.03, seed=55)
    lengths = tuple(range(1, 16))
    spec = ExperimentSpec(
        group=g,
        lengths=lengths,
        num_sequences=1,
        noise=NoiseModel.gate_independent_ptm(err),
        mode="average",
        seed=0,
        char_group=builtin_group("pauli", 2),
        sigma_hat="ZZ",
        state=state_vec(state_pauli_mix("ZZ")),
        effect=effect_vec(effect_pauli_half("ZZ")),
        interleaved=cphase,
        interleaved_noise=NoiseModel.gate_independent_ptm(err_c),
        noisy_inverse=False,
    )
    curve = run_experiment(spec)
    k = curve.values
    m = np.asarray(lengths, dtype=float)

    round_error = compose(err_c, err)
    mix = mixing_matrix(dec, cphase, error_ptm=round_error)
    lams = np.linalg.eigvals(mix.matrix)
    lams = lams[np.argsort(-np.abs(lams))]
    coeff = np.linalg.solve(np.stack([lams**p for p in (1, 2, 3)]), k[:3])
    three_term = np.abs(k - sum(c * l**m for c, l in zip(coeff, lams)).real)
    assert np.max(three_term) <= 1e-10

    deviation = np.abs(k - (coeff[0] * lams[0] ** m).real)
    big_c = 3.0 * max(deviation[i] * 3.0 ** m[i] for i in range(3))
    tail = slice(3, None)
    assert np.all(deviation[tail] <= big_c / 3.0 ** m[tail])

    fit = fit_single_exponential(lengths[2:], k[2:])
    rate_err = abs(fit.rate - lams[0].real)
    assert rate_err <= 1e-3
    print(
        "\n[ok] interleaved mixing: exact matrix, eigs (1, 1/3, -1/9), "
        f"deviation under C/3^m for m=4..15 (C={big_c:.2e}), "
        f"|fit - dominant eig| = {rate_err:.2e}"
    )


def test_representation_data_every_group():
    """Orders, block structure, and characters check out for every group."""
    t0 = time.time()
    expected_orders = {
        ("clifford1", None): 24,
        ("clifford1_tensor2", None): 576,
        ("clifford2", None): 11520,
        ("pauli", 1): 4,
        ("pauli", 2): 16,
        ("cnot_dihedral", 1): 16,
        ("cnot_dihedral", 2): 6144,
    }
    for (name, q), order in expected_orders.items():
        g = _group(name, q)
        assert g.order == order, f"{g.name}: order {g.order} != {order}"
        dec = analytic_decomposition(g)
        dec.validate(g, atol=1e-10)
        numeric = numeric_decomposition(g)
        assert sorted(numeric.dims) == sorted(dec.dims)

    for q in (1, 2):
        pg = builtin_group("pauli", q)
        labels = [p.label for p in enumerate_basis(q)]
        table = np.array(
            [pauli_character(sig, pg) for sig in labels]
        ).astype(int)
        gram = table @ table.T
        assert np.array_equal(gram, pg.order * np.eye(4**q, dtype=int))
        for sig in labels:
            chars = pauli_character(sig, pg)
            averaged = np.einsum("n,nij->ij", chars, pg.ptms) / pg.order
            assert np.max(np.abs(averaged - character_projector(sig))) <= 1e-10
    elapsed = time.time() - t0
    assert elapsed < 60.0
    print(f"\n[ok] representation data: orders, blocks, characters in {elapsed:.1f}s")


def test_gate_dependent_rate_matches_transfer_eigenvalue():
    """Fitted decay tracks the dominant transfer-operator eigenvalue to 1e-3."""
    t0 = time.time()
    cases = (
        ("clifford1", "Z", "adjoint"),
        ("clifford1_tensor2", "ZZ", "11"),
    )
    infidelities = np.logspace(-3, -2, 10)
    worst = 0.0
    for name, sig, block in cases:
        g = builtin_group(name)
        dec = analytic_decomposition(g)
        proj = dec.projector(block)
        for seed in range(10):
            nm = NoiseModel.gate_dependent_random_unitary(
                g, float(infidelities[seed]), seed=seed
            )
            lam = gate_dependent_decay_rate(g, nm.noisy_gates(g), proj)
            spec = ExperimentSpec(
                group=g,
                lengths=tuple(range(1, 11)),
                num_sequences=150,
                noise=nm,
                mode="exact",
                seed=seed,
                char_group=builtin_group("pauli", g.q),
                sigma_hat=sig,
                state=state_vec(state_pauli_mix(sig)),
                effect=effect_vec(effect_pauli_half(sig)),
                noisy_inverse=False,
            )
            curve = run_experiment(spec, threads=4)
            errs = curve.std_errors if np.any(curve.std_errors > 0) else None
            fit = fit_single_exponential(curve.lengths, curve.values, errs)
            worst = max(worst, abs(fit.rate - lam))
    elapsed = time.time() - t0
    assert worst <= 1e-3
    assert elapsed < 300.0
    print(
        f"\n[ok] gate-dependent decay: max |fit - eigenvalue| = {worst:.2e} "
        f"over 2 groups x 10 seeds in {elapsed:.1f}s"
    )


def test_shot_noise_coverage_and_sample_planning():
    """Three-sigma intervals cover the true decay in at least 93 of 100 runs,
    and the worst-case sample-size planner returns its two closed forms."""
    t0 = time.time()
    g = builtin_group("clifford1")
    char_group = builtin_group("pauli", 1)
    covered = 0
    for i in range(100):
        spec = ExperimentSpec(
            group=g,
            lengths=tuple(range(1, 11)),
            num_sequences=25,
            noise=NoiseModel.depolarizing(1, 0.95),
            mode="shots",
            shots=60,
            seed=1000 + i,
            char_group=char_group,
            sigma_hat="Z",
            state=state_vec(state_pauli_mix("Z")),
            effect=effect_vec(effect_pauli_half("Z")),
            noisy_inverse=False,
        )
        curve = run_experiment(spec, threads=4)
        fit = fit_single_exponential(curve.lengths, curve.values, curve.std_errors)
        assert fit.stderr_rate > 0
        if abs(fit.rate - 0.95) <= 3.0 * fit.stderr_rate:
            covered += 1
    elapsed = time.time() - t0
    assert covered >= 93
    assert hoeffding_sample_size(0.02, 0.99) == 26492
    assert hoeffding_sample_size_variant(0.02, 0.99) == 1758
    print(
        f"\n[ok] shot-noise calibration: {covered}/100 within 3 stderr "
        f"in {elapsed:.1f}s; planner gives 26492 / 1758"
    )


def test_block_weights_and_dihedral_expression():
    """Fidelity weights are (1,3,3,9)/4 for the two-qubit local group, and the
    dihedral infidelity expression equals 1 - F for random decay pairs."""
    g = builtin_group("clifford1_tensor2")
    dec = analytic_decomposition(g)
    dims = dict(zip(dec.labels, dec.dims))
    assert dims == {"00": 1, "10": 3, "01": 3, "11": 9}

    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(50):
        a, b, c = rng.uniform(0.0, 1.0, size=3)
        est = fidelity_from_quality({"10": a, "01": b, "11": c}, dims, q=2)
        manual = ((1.0 + 3.0 * a + 3.0 * b + 9.0 * c) / 4.0 + 1.0) / 5.0
        worst = max(worst, abs(est.f_avg - manual))
    assert worst <= 1e-12

    worst_dihedral = 0.0
    for _ in range(100):
        f2, f3 = rng.uniform(0.0, 1.0, size=2)
        q = int(rng.integers(1, 3))
        d = 2**q
        displayed = ((d - 1.0) / d) * (1.0 - (f2 + d * f3) / (d + 1.0))
        dihedral_dims = {"trivial": 1, "pauli_z": d - 1, "pauli_xy": d * d - d}
        est = fidelity_from_quality(
            {"pauli_z": f2, "pauli_xy": f3}, dihedral_dims, q=q
        )
        worst_dihedral = max(
            worst_dihedral,
            abs(dihedral_infidelity(f2, f3, q) - displayed),
            abs((1.0 - est.f_avg) - displayed),
        )
    assert worst_dihedral <= 1e-12
    print(
        f"\n[ok] block weights (1,3,3,9)/4 and dihedral expression: "
        f"max diff {max(worst, worst_dihedral):.3e}"
    )
