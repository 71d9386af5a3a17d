"""Sequence-level benchmarking engine.

Runs standard, character-weighted, and interleaved experiments over a gate
group in three modes:

``exact``
    Samples random gate sequences, then computes each sequence's survival or
    character-weighted value as an exact expectation.  For character runs the
    extra-gate average runs over the full character group (all terms weighted
    by the character), which for gate-independent noise is evaluated in closed
    form by inserting the character projector.

``shots``
    Same sequences, but every data point is a finite set of single-shot
    Bernoulli outcomes: draw an extra gate uniformly, draw a pure component of
    the prepared state, flip a coin with the outcome probability, flip the
    result again with the measurement-error probability.

``average``
    No sampling at all: the full average over gate sequences is evaluated
    through group twirls, giving the exact multi-exponential decay.  Only
    available for gate-independent noise.

Conventions: the noise of a group gate acts after the ideal gate
(noisy(G) = E @ G); the noise of the interleaved gate acts before it
(noisy(C) = C @ E_C), i.e. between the preceding group gate and C.  The extra
character gate is compiled into the first gate of the sequence, and the
closing inverse undoes every gate and interleaved gate but not the extra gate.

Randomness is counter-based: the stream for sequence draws is keyed by
(master seed, m, sequence index) and each shot by (master seed, m, sequence
index, shot index), so results are independent of evaluation order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .groups import GateGroup
from .irreps import (
    IrrepDecomposition,
    analytic_decomposition,
    character_projector,
    numeric_decomposition,
    pauli_character,
    twirl,
)
from .noise import NoiseModel, SpamModel
from .paulis import PauliString
from .superop import effect_vec, effect_zero, is_unitary_ptm, state_vec, state_zero

MODES = ("exact", "shots", "average")


class EngineError(ValueError):
    """Raised for invalid experiment configurations."""


class PhysicalityError(RuntimeError):
    """An intermediate probability left the physically tolerable window."""


# ---------------------------------------------------------------------------
# Experiment configuration
# ---------------------------------------------------------------------------


def _decomposition_for(group: GateGroup) -> IrrepDecomposition:
    try:
        return analytic_decomposition(group)
    except Exception:
        return numeric_decomposition(group)


@dataclass
class ExperimentSpec:
    """Complete description of one benchmarking run.

    ``char_group`` (a builtin Pauli group) plus ``sigma_hat`` select character
    weighting; leaving them unset gives standard benchmarking.  The target
    block ``target_irrep`` is inferred from ``sigma_hat`` when omitted, and
    the construction check P_sigma P_target = P_sigma is enforced.
    """

    group: GateGroup
    lengths: tuple[int, ...]
    num_sequences: int
    noise: NoiseModel
    mode: str = "exact"
    seed: int = 0
    char_group: GateGroup | None = None
    sigma_hat: str | None = None
    target_irrep: str | None = None
    interleaved: np.ndarray | None = None
    interleaved_noise: NoiseModel | None = None
    state: np.ndarray | None = None
    effect: np.ndarray | None = None
    spam: SpamModel = field(default_factory=SpamModel)
    shots: int = 0
    noisy_inverse: bool = True
    keep_records: bool = False

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise EngineError(f"mode must be one of {MODES}, got {self.mode!r}")
        self.lengths = tuple(int(m) for m in self.lengths)
        if not self.lengths or min(self.lengths) < 1:
            raise EngineError("lengths must be a nonempty list of m >= 1")
        if self.num_sequences < 1:
            raise EngineError("num_sequences must be >= 1")
        if self.seed < 0:
            raise EngineError("master seed must be nonnegative")
        if self.mode == "shots" and self.shots < 1:
            raise EngineError("shots mode needs shots >= 1")
        if self.noise.q != self.group.q:
            raise EngineError("noise and group act on different qubit counts")
        if self.mode == "average" and not self.noise.gate_independent:
            raise EngineError("average mode requires gate-independent noise")

        q = self.group.q
        if self.state is None:
            self.state = state_vec(state_zero(q))
        if self.effect is None:
            self.effect = effect_vec(effect_zero(q))
        dim = 4**q
        if len(self.state) != dim or len(self.effect) != dim:
            raise EngineError("state/effect vectors do not match the group dimension")

        if (self.char_group is None) != (self.sigma_hat is None):
            raise EngineError("char_group and sigma_hat must be given together")
        if self.char_group is not None:
            if not self.char_group.name.startswith("pauli("):
                raise EngineError("character group must be a builtin pauli group")
            if self.char_group.q != q:
                raise EngineError("character group qubit count mismatch")
            sig = PauliString(self.sigma_hat)
            if sig.num_qubits != q:
                raise EngineError(f"sigma_hat {self.sigma_hat!r} is not a {q}-qubit label")
            # locate / verify the target block: P_sigma P_target = P_sigma
            decomp = _decomposition_for(self.group)
            psig = character_projector(sig)
            containing = None
            for lab, proj in zip(decomp.labels, decomp.projectors):
                if np.abs(proj @ psig - psig).max() < 1e-9:
                    containing = lab
                    break
            if containing is None:
                raise EngineError(
                    f"no irrep block of {self.group.name} contains the "
                    f"{self.sigma_hat} axis"
                )
            if self.target_irrep is None:
                self.target_irrep = containing
            elif self.target_irrep != containing:
                raise EngineError(
                    f"P_{self.sigma_hat} P_{self.target_irrep} != P_{self.sigma_hat}; "
                    f"the {self.sigma_hat} axis lies in block {containing!r}"
                )

        if self.interleaved is not None:
            c = np.asarray(self.interleaved, dtype=float)
            if c.shape != (dim, dim):
                raise EngineError("interleaved gate PTM has the wrong shape")
            if not is_unitary_ptm(c):
                raise EngineError(
                    "interleaved gate must be a unitary channel; otherwise the "
                    "closing inverse is not available"
                )
            self.interleaved = c
        if self.interleaved_noise is not None:
            if self.interleaved is None:
                raise EngineError("interleaved_noise given without an interleaved gate")
            if not self.interleaved_noise.gate_independent:
                raise EngineError("interleaved gate noise must be gate independent")
        if self.interleaved is not None and not self.noise.gate_independent:
            raise EngineError(
                "interleaved runs with gate-dependent reference noise are not "
                "supported: the closing inverse leaves the reference group, so "
                "its per-element noise channel is undefined"
            )

    @property
    def is_character(self) -> bool:
        return self.char_group is not None


@dataclass
class DecayCurve:
    """Estimated decay points of one run.

    ``values[i]`` is the mean over sequences at ``lengths[i]``; ``std_errors``
    is the across-sequence standard error (zero in average mode);
    ``per_sequence[i, s]`` keeps each sequence's own estimate.  ``records``
    (optional) holds raw rows (m, seq_index, ghat_label, shot, weight, value);
    exact-mode rows use shot = -1 and value = weight * probability.
    """

    lengths: np.ndarray
    values: np.ndarray
    std_errors: np.ndarray
    n_samples: np.ndarray
    per_sequence: np.ndarray
    mode: str
    records: list[tuple] | None = None

    def point(self, m: int) -> tuple[float, float]:
        i = int(np.nonzero(self.lengths == m)[0][0])
        return float(self.values[i]), float(self.std_errors[i])

    def write_curve_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["m", "k_mean", "std_error", "n"])
            for m, v, s, n in zip(
                self.lengths, self.values, self.std_errors, self.n_samples
            ):
                w.writerow([int(m), repr(float(v)), repr(float(s)), int(n)])

    def write_raw_csv(self, path) -> None:
        import csv

        if self.records is None:
            raise EngineError("run was not configured with keep_records=True")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["m", "seq_index", "ghat_label", "shot", "weight", "value"])
            for row in self.records:
                m, s, lab, shot, weight, value = row
                w.writerow([m, s, lab, shot, repr(float(weight)), repr(float(value))])


# ---------------------------------------------------------------------------
# Shot-level primitives
# ---------------------------------------------------------------------------


def _draw_bit(p: float, meas_fidelity: float, rng: np.random.Generator) -> int:
    """One Bernoulli outcome at probability p, then an assignment flip."""
    if p < -1e-9 or p > 1.0 + 1e-9:
        raise PhysicalityError(f"outcome probability {p} outside [0, 1] tolerance")
    b = 1 if rng.random() < min(max(p, 0.0), 1.0) else 0
    if meas_fidelity < 1.0 and rng.random() < 1.0 - meas_fidelity:
        b ^= 1
    return b


def sample_shot(
    effect: np.ndarray,
    chain: np.ndarray,
    state: np.ndarray,
    spam: SpamModel,
    rng: np.random.Generator,
) -> int:
    """Single-shot outcome of measuring ``effect`` after ``chain`` on ``state``.

    Preparation error is folded into the state, measurement error is applied
    as a classical assignment flip after the draw.
    """
    p = float(np.asarray(effect) @ np.asarray(chain) @ spam.prepare(state))
    return _draw_bit(p, spam.meas_fidelity, rng)


def state_decomposition(
    state: np.ndarray, tol: float = 1e-12
) -> tuple[np.ndarray, np.ndarray]:
    """Convex decomposition (weights, pure component vectors) of a state.

    Eigendecomposes the density matrix and drops zero-weight components.
    Raises if the weights do not sum to one within 1e-9.
    """
    from .paulis import devectorize, vectorize

    rho = devectorize(np.asarray(state, dtype=float))
    evals, evecs = np.linalg.eigh(rho)
    if evals.min() < -1e-9:
        raise PhysicalityError(f"state has negative weight {evals.min()}")
    keep = evals > tol
    weights = np.clip(evals[keep], 0.0, None)
    if abs(weights.sum() - 1.0) > 1e-9:
        raise PhysicalityError(f"state weights sum to {weights.sum()}, expected 1")
    weights = weights / weights.sum()
    comps = np.stack(
        [vectorize(np.outer(v, v.conj())) for v in evecs[:, keep].T]
    )
    return weights, comps


def prepare_mixed_state_sample(
    weights: np.ndarray, components: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Draw one pure component of a convex state decomposition."""
    if abs(float(np.sum(weights)) - 1.0) > 1e-9:
        raise PhysicalityError("decomposition weights must sum to 1")
    idx = rng.choice(len(weights), p=weights)
    return components[idx]


# ---------------------------------------------------------------------------
# Sequence evaluation
# ---------------------------------------------------------------------------


def _sequence_rng(seed: int, m: int, s: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, m, s)))


def _shot_rng(seed: int, m: int, s: int, shot: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, m, s, shot)))


class _Runtime:
    """Precomputed immutable tables shared by every sequence of a run."""

    def __init__(self, spec: ExperimentSpec):
        self.spec = spec
        g = spec.group
        self.dim = 4**g.q
        self.noisy = spec.noise.noisy_gates(g)
        self.rho = spec.spam.prepare(spec.state)
        self.q_eff = spec.spam.effect(spec.effect)
        if spec.interleaved is not None:
            ec = (
                spec.interleaved_noise.ptm
                if spec.interleaved_noise is not None
                else np.eye(self.dim)
            )
            self.c_ideal = spec.interleaved
            self.c_noisy = spec.interleaved @ ec
        else:
            self.c_ideal = None
            self.c_noisy = None
        if spec.is_character:
            self.chi = pauli_character(spec.sigma_hat, spec.char_group)
            self.psig = character_projector(spec.sigma_hat)
            self.ghat_ptms = spec.char_group.ptms
            if not spec.noise.gate_independent:
                try:
                    self.ghat_in_group = [
                        g.index_of(p) for p in spec.char_group.ptms
                    ]
                except Exception as err:
                    raise EngineError(
                        "character gates must lie in the benchmarked group so "
                        "their compiled noise is defined"
                    ) from err
        if spec.mode == "shots":
            self.comp_weights, self.comps = state_decomposition(self.rho)

    def chain_pieces(self, gate_idx: np.ndarray):
        """(suffix after the first applied gate, ideal word of the sequence).

        The suffix is the product of all noisy gates after the first one,
        including interleaved gates and the (possibly noisy) closing inverse.
        The ideal word excludes noise and the extra character gate.
        """
        spec = self.spec
        dim = self.dim
        suffix = np.eye(dim)
        word = np.eye(dim)
        for j, gi in enumerate(gate_idx):
            gi = int(gi)
            if j > 0:
                suffix = self.noisy[gi] @ suffix
            word = spec.group.ptms[gi] @ word
            if self.c_noisy is not None:
                suffix = self.c_noisy @ suffix
                word = self.c_ideal @ word
        inv = word.T
        if spec.noisy_inverse:
            if spec.noise.gate_independent:
                inv_noisy = spec.noise.ptm @ inv
            else:
                inv_noisy = spec.noise.channel(spec.group.index_of(inv)) @ inv
        else:
            inv_noisy = inv
        return inv_noisy @ suffix, word


def _exact_sequence(rt: _Runtime, m: int, s: int):
    """Exact expectation value (and raw rows) of one sampled sequence."""
    spec = rt.spec
    rng = _sequence_rng(spec.seed, m, s)
    gate_idx = rng.integers(0, spec.group.order, size=m)
    chain_after_first, _ = rt.chain_pieces(gate_idx)

    first = int(gate_idx[0])
    rows = []
    if not spec.is_character:
        value = float(rt.q_eff @ chain_after_first @ rt.noisy[first] @ rt.rho)
        if spec.keep_records:
            rows.append((m, s, "-", -1, 1.0, value))
        return value, rows

    if spec.noise.gate_independent:
        # the extra gate enters the chain linearly, so the character average
        # over the full group equals one evaluation through the projector
        value = float(
            rt.q_eff @ chain_after_first @ rt.noisy[first] @ rt.psig @ rt.rho
        )
        if spec.keep_records:
            rows.append((m, s, "avg", -1, 1.0, value))
        return value, rows

    left = rt.q_eff @ chain_after_first
    total = 0.0
    for gh, ghat_idx in enumerate(rt.ghat_in_group):
        cidx = spec.group.multiply(first, ghat_idx)
        p = float(left @ rt.noisy[cidx] @ rt.rho)
        term = rt.chi[gh] * p
        total += term
        if spec.keep_records:
            rows.append((m, s, spec.char_group.label_of(gh), -1, rt.chi[gh], term))
    return total / len(rt.ghat_in_group), rows


def _shots_sequence(rt: _Runtime, m: int, s: int):
    """Monte-Carlo estimate of one sequence from single-shot outcomes."""
    spec = rt.spec
    rng = _sequence_rng(spec.seed, m, s)
    gate_idx = rng.integers(0, spec.group.order, size=m)
    chain_after_first, _ = rt.chain_pieces(gate_idx)
    left_meas = spec.effect @ chain_after_first  # raw effect: flip happens per shot

    first = int(gate_idx[0])
    if spec.is_character and not spec.noise.gate_independent:
        left_by_ghat = None  # resolved per shot through the compiled index
    elif spec.is_character:
        left_after_first = left_meas @ rt.noisy[first]
        left_by_ghat = np.stack([left_after_first @ p for p in rt.ghat_ptms])
    else:
        left_by_ghat = None
        left_after_first = left_meas @ rt.noisy[first]

    n_char = len(rt.chi) if spec.is_character else 0
    total = 0.0
    rows = []
    for shot in range(spec.shots):
        srng = _shot_rng(spec.seed, m, s, shot)
        if spec.is_character:
            gh = int(srng.integers(n_char))
        comp = prepare_mixed_state_sample(rt.comp_weights, rt.comps, srng)
        if not spec.is_character:
            p = float(left_after_first @ comp)
        elif left_by_ghat is not None:
            p = float(left_by_ghat[gh] @ comp)
        else:
            cidx = spec.group.multiply(first, rt.ghat_in_group[gh])
            p = float(left_meas @ rt.noisy[cidx] @ comp)
        b = _draw_bit(p, spec.spam.meas_fidelity, srng)
        weight = rt.chi[gh] if spec.is_character else 1.0
        x = weight * b
        total += x
        if spec.keep_records:
            lab = spec.char_group.label_of(gh) if spec.is_character else "-"
            rows.append((m, s, lab, shot, weight, float(x)))
    return total / spec.shots, rows


# ---------------------------------------------------------------------------
# Full-average mode
# ---------------------------------------------------------------------------


def _run_average(spec: ExperimentSpec) -> DecayCurve:
    """Exact average over all gate sequences via group twirls.

    Without interleaving the sequence average telescopes to Tw(E)^m; with an
    interleaved gate C it obeys T_1 = Tw(A), T_{k+1} = Tw(C^T T_k C A) with
    the combined round error A = E_C E, and the curve reads off T_m.
    """
    g = spec.group
    e = spec.noise.ptm
    rho = spec.spam.prepare(spec.state)
    q_eff = spec.spam.effect(spec.effect)
    right = (character_projector(spec.sigma_hat) @ rho) if spec.is_character else rho
    left = (q_eff @ e) if spec.noisy_inverse else q_eff

    lengths = np.array(sorted(set(spec.lengths)), dtype=int)
    values = np.empty(len(lengths), dtype=float)
    if spec.interleaved is None:
        t = twirl(g, e)
        cur = np.eye(t.shape[0])
        prev_m = 0
        for i, m in enumerate(lengths):
            for _ in range(m - prev_m):
                cur = cur @ t
            prev_m = m
            values[i] = float(left @ cur @ right)
    else:
        c = spec.interleaved
        ec = (
            spec.interleaved_noise.ptm
            if spec.interleaved_noise is not None
            else np.eye(c.shape[0])
        )
        a = ec @ e
        t = None
        pos = {int(m): i for i, m in enumerate(lengths)}
        for k in range(1, int(lengths.max()) + 1):
            t = twirl(g, a) if t is None else twirl(g, c.T @ t @ c @ a)
            if k in pos:
                values[pos[k]] = float(left @ t @ right)
    zeros = np.zeros(len(lengths))
    return DecayCurve(
        lengths=lengths,
        values=values,
        std_errors=zeros,
        n_samples=np.ones(len(lengths), dtype=int),
        per_sequence=values[:, None],
        mode="average",
    )


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------


def run_experiment(spec: ExperimentSpec, threads: int = 1) -> DecayCurve:
    """Run a configured experiment and return its decay curve.

    ``threads`` parallelizes sequence evaluation; results are reduced in
    index order, so the output is independent of thread count.
    """
    if spec.mode == "average":
        return _run_average(spec)
    lengths = np.array(sorted(set(spec.lengths)), dtype=int)
    n_seq = spec.num_sequences
    per_seq = np.empty((len(lengths), n_seq))
    rows_out: list[tuple] = []
    evaluate = _exact_sequence if spec.mode == "exact" else _shots_sequence
    rt = _Runtime(spec)

    tasks = [(i, int(m), s) for i, m in enumerate(lengths) for s in range(n_seq)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(
                pool.map(lambda t: evaluate(rt, t[1], t[2]), tasks, chunksize=16)
            )
    else:
        results = [evaluate(rt, m, s) for _, m, s in tasks]
    all_rows: list[list[tuple]] = [[] for _ in lengths]
    for (i, _, s), (value, rows) in zip(tasks, results):
        per_seq[i, s] = value
        if spec.keep_records:
            all_rows[i].extend(rows)
    if spec.keep_records:
        for chunk in all_rows:
            rows_out.extend(chunk)

    values = per_seq.mean(axis=1)
    if n_seq > 1:
        std_errors = per_seq.std(axis=1, ddof=1) / np.sqrt(n_seq)
    else:
        std_errors = np.zeros(len(lengths))
    n_per = n_seq * (spec.shots if spec.mode == "shots" else 1)
    return DecayCurve(
        lengths=lengths,
        values=values,
        std_errors=std_errors,
        n_samples=np.full(len(lengths), n_per, dtype=int),
        per_sequence=per_seq,
        mode=spec.mode,
        records=rows_out if spec.keep_records else None,
    )


def run_character_rb(spec: ExperimentSpec, threads: int = 1) -> DecayCurve:
    """Character-weighted run; requires char_group/sigma_hat on the spec."""
    if not spec.is_character:
        raise EngineError("spec has no character group; use run_standard_rb")
    if spec.interleaved is not None:
        raise EngineError("spec interleaves a gate; use run_interleaved_character_rb")
    return run_experiment(spec, threads)


def run_standard_rb(spec: ExperimentSpec, threads: int = 1) -> DecayCurve:
    """Plain survival-probability run without character weighting."""
    if spec.is_character:
        raise EngineError("spec carries a character group; use run_character_rb")
    return run_experiment(spec, threads)


def run_interleaved_character_rb(spec: ExperimentSpec, threads: int = 1) -> DecayCurve:
    """Interleaved run (character weighting optional on the spec)."""
    if spec.interleaved is None:
        raise EngineError("spec has no interleaved gate")
    return run_experiment(spec, threads)


def reference_and_interleaved(
    spec: ExperimentSpec, interleaved: np.ndarray, interleaved_noise: NoiseModel | None,
    threads: int = 1,
) -> tuple[DecayCurve, DecayCurve]:
    """Convenience: run the same spec without and with an interleaved gate."""
    ref = run_experiment(spec, threads)
    inter = run_experiment(
        replace(spec, interleaved=interleaved, interleaved_noise=interleaved_noise),
        threads,
    )
    return ref, inter
