"""Noise channels for the benchmarking engine.

Every model answers one question: what channel follows each ideal gate?  The
convention throughout is noise-after-gate, noisy(G) = E_G @ PTM(G).  A model
is either gate independent (one channel for every element) or gate dependent
(one channel per group element, aligned by element index).

Coherent errors are drawn as Gaussian-unitary-ensemble directions with the
rotation angle calibrated by root finding so the channel hits a requested
average infidelity exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import brentq

from .groups import GateGroup
from .paulis import _check_qubits
from .superop import avg_fidelity, depolarizing_ptm, identity_ptm, ptm_of_unitary


class NoiseError(ValueError):
    """Raised for invalid noise parameters or group mismatches."""


def random_unitary_ptm(
    q: int, infidelity: float, seed: int | np.random.SeedSequence | np.random.Generator
) -> np.ndarray:
    """PTM of a random coherent error with exact average infidelity.

    Draws a traceless GUE direction H (Frobenius-normalized), sets
    U = expm(-i t H), and calibrates t by bisecting the closed form
    F(t) = (|tr U(t)|^2 / 2^q + 1) / (2^q + 1) against the target.
    ``infidelity=0`` returns the identity PTM exactly.
    """
    _check_qubits(q)
    d = 2**q
    max_inf = d / (d + 1.0)
    if not 0.0 <= infidelity < max_inf:
        raise NoiseError(
            f"infidelity must lie in [0, {max_inf:.4f}) for q={q}, got {infidelity}"
        )
    if infidelity == 0.0:
        return identity_ptm(q)
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h = (a + a.conj().T) / 2.0
    h -= np.trace(h) / d * np.eye(d)
    h /= np.linalg.norm(h)
    energies = np.linalg.eigvalsh(h)

    target = 1.0 - infidelity

    def gap(t: float) -> float:
        tr_u = np.exp(-1j * t * energies).sum()
        return (abs(tr_u) ** 2 / d + 1.0) / (d + 1.0) - target

    t_hi = 0.1
    while gap(t_hi) > 0.0:
        t_hi *= 2.0
        if t_hi > 1e4:
            raise NoiseError("could not bracket the requested infidelity")
    t_star = brentq(gap, 0.0, t_hi, xtol=1e-14, rtol=1e-15)
    u = scipy.linalg.expm(-1j * t_star * h)
    ptm = ptm_of_unitary(u)
    achieved = avg_fidelity(ptm)
    if abs(achieved - target) > 1e-9:
        raise NoiseError(f"calibration missed: F={achieved} target={target}")
    return ptm


@dataclass(frozen=True)
class NoiseModel:
    """Noise attached to the gates of one group.

    ``kind`` is a human-readable tag; the physics lives in either ``ptm``
    (gate independent) or ``ptms`` (one channel per group element of
    ``group_name``).  Exactly one of the two is set.
    """

    kind: str
    q: int
    ptm: np.ndarray | None = None
    ptms: np.ndarray | None = None
    group_name: str | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if (self.ptm is None) == (self.ptms is None):
            raise NoiseError("exactly one of ptm/ptms must be given")

    @property
    def gate_independent(self) -> bool:
        return self.ptms is None

    def channel(self, index: int | None = None) -> np.ndarray:
        """Noise channel following the gate with the given element index."""
        if self.gate_independent:
            return self.ptm
        if index is None:
            raise NoiseError(f"{self.kind} noise is gate dependent; need an index")
        return self.ptms[int(index)]

    def noisy_gates(self, group: GateGroup) -> np.ndarray:
        """Stack of noisy PTMs E_i @ G_i aligned with ``group.ptms``."""
        if not self.gate_independent:
            if self.group_name is not None and self.group_name != group.name:
                raise NoiseError(
                    f"noise was built for {self.group_name}, not {group.name}"
                )
            if len(self.ptms) != group.order:
                raise NoiseError("per-element noise count does not match group order")
            return np.einsum("gij,gjk->gik", self.ptms, group.ptms)
        return np.einsum("ij,gjk->gik", self.ptm, group.ptms)

    # -- constructors -------------------------------------------------------

    @classmethod
    def identity(cls, q: int) -> "NoiseModel":
        return cls(kind="identity", q=q, ptm=identity_ptm(q))

    @classmethod
    def gate_independent_ptm(cls, ptm: np.ndarray, kind: str = "custom") -> "NoiseModel":
        ptm = np.asarray(ptm, dtype=float)
        q = int(round(np.log2(ptm.shape[0]) / 2))
        if ptm.shape != (4**q, 4**q):
            raise NoiseError(f"not a PTM shape: {ptm.shape}")
        return cls(kind=kind, q=q, ptm=ptm)

    @classmethod
    def depolarizing(cls, q: int, p: float) -> "NoiseModel":
        if not -1.0 <= p <= 1.0:
            raise NoiseError(f"depolarizing parameter must be in [-1, 1], got {p}")
        return cls(kind="depolarizing", q=q, ptm=depolarizing_ptm(q, p), params={"p": p})

    @classmethod
    def random_unitary(cls, q: int, infidelity: float, seed: int) -> "NoiseModel":
        return cls(
            kind="random_unitary",
            q=q,
            ptm=random_unitary_ptm(q, infidelity, seed),
            params={"infidelity": infidelity, "seed": seed},
        )

    @classmethod
    def gate_dependent_random_unitary(
        cls, group: GateGroup, infidelity: float, seed: int
    ) -> "NoiseModel":
        """Independent coherent error per group element, all at one infidelity.

        Element i draws from ``SeedSequence(seed, spawn_key=(i,))`` so the
        channels do not depend on construction order.
        """
        ptms = np.stack(
            [
                random_unitary_ptm(
                    group.q,
                    infidelity,
                    np.random.SeedSequence(entropy=seed, spawn_key=(i,)),
                )
                for i in range(group.order)
            ]
        )
        return cls(
            kind="gate_dependent_random_unitary",
            q=group.q,
            ptms=ptms,
            group_name=group.name,
            params={"infidelity": infidelity, "seed": seed},
        )


@dataclass(frozen=True)
class SpamModel:
    """State-preparation and measurement error.

    Preparation shrinks the traceless part of the state by ``prep_fidelity``
    (a depolarizing kick).  Measurement flips the reported outcome with
    probability ``1 - meas_fidelity``, which maps an effect Q to
    ``(2 F_M - 1) Q + (1 - F_M) 1``.
    """

    prep_fidelity: float = 1.0
    meas_fidelity: float = 1.0

    def __post_init__(self) -> None:
        for name, v in (("prep", self.prep_fidelity), ("meas", self.meas_fidelity)):
            if not 0.0 <= v <= 1.0:
                raise NoiseError(f"{name}_fidelity must be in [0, 1], got {v}")

    @property
    def ideal(self) -> bool:
        return self.prep_fidelity == 1.0 and self.meas_fidelity == 1.0

    def prepare(self, state_vec: np.ndarray) -> np.ndarray:
        out = np.array(state_vec, dtype=float, copy=True)
        out[1:] *= self.prep_fidelity
        return out

    def effect(self, effect_vec: np.ndarray) -> np.ndarray:
        out = (2.0 * self.meas_fidelity - 1.0) * np.asarray(effect_vec, dtype=float)
        q = int(round(np.log2(len(out)) / 2))
        out = out.copy()
        out[0] += (1.0 - self.meas_fidelity) * 2.0 ** (q / 2.0)
        return out
