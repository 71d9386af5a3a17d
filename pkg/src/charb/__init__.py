"""charb: character randomized benchmarking simulator.

Simulates standard, interleaved, and character-weighted randomized
benchmarking over finite gate groups represented by Pauli transfer matrices,
with irreducible-representation projectors, multi-exponential decay fitting,
and interleaved fidelity bounds.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .paulis import PauliString, enumerate_basis, vectorize, devectorize
from .superop import (
    avg_fidelity,
    compose,
    cptp_check,
    depolarizing_ptm,
    identity_ptm,
    ptm_of_unitary,
    tensor_ptm,
)
from .groups import GateGroup, builtin_group, generate_group
from .irreps import (
    analytic_decomposition,
    mixing_matrix,
    numeric_decomposition,
    quality_parameters,
    twirl,
)
from .noise import NoiseModel, SpamModel, random_unitary_ptm
from .engine import DecayCurve, ExperimentSpec, run_experiment
from .fitting import (
    aggregate,
    fidelity_from_quality,
    fit_offset_exponential,
    fit_single_exponential,
    hoeffding_sample_size,
    interleaved_bounds,
)
from .presets import get_preset, execute_preset

__all__ = [
    "DecayCurve",
    "ExperimentSpec",
    "GateGroup",
    "NoiseModel",
    "PauliString",
    "SpamModel",
    "aggregate",
    "analytic_decomposition",
    "avg_fidelity",
    "builtin_group",
    "compose",
    "cptp_check",
    "depolarizing_ptm",
    "devectorize",
    "enumerate_basis",
    "execute_preset",
    "fidelity_from_quality",
    "fit_offset_exponential",
    "fit_single_exponential",
    "generate_group",
    "get_preset",
    "hoeffding_sample_size",
    "identity_ptm",
    "interleaved_bounds",
    "mixing_matrix",
    "numeric_decomposition",
    "ptm_of_unitary",
    "quality_parameters",
    "random_unitary_ptm",
    "run_experiment",
    "tensor_ptm",
    "twirl",
    "vectorize",
]
