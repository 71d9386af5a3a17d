import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from charb.fitting import (
    FitInputError,
    InfeasibleBoundsError,
    NoSignalError,
    aggregate,
    dihedral_infidelity,
    fidelity_from_quality,
    fit_offset_exponential,
    fit_single_exponential,
    hoeffding_sample_size,
    hoeffding_sample_size_variant,
    interleaved_bounds,
    interleaved_fidelity_estimate,
)


# -- decay fits -------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(
    st.floats(0.01, 1.0),
    st.floats(0.2, 0.999),
)
def test_single_exponential_noiseless_recovery(amplitude, rate):
    m = np.arange(1, 16)
    res = fit_single_exponential(m, amplitude * rate**m)
    assert abs(res.rate - rate) < 1e-9
    assert abs(res.amplitude - amplitude) < 1e-9
    assert res.converged


def test_single_exponential_negative_rate():
    m = np.arange(1, 13)
    res = fit_single_exponential(m, 0.4 * (-0.7) ** m)
    assert abs(res.rate + 0.7) < 1e-9
    assert abs(res.amplitude - 0.4) < 1e-9


def test_single_exponential_weighted():
    rng = np.random.default_rng(2)
    m = np.arange(1, 21)
    sig = np.full(len(m), 5e-4)
    y = 0.5 * 0.9**m + rng.normal(0, sig)
    res = fit_single_exponential(m, y, sig)
    assert abs(res.rate - 0.9) < 5 * res.stderr_rate
    assert res.stderr_rate < 5e-3


def test_no_signal_raises():
    m = np.arange(1, 8)
    with pytest.raises(NoSignalError):
        fit_single_exponential(m, np.zeros(7), np.full(7, 1e-3))
    # data buried under its error bars counts as no signal too
    with pytest.raises(NoSignalError):
        fit_single_exponential(m, np.full(7, 1e-5), np.full(7, 1e-3))


def test_needs_three_distinct_lengths():
    with pytest.raises(FitInputError):
        fit_single_exponential([2, 2, 5], [0.4, 0.4, 0.3])


def test_offset_exponential_recovery():
    m = np.arange(1, 21)
    res = fit_offset_exponential(m, 0.25 + 0.5 * 0.8**m)
    assert abs(res.offset - 0.25) < 1e-9
    assert abs(res.amplitude - 0.5) < 1e-9
    assert abs(res.rate - 0.8) < 1e-9
    assert not res.non_identifiable


def test_offset_constant_input_flagged_not_raised():
    res = fit_offset_exponential(np.arange(1, 11), np.full(10, 0.37))
    assert res.non_identifiable
    assert res.rate == 1.0
    assert abs(res.offset - 0.37) < 1e-12


# -- fidelity assembly ------------------------------------------------------


def test_fidelity_from_quality_two_for_one_weights():
    dims = {"00": 1, "10": 3, "01": 3, "11": 9}
    est = fidelity_from_quality({"10": 0.9, "01": 0.9, "11": 0.8}, dims, 2)
    expected = ((1 + 3 * 0.9 + 3 * 0.9 + 9 * 0.8) / 4 + 1) / 5
    assert abs(est.f_avg - expected) < 1e-14
    # omitted blocks count as noiseless
    assert est.quality["00"] == 1.0


def test_fidelity_requires_complete_dims():
    with pytest.raises(FitInputError):
        fidelity_from_quality({"a": 0.9}, {"a": 3}, 1)  # dims sum != 4
    with pytest.raises(FitInputError):
        fidelity_from_quality({"zz": 0.9}, {"a": 1, "b": 3}, 1)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.sampled_from([1, 2]))
def test_dihedral_expression_equals_one_minus_f(f2, f3, q):
    d = 2**q
    dims = {"trivial": 1, "pauli_z": d - 1, "pauli_xy": d * d - d}
    f_avg = fidelity_from_quality({"pauli_z": f2, "pauli_xy": f3}, dims, q).f_avg
    assert abs(dihedral_infidelity(f2, f3, q) - (1.0 - f_avg)) < 1e-12


# -- interleaved bounds -----------------------------------------------------


def test_bounds_reference_values():
    b = interleaved_bounds(0.98, 0.87, 2)
    assert abs(b.lower - 0.8304096) < 1e-5
    assert abs(b.estimate - 0.8869863) < 1e-7
    b2 = interleaved_bounds(0.86, 0.78, 2)
    assert abs(b2.lower - 0.6393467) < 1e-5
    assert abs(b2.estimate - 0.9016393) < 1e-7


def test_bounds_perfect_reference_collapses():
    b = interleaved_bounds(1.0, 0.9, 2)
    assert b.upper - b.lower < 1e-6
    assert abs(0.5 * (b.lower + b.upper) - 0.9) < 1e-6


def test_bounds_infeasible_inputs_raise():
    with pytest.raises(InfeasibleBoundsError):
        interleaved_bounds(0.925, 1.0, 2)


def test_bounds_out_of_range_fidelity_is_input_error():
    with pytest.raises(FitInputError):
        interleaved_bounds(1.2, 0.9, 2)
    with pytest.raises(ValueError):
        # FitInputError doubles as ValueError for CLI exit-code mapping
        interleaved_bounds(0.9, 0.1, 2)


def test_bounds_mapping_selection():
    assert interleaved_bounds(0.98, 0.87, 2, mapping="auto").mapping == "polarization"
    alt = interleaved_bounds(0.98, 0.87, 2, mapping="paper")
    assert alt.mapping == "paper"
    # the alternative convention shifts the interval; both stay in [0, 1]
    assert 0.0 <= alt.lower <= alt.upper <= 1.0
    with pytest.raises(FitInputError):
        interleaved_bounds(0.98, 0.87, 2, mapping="bogus")


@settings(max_examples=20, deadline=None)
@given(st.floats(0.8, 0.95), st.floats(0.7, 0.9), st.floats(0.0, 0.04))
def test_bound_lower_monotone_in_f_int(f_ref, f_int, bump):
    assume(f_int + bump < f_ref)
    lo1 = interleaved_bounds(f_ref, f_int, 2).lower
    lo2 = interleaved_bounds(f_ref, f_int + bump, 2).lower
    assert lo2 >= lo1 - 1e-9


def test_estimate_formula():
    est = interleaved_fidelity_estimate(0.86, 0.78, 2)
    ratio = (4 * 0.78 - 1) / (4 * 0.86 - 1)
    assert abs(est - (1 - 0.75 * (1 - ratio))) < 1e-14


# -- planning and aggregation ----------------------------------------------


def test_hoeffding_reference_values():
    assert hoeffding_sample_size(0.02, 0.99, -1.0, 1.0) == 26492
    assert hoeffding_sample_size_variant(0.02, 0.99, 0.0, 1.0) == 1758


def test_hoeffding_is_minimal():
    n = hoeffding_sample_size(0.02, 0.99, -1.0, 1.0)
    delta = 1.0 - 0.99
    assert 2 * math.exp(-2 * n * 0.02**2 / 4.0) <= delta
    assert 2 * math.exp(-2 * (n - 1) * 0.02**2 / 4.0) > delta


def test_hoeffding_input_validation():
    with pytest.raises(FitInputError):
        hoeffding_sample_size(0.0, 0.99)
    with pytest.raises(FitInputError):
        hoeffding_sample_size(0.1, 1.0)
    with pytest.raises(FitInputError):
        hoeffding_sample_size_variant(0.1, 0.5, 1.0, 0.0)


def test_aggregate_matches_numpy():
    rng = np.random.default_rng(4)
    records = []
    for m in (1, 2, 5):
        for s in range(30):
            records.append((m, s, "-", -1, 1.0, rng.normal(0.5, 0.1)))
    curve = aggregate(records)
    assert curve.lengths.tolist() == [1, 2, 5]
    for i, m in enumerate((1, 2, 5)):
        vals = [r[-1] for r in records if r[0] == m]
        assert abs(curve.values[i] - np.mean(vals)) < 1e-12
        assert abs(curve.std_errors[i] - np.std(vals, ddof=1) / math.sqrt(30)) < 1e-12
        assert curve.n_samples[i] == 30


def test_aggregate_empty_raises():
    with pytest.raises(FitInputError):
        aggregate([])
