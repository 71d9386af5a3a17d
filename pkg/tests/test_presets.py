"""Preset expansion, override plumbing, and lossless serialization."""

import json

import numpy as np
import pytest

from charb.presets import (
    PRESET_NAMES,
    PresetError,
    get_preset,
    preset_from_dict,
    preset_to_dict,
    spec_from_dict,
    spec_to_dict,
)


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_round_trip_is_lossless(name):
    preset = get_preset(name)
    blob = json.dumps(preset_to_dict(preset), sort_keys=True)
    rebuilt = preset_from_dict(json.loads(blob))
    blob2 = json.dumps(preset_to_dict(rebuilt), sort_keys=True)
    assert blob == blob2
    for a, b in zip(preset.runs, rebuilt.runs):
        assert np.array_equal(a.spec.noise.ptm, b.spec.noise.ptm)
        assert np.array_equal(a.spec.state, b.spec.state)
        assert np.array_equal(a.spec.effect, b.spec.effect)
        if a.spec.interleaved is not None:
            assert np.array_equal(a.spec.interleaved, b.spec.interleaved)


def test_char_preset_shape():
    p = get_preset("supp-fig-2-char")
    assert len(p.runs) == 6
    assert sorted(p.run_names()) == sorted(
        ["ref-ZI", "ref-IZ", "ref-ZZ", "int-ZI", "int-IZ", "int-ZZ"]
    )
    ref = next(r for r in p.runs if r.name == "ref-ZZ").spec
    assert ref.lengths == tuple(range(1, 16))
    assert ref.num_sequences == 100
    assert ref.mode == "exact"
    assert ref.noisy_inverse
    assert ref.spam.prep_fidelity == 0.99 and ref.spam.meas_fidelity == 0.8
    inter = next(r for r in p.runs if r.name == "int-ZZ").spec
    assert inter.interleaved is not None
    assert inter.interleaved_noise is not None
    # reference and interleaved weighting share the same sequence seed, like
    # one dataset post-processed several ways
    assert ref.seed == inter.seed


def test_standard_preset_shape():
    p = get_preset("supp-fig-2-standard")
    assert p.fit_model == "A+B*f^m"
    assert len(p.runs) == 2
    ref = next(r for r in p.runs if r.role == "reference").spec
    assert ref.char_group is None
    assert ref.group.name == "clifford2"


def test_windows_match_reference_panel():
    char = get_preset("supp-fig-2-char").windows
    std = get_preset("supp-fig-2-standard").windows
    assert char == {
        "F_ref": (0.97, 0.99),
        "F_int": (0.85, 0.89),
        "bound_lower": (0.76, 0.82),
        "F_est": (0.87, 0.91),
    }
    assert std == {
        "F_ref": (0.84, 0.88),
        "F_int": (0.76, 0.80),
        "bound_lower": (0.58, 0.66),
        "F_est": (0.88, 0.92),
    }


def test_tgate_presets_target_dihedral_blocks():
    f2 = get_preset("tgate-f2")
    f3 = get_preset("tgate-f3")
    assert f2.runs[0].spec.sigma_hat == "Z"
    assert f3.runs[0].spec.sigma_hat == "X"
    assert f2.sigma_to_block == {"Z": "pauli_z"}
    assert f3.sigma_to_block == {"X": "pauli_xy"}
    assert f2.runs[0].spec.mode == "shots"
    assert f2.runs[0].spec.noise.params["p"] == 0.95


def test_seed_override_changes_noise_realization():
    a = get_preset("supp-fig-2-char", {"seed": 1})
    b = get_preset("supp-fig-2-char", {"seed": 2})
    assert np.abs(a.runs[0].spec.noise.ptm - b.runs[0].spec.noise.ptm).max() > 1e-9


def test_fidelity_override_reaches_noise_strength():
    from charb.superop import avg_fidelity

    p = get_preset("supp-fig-2-char", {"single_qubit_fidelity": 0.987})
    # per-qubit infidelity 0.013 twice, slightly superadditive in the tensor
    f = avg_fidelity(p.runs[0].spec.noise.ptm)
    assert 0.96 < f < 0.98
    assert f < avg_fidelity(get_preset("supp-fig-2-char").runs[0].spec.noise.ptm)


def test_unknown_names_rejected():
    with pytest.raises(PresetError):
        get_preset("no-such-preset")
    with pytest.raises(PresetError):
        get_preset("tgate-f2", {"typo_key": 1})


def test_spec_dict_survives_json(tmp_path):
    spec = get_preset("tgate-f2").runs[0].spec
    d = spec_to_dict(spec)
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(d))
    back = spec_from_dict(json.loads(path.read_text()))
    assert back.lengths == spec.lengths
    assert back.sigma_hat == spec.sigma_hat
    assert np.array_equal(back.noise.ptm, spec.noise.ptm)
    assert json.dumps(spec_to_dict(back), sort_keys=True) == json.dumps(
        d, sort_keys=True
    )
