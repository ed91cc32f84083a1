import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from activeclass.model import (
    Feature,
    ScenarioError,
    is_noiseless,
    load_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
    validate,
)
from activeclass.scenarios import make_random_instance, make_theorem1_instance

from conftest import make_scenario


def binary_scenario(prior=(0.5, 0.5), row0=(0.2, 0.8), row1=(0.8, 0.2)):
    return make_scenario(prior, [[row0, row1]])


def test_valid_scenario_has_no_violations():
    assert validate(binary_scenario()) == []


def test_prior_sum_violation():
    errs = validate(binary_scenario(prior=(0.6, 0.6)))
    assert len(errs) == 1
    assert errs[0].startswith("prior") and "1.2" in errs[0]


def test_cpt_row_violation():
    errs = validate(binary_scenario(row0=(0.3, 0.3)))
    assert len(errs) == 1
    assert "cpt[0]" in errs[0] and "0.6" in errs[0]


def test_other_violations_are_reported_not_raised():
    sc = make_scenario([0.5, 0.5], [[[1, 0], [0, 1]]], loc_features=[[3]], cost=[[-1.0]], loss=[[0, 1], [1, 0]])
    errs = validate(sc)
    assert any(e.startswith("locations[0]") for e in errs)
    assert any(e.startswith("travel_cost") for e in errs)


def test_positive_prior_requirement():
    sc = binary_scenario(prior=(1.0, 0.0))
    assert validate(sc) == []
    assert any("p_min" in e for e in validate(sc, require_positive_prior=True))


def test_round_trip(tmp_path):
    sc = make_random_instance(4, 5, 3, alpha=0.2, seed=3)
    path = tmp_path / "s.json"
    save_scenario(sc, path)
    assert load_scenario(path) == sc


def test_missing_prior_names_field(tmp_path):
    d = scenario_to_dict(binary_scenario())
    del d["hypotheses"][1]["prior"]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(d))
    with pytest.raises(ScenarioError, match="prior"):
        load_scenario(path)


def test_load_rejects_invalid_and_nan(tmp_path):
    d = scenario_to_dict(binary_scenario(prior=(0.6, 0.6)))
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(d))
    with pytest.raises(ScenarioError, match="prior"):
        load_scenario(path)
    path.write_text(json.dumps(scenario_to_dict(binary_scenario())).replace("0.2", "NaN", 1))
    with pytest.raises(ScenarioError, match="NaN"):
        load_scenario(path)


def test_parse_error_has_line_context(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "hypotheses": [\n')
    with pytest.raises(ScenarioError, match="line"):
        load_scenario(path)


def test_loss_defaults_to_zero_one_and_tau_default():
    d = scenario_to_dict(binary_scenario())
    del d["loss"], d["tau"]
    sc = scenario_from_dict(d)
    assert sc.loss == ((0.0, 1.0), (1.0, 0.0))
    assert sc.tau == 0.05


def test_theorem1_file_shape(tmp_path):
    path = tmp_path / "t1.json"
    save_scenario(make_theorem1_instance(8), path)
    sc = load_scenario(path)
    assert (sc.n_hypotheses, sc.n_features, sc.n_locations) == (8, 7, 7)


def test_is_noiseless():
    assert is_noiseless(make_scenario([0.5, 0.5], [[[1, 0], [0, 1]]]))
    assert not is_noiseless(make_scenario([0.5, 0.5], [[[0.5, 0.5], [0, 1]]]))
    # the binary-search construction mixes 0/1 and fair-coin rows
    assert not is_noiseless(make_theorem1_instance(8))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.randoms(use_true_random=False))
def test_is_noiseless_stable_under_reordering(seed, rnd):
    alpha = rnd.choice([0.0, 0.0, 0.1])
    sc = make_random_instance(4, 3, 3, alpha=alpha, seed=seed)
    hp = list(range(sc.n_hypotheses))
    fp = list(range(sc.n_features))
    rnd.shuffle(hp)
    rnd.shuffle(fp)
    feats = tuple(
        Feature(sc.features[k].name, sc.features[k].values, tuple(sc.features[k].cpt[h] for h in hp)) for k in fp
    )
    shuffled = make_scenario([sc.prior[h] for h in hp], [f.cpt for f in feats])
    assert is_noiseless(shuffled) == is_noiseless(sc)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([0.0, 0.1, 0.5]), st.integers(2, 3))
def test_save_load_identity_property(tmp_path_factory, seed, alpha, values):
    sc = make_random_instance(3, 4, 3, alpha=alpha, seed=seed, n_values=values)
    path = tmp_path_factory.mktemp("rt") / "s.json"
    save_scenario(sc, path)
    back = load_scenario(path)
    assert back == sc
    assert abs(sum(back.prior) - 1) <= 1e-9
    assert all(abs(sum(r) - 1) <= 1e-9 for f in back.features for r in f.cpt)
