import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from activeclass.belief import Belief, Observation, bayes_risk, expected_information_gain, map_decision, update
from activeclass.planner import (
    AdaptiveIG,
    RecedingHorizon,
    Stop,
    Visit,
    adaptive_greedy_step,
    cost_weighted_greedy_step,
    nonadaptive_greedy_order,
    policy_from_name,
    random_policy_step,
    receding_horizon_step,
    set_expected_loss,
)
from activeclass.belief import OutcomeSpaceTooLarge
from activeclass.scenarios import make_random_instance, make_theorem1_instance

from conftest import bf_entropy, bf_info_gain, bf_outcomes, bf_posterior, make_scenario


def test_theorem1_greedy_picks_half_split_first():
    sc = make_theorem1_instance(8)
    b = Belief.from_prior(sc)
    gains = [expected_information_gain(sc, b, l) for l in range(sc.n_locations)]
    assert gains[0] == pytest.approx(1.0, abs=1e-14)
    assert all(g < 1.0 - 1e-6 for g in gains[1:])
    assert adaptive_greedy_step(sc, b, 0, frozenset()) == Visit(0)


def test_theorem1_binary_search_follow_ups():
    sc = make_theorem1_instance(8)
    b = Belief.from_prior(sc)
    # F1 = 1 puts the object in the first half; F2 splits that half
    pos = update(sc, b, [Observation(0, 1)])
    assert adaptive_greedy_step(sc, pos, 0, frozenset({0})) == Visit(1)
    neg = update(sc, b, [Observation(0, 0)])
    assert adaptive_greedy_step(sc, neg, 0, frozenset({0})) == Visit(2)


def test_stops_below_tau_with_map_decision():
    sc = make_scenario([0.97, 0.03], [[[1, 0], [0, 1]]], tau=0.05)
    b = Belief.from_prior(sc)
    assert adaptive_greedy_step(sc, b, 0, frozenset()) == Stop(0)
    assert cost_weighted_greedy_step(sc, b, 0, frozenset()) == Stop(0)
    assert random_policy_step(np.random.default_rng(0), frozenset(), sc, b) == Stop(0)
    assert receding_horizon_step(sc, b, 0, frozenset(), 2) == Stop(0)


def test_stops_when_everything_visited():
    sc = make_scenario([0.5, 0.5], [[[0.6, 0.4], [0.4, 0.6]]], tau=0.0)
    b = Belief.from_prior(sc)
    assert adaptive_greedy_step(sc, b, 0, frozenset({0})) == Stop(map_decision(sc, b))


def test_tie_goes_to_lowest_index():
    row = [[0.9, 0.1], [0.2, 0.8]]
    sc = make_scenario([0.5, 0.5], [[[0.5, 0.5]] * 2, row, row])
    assert adaptive_greedy_step(sc, Belief.from_prior(sc), 0, frozenset()) == Visit(1)


def test_cost_weighted_examples():
    ig_one = [[1, 0], [0, 1]]
    soft = [[0.2, 0.8], [0.8, 0.2]]
    # equal costs -> same as plain greedy
    sc = make_scenario([0.5, 0.5], [soft, ig_one])
    b = Belief.from_prior(sc)
    assert cost_weighted_greedy_step(sc, b, 0, frozenset()) == adaptive_greedy_step(sc, b, 0, frozenset())
    # equal IG, costs 10 vs 1
    sc = make_scenario([0.5, 0.5], [ig_one, ig_one], cost=[[10, 10], [1, 1]])
    assert cost_weighted_greedy_step(sc, Belief.from_prior(sc), 0, frozenset()) == Visit(1)
    # IG 1.0 at cost 10 (ratio 0.1) vs IG 0.278 at cost 1
    sc = make_scenario([0.5, 0.5], [ig_one, soft], cost=[[10, 10], [1, 1]])
    assert cost_weighted_greedy_step(sc, Belief.from_prior(sc), 0, frozenset()) == Visit(1)
    # zero-cost move does not divide by zero
    sc = make_scenario([0.5, 0.5], [ig_one, soft], cost=[[0, 0], [0, 0]])
    assert cost_weighted_greedy_step(sc, Belief.from_prior(sc), 0, frozenset()) == Visit(0)


def test_cost_horizon_restricts_candidates():
    ig_one = [[1, 0], [0, 1]]
    soft = [[0.45, 0.55], [0.55, 0.45]]
    sc = make_scenario([0.5, 0.5], [ig_one, soft], cost=[[3, 3], [2, 2]])
    b = Belief.from_prior(sc)
    assert cost_weighted_greedy_step(sc, b, 0, frozenset()) == Visit(0)
    assert cost_weighted_greedy_step(sc, b, 0, frozenset(), cost_horizon=2.5) == Visit(1)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_horizon_one_equals_greedy(seed):
    r = np.random.default_rng(seed)
    sc = make_random_instance(int(r.integers(2, 5)), 4, 4, alpha=float(r.choice([0.0, 0.1, 0.3])), seed=seed, tau=0.0)
    b = Belief.from_prior(sc)
    visited = frozenset(int(x) for x in r.choice(4, size=int(r.integers(0, 3)), replace=False))
    assert receding_horizon_step(sc, b, 0, visited, 1) == adaptive_greedy_step(sc, b, 0, visited)


def bf_lookahead(sc, prior, realized, remaining, depth):
    """Best expected cumulative IG over ``depth`` adaptive steps (plain recursion)."""
    if depth == 0 or not remaining or bf_entropy(prior) == 0:
        return 0.0
    best = -1.0
    for loc in remaining:
        feats = [k for k in sc.locations[loc].observed_features if k not in realized]
        val = bf_info_gain(sc, prior, feats)
        for mass, obs in bf_outcomes(sc, prior, feats):
            post, _ = bf_posterior(sc, prior, obs)
            val += mass * bf_lookahead(sc, post, realized | set(feats), remaining - {loc}, depth - 1)
        best = max(best, val)
    return best


def first_step_values(sc, depth):
    prior = list(sc.prior)
    out = []
    for loc in range(sc.n_locations):
        feats = list(sc.locations[loc].observed_features)
        val = bf_info_gain(sc, prior, feats)
        for mass, obs in bf_outcomes(sc, prior, feats):
            post, _ = bf_posterior(sc, prior, obs)
            val += mass * bf_lookahead(sc, post, set(feats), set(range(sc.n_locations)) - {loc}, depth - 1)
        out.append(val)
    return out


def test_two_step_lookahead_beats_greedy_first_choice():
    sc = make_random_instance(4, 4, 4, alpha=0.1, seed=7, uniform_prior=True, tau=0.0)
    b = Belief.from_prior(sc)
    vals = first_step_values(sc, 2)
    best = int(np.argmax(vals))
    greedy = adaptive_greedy_step(sc, b, 0, frozenset())
    two = receding_horizon_step(sc, b, 0, frozenset(), 2)
    assert two == Visit(best)
    assert greedy != two
    assert vals[best] > vals[greedy.location] + 1e-3


@pytest.mark.parametrize("seed", range(6))
def test_full_horizon_picks_an_optimal_ordering_start(seed):
    sc = make_random_instance(3 + seed % 2, 3 + seed % 2, 3 + seed % 2, alpha=0.1, seed=seed, tau=0.0)
    m = sc.n_locations
    vals = first_step_values(sc, m)
    act = receding_horizon_step(sc, Belief.from_prior(sc), 0, frozenset(), m)
    assert vals[act.location] >= max(vals) - 1e-9


def test_horizon_guard():
    sc = make_random_instance(3, 6, 6, alpha=0.1, seed=0, n_values=4, tau=0.0)
    with pytest.raises(OutcomeSpaceTooLarge, match="horizon"):
        receding_horizon_step(sc, Belief.from_prior(sc), 0, frozenset(), 6)


def test_risk_objective_horizon():
    sc = make_random_instance(4, 4, 4, alpha=0.1, seed=7, uniform_prior=True, tau=0.0)
    act = receding_horizon_step(sc, Belief.from_prior(sc), 0, frozenset(), 2, objective="risk")
    assert isinstance(act, Visit)


def test_random_policy_examples():
    sc = make_random_instance(3, 5, 5, alpha=0.1, seed=1, tau=0.0)
    b = Belief.from_prior(sc)
    assert random_policy_step(np.random.default_rng(0), frozenset({0, 1, 2, 3}), sc, b) == Visit(4)
    seq1 = [random_policy_step(np.random.default_rng(5), frozenset(), sc, b) for _ in range(3)]
    r1, r2 = np.random.default_rng(42), np.random.default_rng(42)
    a = [random_policy_step(r1, frozenset(), sc, b).location for _ in range(50)]
    c = [random_policy_step(r2, frozenset(), sc, b).location for _ in range(50)]
    assert a == c and len(set(seq1)) == 1


def test_random_policy_uniform_chi_square():
    sc = make_random_instance(3, 5, 5, alpha=0.1, seed=1, tau=0.0)
    b = Belief.from_prior(sc)
    rng = np.random.default_rng(2024)
    counts = np.zeros(5)
    for _ in range(10_000):
        counts[random_policy_step(rng, frozenset(), sc, b).location] += 1
    assert stats.chisquare(counts).pvalue > 1e-3


def test_nonadaptive_order_examples():
    sc = make_random_instance(4, 5, 5, alpha=0.1, seed=3)
    order = nonadaptive_greedy_order(sc, 5)
    assert sorted(order) == list(range(5))
    assert order[0] == adaptive_greedy_step(sc, Belief.from_prior(sc), 0, frozenset()).location
    assert nonadaptive_greedy_order(sc, 0) == []
    with pytest.raises(ValueError):
        nonadaptive_greedy_order(sc, 6)


def test_nonadaptive_theorem1_needs_every_feature():
    sc = make_theorem1_instance(8)
    order = nonadaptive_greedy_order(sc, 7)
    for r in range(7):
        assert set_expected_loss(sc, order[:r]) > 0
    assert set_expected_loss(sc, order) == pytest.approx(0.0, abs=1e-15)


def test_nonadaptive_sampled_regime_is_deterministic():
    sc = make_random_instance(3, 8, 8, alpha=0.2, seed=11, n_values=4)
    a = nonadaptive_greedy_order(sc, 8, cap=64)
    assert a == nonadaptive_greedy_order(sc, 8, cap=64)
    assert sorted(a) == list(range(8))
    with pytest.raises(OutcomeSpaceTooLarge):
        nonadaptive_greedy_order(sc, 8, cap=64, n_samples=None)


def test_policy_names():
    assert policy_from_name("horizon:3").horizon == 3
    assert isinstance(policy_from_name("adaptive-ig"), AdaptiveIG)
    for bad in ("greedy", "horizon:0", "horizon:x"):
        with pytest.raises(ValueError, match="adaptive-ig"):
            policy_from_name(bad)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from(["adaptive-ig", "cost-ig", "nonadaptive-ig", "horizon:2", "random"]))
def test_every_policy_respects_stopping_rule(seed, name):
    sc = make_random_instance(3, 3, 3, alpha=0.2, seed=seed, tau=0.2)
    pol = policy_from_name(name)
    rng = np.random.default_rng(seed)
    prior = Belief.from_prior(sc)
    for vals in itertools.product(range(2), repeat=2):
        b = update(sc, prior, [Observation(k, v) for k, v in enumerate(vals)])
        act = pol.act(sc, b, 0, frozenset(), rng)
        if bayes_risk(sc, b) <= sc.tau:
            assert act == Stop(map_decision(sc, b))
        else:
            assert isinstance(act, Visit)


def test_receding_horizon_policy_object():
    sc = make_theorem1_instance(4)
    pol = RecedingHorizon(horizon=2)
    assert pol.act(sc, Belief.from_prior(sc), 0, frozenset()) == Visit(0)
