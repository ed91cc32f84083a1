"""Episode simulation and Monte Carlo comparison of policies.

Each episode owns its random streams, all derived from the episode seed.
The true hypothesis and the policy each get a stream, and every
(feature, realization count) pair gets its own stream for observed values.  Two policies run under the same seed therefore face the
same object and see the same value whenever they look at the same feature,
which makes comparisons paired.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .belief import (
    Belief,
    Observation,
    bayes_risk,
    entropy,
    expected_information_gain,
    expected_posterior_risk,
    map_decision,
    new_features,
    update,
)
from .model import Scenario
from .planner.policies import Policy, Stop, Visit, argbest, candidates

START_LOCATION = 0


@dataclass(frozen=True)
class Step:
    location: int
    observations: tuple[Observation, ...]
    entropy_after: float
    cumulative_cost: float
    decision_after: int
    true_prob_after: float
    ig_choice: int | None = None
    risk_choice: int | None = None


@dataclass
class EpisodeRecord:
    scenario_id: str
    policy: str
    seed: int
    true_hypothesis: int
    prior_entropy: float
    prior_decision: int
    prior_true_prob: float
    steps: list[Step] = field(default_factory=list)
    decision: int = 0
    loss: float = 0.0
    correct: bool = False

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    @property
    def cost(self) -> float:
        return self.steps[-1].cumulative_cost if self.steps else 0.0

    @property
    def final_entropy(self) -> float:
        return self.steps[-1].entropy_after if self.steps else self.prior_entropy

    def at_budget(self, b: int) -> tuple[int, float, float]:
        """(MAP decision, true-class posterior, entropy) after the first ``b`` views."""
        if b <= 0 or not self.steps:
            return self.prior_decision, self.prior_true_prob, self.prior_entropy
        s = self.steps[min(b, len(self.steps)) - 1]
        return s.decision_after, s.true_prob_after, s.entropy_after


def episode_seed(base_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([base_seed, index]).generate_state(1)[0])


def _sample_value(scenario: Scenario, h: int, k: int, seed: int, count: int) -> int:
    p = scenario.cpt_array(k)[h]
    u = np.random.default_rng([seed, 1, k, count]).random()
    return int(min(np.searchsorted(np.cumsum(p), u, side="right"), len(p) - 1))


def _agreement(scenario: Scenario, belief: Belief, visited, allow_revisit: bool):
    cands = candidates(scenario, visited, allow_revisit)
    if not cands:
        return None, None
    ig = [expected_information_gain(scenario, belief, c, allow_revisit) for c in cands]
    risk = [expected_posterior_risk(scenario, belief, c, allow_revisit) for c in cands]
    return cands[argbest(ig)], cands[argbest(risk, maximize=False)]


def run_episode(
    scenario: Scenario,
    policy: Policy,
    true_h: int | None = None,
    seed: int = 0,
    max_steps: int | None = None,
    record_agreement: bool = False,
) -> EpisodeRecord:
    """Run ``policy`` against a (sampled or given) true hypothesis until it stops."""
    if max_steps is None:
        max_steps = scenario.n_locations
    if max_steps < 0:
        raise ValueError("max_steps must be >= 0")
    if true_h is None:
        true_h = int(np.random.default_rng([seed, 0]).choice(scenario.n_hypotheses, p=scenario.prior_array))
    policy_rng = np.random.default_rng([seed, 2])

    belief = Belief.from_prior(scenario)
    rec = EpisodeRecord(
        scenario_id=scenario.name,
        policy=policy.name,
        seed=seed,
        true_hypothesis=true_h,
        prior_entropy=entropy(belief),
        prior_decision=map_decision(scenario, belief),
        prior_true_prob=float(belief.probs[true_h]),
    )
    here, visited, spent = START_LOCATION, set(), 0.0
    counts: dict[int, int] = {}
    decision = None
    while len(rec.steps) < max_steps:
        act = policy.act(scenario, belief, here, frozenset(visited), policy_rng)
        if isinstance(act, Stop):
            decision = act.decision
            break
        assert isinstance(act, Visit)
        ig_c = risk_c = None
        if record_agreement:
            ig_c, risk_c = _agreement(scenario, belief, visited, policy.allow_revisit)
        loc = act.location
        obs = []
        for k in new_features(scenario, belief, [loc], policy.allow_revisit):
            c = counts.get(k, 0)
            counts[k] = c + 1
            obs.append(Observation(k, _sample_value(scenario, true_h, k, seed, c)))
        belief = update(scenario, belief, obs, allow_repeat=policy.allow_revisit)
        spent += scenario.cost(loc, here)
        here = loc
        visited.add(loc)
        rec.steps.append(
            Step(
                location=loc,
                observations=tuple(obs),
                entropy_after=entropy(belief),
                cumulative_cost=spent,
                decision_after=map_decision(scenario, belief),
                true_prob_after=float(belief.probs[true_h]),
                ig_choice=ig_c,
                risk_choice=risk_c,
            )
        )
    if decision is None:
        decision = map_decision(scenario, belief)
    rec.decision = decision
    rec.loss = float(scenario.loss_array[decision, true_h])
    rec.correct = decision == true_h
    return rec


@dataclass
class RunSummary:
    policy: str
    n_episodes: int
    mean_cost: float
    std_cost: float
    mean_loss: float
    std_loss: float
    accuracy: float
    mean_steps: float
    ig_curve: list[float]
    accuracy_curve: list[float]
    episodes: list[EpisodeRecord] = field(default_factory=list, repr=False)


def _run_one(args):
    scenario, policy, seed, max_steps, record = args
    return run_episode(scenario, policy, None, seed, max_steps, record)


def run_episodes(
    scenario: Scenario,
    policy: Policy,
    n_runs: int,
    base_seed: int,
    max_steps: int | None = None,
    workers: int = 1,
    record_agreement: bool = False,
) -> list[EpisodeRecord]:
    """Episodes in index order; results do not depend on ``workers``."""
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    jobs = [(scenario, policy, episode_seed(base_seed, i), max_steps, record_agreement) for i in range(n_runs)]
    if workers <= 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, jobs, chunksize=max(1, n_runs // (4 * workers))))


def summarize(scenario: Scenario, policy_name: str, episodes: list[EpisodeRecord]) -> RunSummary:
    costs = np.array([e.cost for e in episodes])
    losses = np.array([e.loss for e in episodes])
    budgets = range(1, scenario.n_locations + 1)
    ig_curve, acc_curve = [], []
    for b in budgets:
        at = [e.at_budget(b) for e in episodes]
        ig_curve.append(float(np.mean([e.prior_entropy - a[2] for e, a in zip(episodes, at)])))
        acc_curve.append(float(np.mean([a[0] == e.true_hypothesis for e, a in zip(episodes, at)])))
    return RunSummary(
        policy=policy_name,
        n_episodes=len(episodes),
        mean_cost=float(costs.mean()),
        std_cost=float(costs.std()),
        mean_loss=float(losses.mean()),
        std_loss=float(losses.std()),
        accuracy=float(np.mean([e.correct for e in episodes])),
        mean_steps=float(np.mean([e.n_steps for e in episodes])),
        ig_curve=ig_curve,
        accuracy_curve=acc_curve,
        episodes=episodes,
    )


def monte_carlo(
    scenario: Scenario,
    policy: Policy,
    n_runs: int,
    base_seed: int,
    max_steps: int | None = None,
    workers: int = 1,
) -> RunSummary:
    eps = run_episodes(scenario, policy, n_runs, base_seed, max_steps, workers)
    return summarize(scenario, policy.name, eps)


@dataclass
class ComparisonTable:
    policies: list[str]
    budgets: list[int]
    # per policy, one list entry per budget
    accuracy: list[list[float]]
    metric_mean: list[list[float]]
    metric_std: list[list[float]]
    agreement: list[float]

    def column(self, policy_index: int, what: str = "accuracy") -> list[float]:
        return getattr(self, what)[policy_index]


def compare_policies(
    scenario: Scenario,
    policies: list[Policy],
    n_runs: int,
    budgets: list[int] | None = None,
    base_seed: int = 0,
    workers: int = 1,
    record_agreement: bool = True,
) -> ComparisonTable:
    """Accuracy and true-class posterior of each policy after each view budget.

    Policies run with ``tau = 0`` on shared episode seeds; trajectories are cut
    at each budget.  ``agreement`` is, per budget ``b``, the fraction of
    decision points at step ``b`` (pooled over policies) where the one-step
    IG choice equals the one-step expected-risk choice.
    """
    m = scenario.n_locations
    budgets = list(range(1, m + 1)) if budgets is None else list(budgets)
    acc, mmean, mstd = [], [], []
    agree_hits = np.zeros(len(budgets))
    agree_n = np.zeros(len(budgets))
    for pol in policies:
        eps = run_episodes(
            scenario, pol.with_tau(0.0), n_runs, base_seed, max(budgets, default=0), workers, record_agreement
        )
        a_row, mm_row, ms_row = [], [], []
        for j, b in enumerate(budgets):
            at = [e.at_budget(b) for e in eps]
            a_row.append(float(np.mean([d == e.true_hypothesis for e, (d, _, _) in zip(eps, at)])))
            probs = np.array([p for _, p, _ in at])
            mm_row.append(float(probs.mean()))
            ms_row.append(float(probs.std()))
            for e in eps:
                if 0 < b <= e.n_steps and e.steps[b - 1].ig_choice is not None:
                    s = e.steps[b - 1]
                    agree_n[j] += 1
                    agree_hits[j] += s.ig_choice == s.risk_choice
        acc.append(a_row)
        mmean.append(mm_row)
        mstd.append(ms_row)
    agreement = [float(h / n) if n else math.nan for h, n in zip(agree_hits, agree_n)]
    return ComparisonTable([p.name for p in policies], budgets, acc, mmean, mstd, agreement)
