"""Step-wise view selection policies.

Every policy shares one stopping rule: stop with the loss-weighted MAP
decision once the Bayes risk is at or below ``tau``, or when no location is
left to visit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..belief import (
    MC_OUTCOME_SAMPLES,
    OUTCOME_ENUM_CAP,
    Belief,
    OutcomeSpaceTooLarge,
    bayes_risk,
    branch,
    entropy,
    expected_entropy,
    expected_information_gain,
    map_decision,
    new_features,
    outcome_space_size,
)
from ..model import Scenario

COST_EPS = 1e-9
TIE_TOL = 1e-12
LOOKAHEAD_NODE_CAP = 200_000


@dataclass(frozen=True)
class Visit:
    location: int


@dataclass(frozen=True)
class Stop:
    decision: int


Action = Visit | Stop


@dataclass(frozen=True)
class PlannerConfig:
    horizon: int = 1
    cost_horizon: float | None = None
    tau: float | None = None  # None: use the scenario's tau
    allow_revisit: bool = False
    seed: int = 0
    mc_samples: int = MC_OUTCOME_SAMPLES
    outcome_cap: int = OUTCOME_ENUM_CAP
    objective: str = "ig"  # receding-horizon objective: "ig" or "risk"
    state_cap: int = 1_000_000

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.tau is not None and self.tau < 0:
            raise ValueError("tau must be >= 0")
        if self.objective not in ("ig", "risk"):
            raise ValueError("objective must be 'ig' or 'risk'")


def _tau(scenario: Scenario, tau: float | None) -> float:
    return scenario.tau if tau is None else tau


def candidates(scenario: Scenario, visited, allow_revisit: bool = False) -> list[int]:
    if allow_revisit:
        return list(range(scenario.n_locations))
    return [i for i in range(scenario.n_locations) if i not in visited]


def stop_action(scenario: Scenario, belief: Belief, cands: Sequence[int], tau: float) -> Stop | None:
    """The shared stopping rule; ``None`` means keep going."""
    if not cands or bayes_risk(scenario, belief) <= tau:
        return Stop(map_decision(scenario, belief))
    return None


def argbest(scores: Sequence[float], maximize: bool = True, tol: float = TIE_TOL) -> int:
    """Position of the best score; near-ties go to the earliest position."""
    s = np.asarray(scores, dtype=float)
    if maximize:
        return int(np.flatnonzero(s >= s.max() - tol)[0])
    return int(np.flatnonzero(s <= s.min() + tol)[0])


def adaptive_greedy_step(
    scenario: Scenario,
    belief: Belief,
    current_location: int,
    visited,
    tau: float | None = None,
    allow_revisit: bool = False,
) -> Action:
    """Visit the location with the largest one-step expected information gain."""
    cands = candidates(scenario, visited, allow_revisit)
    stop = stop_action(scenario, belief, cands, _tau(scenario, tau))
    if stop is not None:
        return stop
    gains = [expected_information_gain(scenario, belief, c, allow_revisit) for c in cands]
    return Visit(cands[argbest(gains)])


def cost_weighted_greedy_step(
    scenario: Scenario,
    belief: Belief,
    current_location: int,
    visited,
    tau: float | None = None,
    allow_revisit: bool = False,
    cost_horizon: float | None = None,
) -> Action:
    """Greedy on information gain per unit cost of reaching the location.

    With ``cost_horizon`` set, locations costing more than the horizon are only
    considered when nothing cheaper remains.
    """
    cands = candidates(scenario, visited, allow_revisit)
    stop = stop_action(scenario, belief, cands, _tau(scenario, tau))
    if stop is not None:
        return stop
    costs = [scenario.cost(c, current_location) for c in cands]
    if cost_horizon is not None:
        near = [i for i, c in enumerate(costs) if c <= cost_horizon]
        if near:
            cands = [cands[i] for i in near]
            costs = [costs[i] for i in near]
    ratios = [
        expected_information_gain(scenario, belief, c, allow_revisit) / max(d, COST_EPS)
        for c, d in zip(cands, costs)
    ]
    return Visit(cands[argbest(ratios)])


def random_policy_step(
    rng: np.random.Generator,
    visited,
    scenario: Scenario,
    belief: Belief,
    tau: float | None = None,
    allow_revisit: bool = False,
) -> Action:
    cands = candidates(scenario, visited, allow_revisit)
    stop = stop_action(scenario, belief, cands, _tau(scenario, tau))
    if stop is not None:
        return stop
    return Visit(cands[int(rng.integers(len(cands)))])


class _Lookahead:
    """Depth-limited expectimax over location choices and their outcomes."""

    def __init__(self, scenario, tau, objective, allow_revisit, cap, node_cap=LOOKAHEAD_NODE_CAP):
        self.scenario = scenario
        self.tau = tau
        self.objective = objective
        self.allow_revisit = allow_revisit
        self.cap = cap
        self.node_cap = node_cap
        self.nodes = 0

    def _tick(self):
        self.nodes += 1
        if self.nodes > self.node_cap:
            raise OutcomeSpaceTooLarge(
                f"receding-horizon tree exceeds {self.node_cap} nodes; lower the horizon T"
            )

    def _branches(self, belief, loc):
        feats = new_features(self.scenario, belief, [loc], self.allow_revisit)
        if outcome_space_size(self.scenario, feats) > self.cap:
            raise OutcomeSpaceTooLarge(
                f"location {loc} has more than {self.cap} joint outcomes; lower the horizon T"
            )
        return branch(self.scenario, belief, feats)

    def score(self, belief: Belief, visited: frozenset, loc: int, depth: int) -> float:
        """Value of visiting ``loc`` then acting optimally for ``depth - 1`` more steps.

        IG objective: expected cumulative information gain (maximize).
        Risk objective: expected terminal Bayes risk (minimize).
        """
        self._tick()
        sc = self.scenario
        if self.objective == "ig":
            total = expected_information_gain(sc, belief, loc, self.allow_revisit)
            if depth == 1:
                return total
        elif depth == 1:
            return self._expected_risk(belief, loc)
        else:
            total = 0.0
        vis = visited | {loc}
        for p, obs, post in self._branches(belief, loc):
            child = Belief(post, belief.history + obs)
            total += p * self.value(child, vis, depth - 1)
        return total

    def _expected_risk(self, belief, loc):
        return sum(p * bayes_risk(self.scenario, post) for p, _, post in self._branches(belief, loc))

    def value(self, belief: Belief, visited: frozenset, depth: int) -> float:
        sc = self.scenario
        cands = candidates(sc, visited, self.allow_revisit)
        if not cands or bayes_risk(sc, belief) <= self.tau:
            return 0.0 if self.objective == "ig" else bayes_risk(sc, belief)
        scores = [self.score(belief, visited, c, depth) for c in cands]
        return max(scores) if self.objective == "ig" else min(scores)


def projected_lookahead_nodes(scenario, belief, cands, horizon, allow_revisit=False) -> float:
    """Upper estimate of scored nodes in a depth-``horizon`` lookahead."""
    outs = max(
        (outcome_space_size(scenario, new_features(scenario, belief, [c], allow_revisit)) for c in cands),
        default=1,
    )
    total, level = 0.0, 1.0
    for d in range(horizon):
        width = len(cands) if allow_revisit else max(len(cands) - d, 0)
        level *= width
        total += level
        level *= outs
    return total


def receding_horizon_step(
    scenario: Scenario,
    belief: Belief,
    current_location: int,
    visited,
    horizon: int,
    tau: float | None = None,
    objective: str = "ig",
    allow_revisit: bool = False,
    cap: int = OUTCOME_ENUM_CAP,
) -> Action:
    """First action of the best depth-``horizon`` adaptive plan."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    t = _tau(scenario, tau)
    cands = candidates(scenario, visited, allow_revisit)
    stop = stop_action(scenario, belief, cands, t)
    if stop is not None:
        return stop
    projected = projected_lookahead_nodes(scenario, belief, cands, horizon, allow_revisit)
    if projected > LOOKAHEAD_NODE_CAP:
        raise OutcomeSpaceTooLarge(
            f"receding-horizon tree projects to {projected:.3g} nodes "
            f"(cap {LOOKAHEAD_NODE_CAP}); lower the horizon T"
        )
    look = _Lookahead(scenario, t, objective, allow_revisit, cap)
    vis = frozenset(visited)
    scores = [look.score(belief, vis, c, horizon) for c in cands]
    return Visit(cands[argbest(scores, maximize=(objective == "ig"), tol=1e-9 if horizon > 1 else TIE_TOL)])


def nonadaptive_greedy_order(
    scenario: Scenario,
    budget_steps: int,
    belief: Belief | None = None,
    cap: int = OUTCOME_ENUM_CAP,
    n_samples: int | None = MC_OUTCOME_SAMPLES,
    seed: int = 0,
) -> list[int]:
    """Fixed view ordering built greedily on the marginal set information gain.

    Gains are computed under ``belief`` (the prior by default), exactly while
    the joint outcome space fits under ``cap`` and by sampling beyond it
    (``n_samples=None`` disables sampling and raises instead).
    """
    m = scenario.n_locations
    if budget_steps < 0 or budget_steps > m:
        raise ValueError(f"budget_steps must lie in [0, {m}]")
    b = Belief.from_prior(scenario) if belief is None else belief
    chosen: list[int] = []
    current_h = entropy(b)
    for _ in range(budget_steps):
        rest = [c for c in range(m) if c not in chosen]
        post_h = []
        for c in rest:
            feats = new_features(scenario, b, chosen + [c])
            post_h.append(expected_entropy(scenario, b, feats, cap, n_samples, seed))
        gains = [current_h - h for h in post_h]
        i = argbest(gains)
        chosen.append(rest[i])
        current_h = post_h[i]
    return chosen


# ---------------------------------------------------------------------------
# policy objects used by the simulator and the exact evaluator


@dataclass
class Policy:
    """Base policy: ``act`` maps the agent's state to an action."""

    name: str = "policy"
    tau: float | None = None
    allow_revisit: bool = False
    deterministic = True

    def act(self, scenario, belief, current, visited, rng=None) -> Action:
        raise NotImplementedError

    def with_tau(self, tau: float | None) -> "Policy":
        import dataclasses

        return dataclasses.replace(self, tau=tau)


@dataclass
class AdaptiveIG(Policy):
    name: str = "adaptive-ig"

    def act(self, scenario, belief, current, visited, rng=None):
        return adaptive_greedy_step(scenario, belief, current, visited, self.tau, self.allow_revisit)


@dataclass
class CostIG(Policy):
    name: str = "cost-ig"
    cost_horizon: float | None = None

    def act(self, scenario, belief, current, visited, rng=None):
        return cost_weighted_greedy_step(
            scenario, belief, current, visited, self.tau, self.allow_revisit, self.cost_horizon
        )


@dataclass
class RecedingHorizon(Policy):
    name: str = "horizon"
    horizon: int = 2
    objective: str = "ig"

    def act(self, scenario, belief, current, visited, rng=None):
        return receding_horizon_step(
            scenario, belief, current, visited, self.horizon, self.tau, self.objective, self.allow_revisit
        )


@dataclass
class RandomPolicy(Policy):
    name: str = "random"
    deterministic = False

    def act(self, scenario, belief, current, visited, rng=None):
        if rng is None:
            raise ValueError("random policy needs a seeded rng")
        return random_policy_step(rng, visited, scenario, belief, self.tau, self.allow_revisit)


@dataclass
class FixedOrder(Policy):
    """Follow a precomputed ordering, optionally truncated at ``stop_after`` views.

    With ``use_stopping_rule`` off the policy is strictly non-adaptive: it stops
    only when the prefix is exhausted.
    """

    name: str = "fixed-order"
    order: tuple[int, ...] = ()
    stop_after: int | None = None
    use_stopping_rule: bool = True

    def act(self, scenario, belief, current, visited, rng=None):
        limit = len(self.order) if self.stop_after is None else self.stop_after
        todo = [c for c in self.order[:limit] if c not in visited]
        if self.use_stopping_rule:
            stop = stop_action(scenario, belief, todo, _tau(scenario, self.tau))
            if stop is not None:
                return stop
        elif not todo:
            return Stop(map_decision(scenario, belief))
        return Visit(todo[0])


@dataclass
class NonAdaptiveIG(Policy):
    """Greedy set-IG ordering computed once from the prior, then followed."""

    name: str = "nonadaptive-ig"
    seed: int = 0
    _orders: dict = field(default_factory=dict, repr=False)

    def order_for(self, scenario: Scenario) -> list[int]:
        key = id(scenario)
        if key not in self._orders:
            self._orders[key] = (
                scenario,
                nonadaptive_greedy_order(scenario, scenario.n_locations, seed=self.seed),
            )
        return self._orders[key][1]

    def act(self, scenario, belief, current, visited, rng=None):
        todo = [c for c in self.order_for(scenario) if c not in visited]
        stop = stop_action(scenario, belief, todo, _tau(scenario, self.tau))
        if stop is not None:
            return stop
        return Visit(todo[0])


POLICY_NAMES = ("adaptive-ig", "nonadaptive-ig", "cost-ig", "horizon:T", "random")


def policy_from_name(name: str, tau: float | None = None, allow_revisit: bool = False, seed: int = 0) -> Policy:
    """Build a policy from its command-line name."""
    if name == "adaptive-ig":
        return AdaptiveIG(tau=tau, allow_revisit=allow_revisit)
    if name == "nonadaptive-ig":
        return NonAdaptiveIG(tau=tau, seed=seed)
    if name == "cost-ig":
        return CostIG(tau=tau, allow_revisit=allow_revisit)
    if name == "random":
        return RandomPolicy(tau=tau, allow_revisit=allow_revisit)
    if name.startswith("horizon:"):
        try:
            t = int(name.split(":", 1)[1])
        except ValueError:
            t = 0
        if t >= 1:
            return RecedingHorizon(name=name, tau=tau, allow_revisit=allow_revisit, horizon=t)
    raise ValueError(f"unknown policy {name!r}; choose from {', '.join(POLICY_NAMES)}")
