"""Brute-force optimal policies for min expected cost subject to expected loss <= tau.

The adaptive oracle searches over policy trees.  Because the loss constraint
is on the expectation over the whole tree, a subtree cannot be solved for a
single number.  Each search state keeps the Pareto frontier of achievable
(expected cost, expected loss) pairs, and frontiers are merged across
outcome branches.  Points whose conditional loss could never fit under the
global threshold are dropped using the probability of reaching the state.

The non-adaptive oracle searches over fixed location sets visited in a fixed
order (the shortest path through the set when costs depend on position).
Expected loss is non-increasing in the set, which lets infeasibility of a set
rule out all its subsets.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ..belief import Belief, Observation, bayes_risk, branch, joint_outcomes, map_decision, new_features
from ..model import Scenario
from .policies import PlannerConfig

TOL = 1e-12
START_LOCATION = 0


class StateSpaceTooLarge(RuntimeError):
    """The exhaustive search would exceed its state budget."""


class Infeasible(RuntimeError):
    """No policy reaches the loss threshold; carries the best achievable loss."""

    def __init__(self, best_loss: float, tau: float):
        super().__init__(f"best achievable expected loss {best_loss:.6g} exceeds tau={tau:g}")
        self.best_loss = best_loss
        self.tau = tau


@dataclass
class TreeNode:
    """Policy-tree node; a leaf when ``location`` is None.

    ``cost`` and ``loss`` are expected values conditional on reaching the node.
    ``children`` maps the observations revealed at ``location`` to
    ``(branch probability, child)``.
    """

    location: int | None = None
    decision: int | None = None
    children: dict[tuple[Observation, ...], tuple[float, "TreeNode"]] = field(default_factory=dict)
    cost: float = 0.0
    loss: float = 0.0
    depth: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.location is None

    def walk(self, history: tuple[Observation, ...]) -> "TreeNode":
        """Node reached after the given observation history (from this node)."""
        node, i = self, 0
        while not node.is_leaf and i < len(history):
            for key, (_, child) in node.children.items():
                if history[i : i + len(key)] == key:
                    node, i = child, i + len(key)
                    break
            else:
                raise KeyError(f"history {history[i:]} does not match any branch")
        return node


@dataclass
class PolicyTree:
    root: TreeNode
    expected_cost: float
    expected_loss: float
    tau: float
    start: int = START_LOCATION

    def n_nodes(self) -> int:
        count, stack = 0, [self.root]
        while stack:
            n = stack.pop()
            count += 1
            stack.extend(c for _, c in n.children.values())
        return count


# frontier point: (cost, loss, depth, node)


def _prune(points, loss_cap: float):
    """Keep the Pareto set under ``loss_cap``; earlier points win exact ties."""
    pts = [p for p in points if p[1] <= loss_cap + TOL]
    pts.sort(key=lambda p: (round(p[0], 12), round(p[1], 12), p[2]))
    out = []
    for p in pts:
        if out and out[-1][1] <= p[1] + TOL:
            continue
        out.append(p)
    return out


class _AdaptiveSearch:
    def __init__(self, scenario: Scenario, tau: float, state_cap: int):
        self.sc = scenario
        self.tau = tau
        self.state_cap = state_cap
        self.memo: dict = {}
        self.expanded = 0
        self.pos_free = scenario.position_independent_costs()

    def _informative(self, belief: Belief, loc: int) -> bool:
        feats = new_features(self.sc, belief, [loc])
        support = belief.probs > 0
        for k in feats:
            rows = self.sc.cpt_array(k)[support]
            if np.any(rows != rows[:1]):
                return True
        return False

    def frontier(self, belief: Belief, current: int, remaining: frozenset, cap: float):
        sc = self.sc
        if self.pos_free:
            # an uninformative location stays uninformative as the support shrinks
            remaining = frozenset(l for l in remaining if self._informative(belief, l))
        pending = {k for l in remaining for k in sc.locations[l].observed_features}
        key = (
            None if self.pos_free else current,
            belief.key(),
            remaining,
            belief.realized & pending,
        )
        hit = self.memo.get(key)
        if hit is not None and hit[0] >= cap - TOL:
            return [p for p in hit[1] if p[1] <= cap + TOL]

        self.expanded += 1
        if self.expanded > self.state_cap:
            raise StateSpaceTooLarge(f"oracle search exceeded {self.state_cap} states")

        risk = bayes_risk(sc, belief)
        stop = (0.0, risk, 0, TreeNode(decision=map_decision(sc, belief), loss=risk))
        points = [stop]
        if risk > TOL:
            for loc in sorted(remaining):
                points.extend(self._visit(belief, current, remaining, loc, cap))
        result = _prune(points, cap)
        self.memo[key] = (cap, result)
        return result

    def _visit(self, belief, current, remaining, loc, cap):
        sc = self.sc
        step = sc.cost(loc, current)
        feats = new_features(sc, belief, [loc])
        rest = remaining - {loc}
        # partial combos: (cost, loss, depth, [(key, p, child), ...])
        combos = [(step, 0.0, 0, [])]
        for p, obs, post in branch(sc, belief, feats):
            child_b = Belief(post, belief.history + obs)
            child_cap = cap / p if p > 0 else math.inf
            sub = self.frontier(child_b, loc, rest, child_cap)
            merged = []
            for c0, l0, d0, parts in combos:
                for c1, l1, d1, node in sub:
                    merged.append((c0 + p * c1, l0 + p * l1, max(d0, d1), parts + [(obs, p, node)]))
            combos = _prune(merged, cap)
            if not combos:
                return []
        out = []
        for c, l, d, parts in combos:
            node = TreeNode(
                location=loc,
                children={obs: (p, child) for obs, p, child in parts},
                cost=c,
                loss=l,
                depth=d + 1,
            )
            out.append((c, l, d + 1, node))
        return out


    # -- tau = 0: single-point frontiers, so plain DP with branch and bound ----

    def _zero_sets(self) -> int:
        if not hasattr(self, "_z"):
            self._z = int((self.sc.loss_array <= TOL).sum(axis=1).max(initial=1))
        return max(self._z, 1)

    def lower_bound(self, belief: Belief, current: int, remaining: frozenset) -> float:
        """Admissible bound on the cost still needed to reach zero loss.

        Every visit gains at most log2(#outcomes) bits and a zero-risk leaf
        keeps at most log2(z) bits, z the largest zero-loss set of a decision.
        """
        sc = self.sc
        if bayes_risk(sc, belief) <= TOL:
            return 0.0
        if not remaining:
            return math.inf
        rows = list(remaining)
        if self.pos_free:
            cmin = float(sc.cost_array[rows, 0].min())
        else:
            cmin = float(sc.cost_array[rows].min())
        bits = max(
            math.log2(max(2, _n_outcomes(sc, new_features(sc, belief, [l])))) for l in rows
        )
        h = _entropy(belief.probs) - math.log2(self._zero_sets())
        return cmin * max(1.0, h / bits)

    def exact_zero(self, belief: Belief, current: int, remaining: frozenset):
        """Best (cost, depth, node) reaching zero expected loss, or None."""
        sc = self.sc
        if self.pos_free:
            remaining = frozenset(l for l in remaining if self._informative(belief, l))
        pending = {k for l in remaining for k in sc.locations[l].observed_features}
        key = (None if self.pos_free else current, belief.key(), remaining, belief.realized & pending)
        if key in self.memo:
            return self.memo[key]
        self.expanded += 1
        if self.expanded > self.state_cap:
            raise StateSpaceTooLarge(f"oracle search exceeded {self.state_cap} states")

        risk = bayes_risk(sc, belief)
        if risk <= TOL:
            result = (0.0, 0, TreeNode(decision=map_decision(sc, belief), loss=risk))
            self.memo[key] = result
            return result

        options = []
        for loc in sorted(remaining):
            step = sc.cost(loc, current)
            rest = remaining - {loc}
            kids = [
                (p, obs, Belief(post, belief.history + obs))
                for p, obs, post in branch(sc, belief, new_features(sc, belief, [loc]))
            ]
            bound = step + sum(p * self.lower_bound(b, loc, rest) for p, _, b in kids)
            options.append((bound, loc, step, rest, kids))

        best = None
        # most promising first so the incumbent tightens early; ties keep index order
        for bound, loc, step, rest, kids in sorted(options, key=lambda o: (o[0], o[1])):
            if best is not None and bound > best[0] + 1e-9:
                break
            total, depth, children = step, 0, {}
            for p, obs, b in kids:
                sub = self.exact_zero(b, loc, rest)
                if sub is None:
                    total = math.inf
                    break
                total += p * sub[0]
                depth = max(depth, sub[1])
                children[obs] = (p, sub[2])
            if total == math.inf:
                continue
            cand = (total, depth + 1, loc)
            if best is None or _better(cand, (best[0], best[1], best[2].location)):
                best = (total, depth + 1, TreeNode(location=loc, children=children, cost=total, depth=depth + 1))
        self.memo[key] = best
        return best


def _better(a, b) -> bool:
    """Compare (cost, depth, location): cheaper, then shallower, then lower index."""
    if a[0] < b[0] - 1e-9:
        return True
    if a[0] > b[0] + 1e-9:
        return False
    return (a[1], a[2]) < (b[1], b[2])


def _n_outcomes(sc: Scenario, feats) -> int:
    n = 1
    for k in feats:
        n *= sc.features[k].n_values
    return n


def _entropy(p: np.ndarray) -> float:
    q = p[p > 0]
    return float(-(q * np.log2(q)).sum())


def brute_force_optimal(
    scenario: Scenario, config: PlannerConfig | None = None, frontier: bool = False
) -> PolicyTree:
    """Exact minimum expected-cost policy tree with expected loss <= tau.

    Raises :class:`Infeasible` (with the best achievable loss) when even visiting
    everything cannot meet the threshold, and :class:`StateSpaceTooLarge` when
    the search expands more than ``config.state_cap`` states.  With tau = 0
    the search runs as branch and bound on an entropy lower bound; pass
    ``frontier=True`` to force the general Pareto-frontier search instead.
    """
    cfg = config or PlannerConfig()
    tau = scenario.tau if cfg.tau is None else cfg.tau
    search = _AdaptiveSearch(scenario, tau, cfg.state_cap)
    b0 = Belief.from_prior(scenario)
    everything = frozenset(range(scenario.n_locations))
    risk0 = bayes_risk(scenario, b0)
    if risk0 <= tau + TOL:
        leaf = TreeNode(decision=map_decision(scenario, b0), loss=risk0)
        return PolicyTree(leaf, 0.0, risk0, tau)
    if tau <= 0.0 and not frontier:
        best = search.exact_zero(b0, START_LOCATION, everything)
        if best is None:
            raise Infeasible(best_achievable_loss(scenario), tau)
        return PolicyTree(best[2], best[0], 0.0, tau)
    projected = projected_states(scenario)
    if projected > cfg.state_cap:
        raise StateSpaceTooLarge(
            f"projected {projected:.3g} (visited set, history) states exceeds cap {cfg.state_cap}"
        )
    pts = search.frontier(b0, START_LOCATION, everything, tau)
    if not pts:
        raise Infeasible(best_achievable_loss(scenario), tau)
    cost, loss, _, node = pts[0]
    return PolicyTree(node, cost, loss, tau)


def projected_states(scenario: Scenario) -> float:
    """Number of (visited set, observation history) pairs: prod over locations of 1 + #outcomes."""
    total = 1.0
    for loc in scenario.locations:
        total *= 1 + _n_outcomes(scenario, loc.observed_features)
    return total


def best_achievable_loss(scenario: Scenario) -> float:
    """Expected Bayes risk after observing every feature."""
    _, lik = joint_outcomes(scenario, scenario.prior_array, list(range(scenario.n_features)))
    joint = scenario.prior_array[:, None] * lik
    return float((scenario.loss_array @ joint).min(axis=0).sum())


# ---------------------------------------------------------------------------
# non-adaptive


NONADAPTIVE_SUBSET_CAP = 1 << 16
NONADAPTIVE_HELD_KARP_MAX = 12
NONADAPTIVE_OUTCOME_CAP = 1 << 22


@dataclass
class NonAdaptivePlan:
    order: list[int]
    expected_cost: float
    expected_loss: float
    tau: float


def set_expected_loss(scenario: Scenario, locations) -> float:
    """Expected Bayes risk (from the prior) after observing every location in the set."""
    feats = new_features(scenario, Belief.from_prior(scenario), locations)
    if not feats:
        return bayes_risk(scenario, scenario.prior_array)
    _, lik = joint_outcomes(scenario, scenario.prior_array, feats)
    joint = scenario.prior_array[:, None] * lik
    return float((scenario.loss_array @ joint).min(axis=0).sum())


def _path_costs(scenario: Scenario, start: int):
    """Cheapest ordering through every subset (Held-Karp), keyed by bitmask."""
    m = scenario.n_locations
    d = scenario.cost_array
    if scenario.position_independent_costs():
        best = {}
        for mask in range(1 << m):
            members = [i for i in range(m) if mask >> i & 1]
            best[mask] = (float(sum(d[i, start] for i in members)), members)
        return best
    if m > NONADAPTIVE_HELD_KARP_MAX:
        raise StateSpaceTooLarge(
            f"position-dependent costs with {m} locations (max {NONADAPTIVE_HELD_KARP_MAX})"
        )
    # dp[(mask, last)] = (cost, order)
    dp = {(1 << i, i): (float(d[i, start]), [i]) for i in range(m)}
    for size in range(2, m + 1):
        for combo in itertools.combinations(range(m), size):
            mask = sum(1 << i for i in combo)
            for last in combo:
                prev = mask ^ (1 << last)
                cands = [
                    (dp[(prev, j)][0] + float(d[last, j]), dp[(prev, j)][1] + [last])
                    for j in combo
                    if j != last
                ]
                dp[(mask, last)] = min(cands, key=lambda t: (round(t[0], 12), t[1]))
    best = {0: (0.0, [])}
    for (mask, _), val in dp.items():
        if mask not in best or (round(val[0], 12), val[1]) < (round(best[mask][0], 12), best[mask][1]):
            best[mask] = val
    return best


def brute_force_optimal_nonadaptive(scenario: Scenario, tau: float | None = None) -> NonAdaptivePlan:
    """Cheapest fixed ordering whose full prefix meets expected loss <= tau."""
    tau = scenario.tau if tau is None else tau
    m = scenario.n_locations
    full = list(range(m))
    if np.prod([scenario.features[k].n_values for k in range(scenario.n_features)], dtype=float) > NONADAPTIVE_OUTCOME_CAP:
        raise StateSpaceTooLarge("joint outcome space of all features is too large")

    prior_risk = bayes_risk(scenario, scenario.prior_array)
    if prior_risk <= tau + TOL:
        return NonAdaptivePlan([], 0.0, prior_risk, tau)
    full_loss = set_expected_loss(scenario, full)
    if full_loss > tau + TOL:
        raise Infeasible(full_loss, tau)

    # a location whose removal from the full set breaks feasibility is in every feasible set
    essential = [i for i in full if set_expected_loss(scenario, [j for j in full if j != i]) > tau + TOL]
    optional = [i for i in full if i not in essential]
    if 1 << len(optional) > NONADAPTIVE_SUBSET_CAP:
        raise StateSpaceTooLarge(f"{len(optional)} optional locations to search over")

    paths = _path_costs(scenario, START_LOCATION)
    base = sum(1 << i for i in essential)
    cands = []
    for r in range(len(optional) + 1):
        for sub in itertools.combinations(optional, r):
            mask = base | sum(1 << i for i in sub)
            cost, order = paths[mask]
            cands.append((round(cost, 12), len(order), order, cost))
    cands.sort(key=lambda t: (t[0], t[1], t[2]))

    infeasible_masks: list[int] = []
    for _, _, order, cost in cands:
        mask = sum(1 << i for i in order)
        if any(mask & ~bad == 0 for bad in infeasible_masks):
            continue
        loss = set_expected_loss(scenario, order)
        if loss <= tau + TOL:
            return NonAdaptivePlan(list(order), cost, loss, tau)
        infeasible_masks.append(mask)
    raise Infeasible(full_loss, tau)  # unreachable: the full set is feasible
