"""Exact expected cost and loss of a policy by enumerating outcome branches."""

from __future__ import annotations

from ..belief import Belief, bayes_risk, branch, decision_risks, map_decision, new_features
from ..model import Scenario
from .oracle import START_LOCATION, PolicyTree, StateSpaceTooLarge, TreeNode
from .policies import Policy, RandomPolicy, Stop, Visit, candidates

NODE_CAP = 1_000_000


def evaluate_tree(scenario: Scenario, tree: PolicyTree | TreeNode, start: int = START_LOCATION):
    """Recompute (expected cost, expected loss) of a tree from the scenario alone.

    Branch probabilities and leaf losses are derived afresh; the annotations
    stored on the nodes are ignored.
    """
    root = tree.root if isinstance(tree, PolicyTree) else tree
    cost = loss = 0.0
    stack = [(root, Belief.from_prior(scenario), start, 1.0, 0.0)]
    while stack:
        node, b, here, reach, spent = stack.pop()
        if node.is_leaf:
            d = map_decision(scenario, b) if node.decision is None else node.decision
            cost += reach * spent
            loss += reach * float(decision_risks(scenario, b.probs)[d])
            continue
        step = scenario.cost(node.location, here)
        feats = new_features(scenario, b, [node.location])
        for p, obs, post in branch(scenario, b, feats):
            if obs not in node.children:
                raise KeyError(f"tree has no branch for outcome {obs}")
            _, child = node.children[obs]
            stack.append((child, Belief(post, b.history + obs), node.location, reach * p, spent + step))
    return cost, loss


def unroll(scenario: Scenario, policy: Policy, start: int = START_LOCATION, node_cap: int = NODE_CAP) -> TreeNode:
    """Execute a deterministic policy against every outcome branch."""
    if not policy.deterministic:
        raise ValueError(f"policy {policy.name!r} is randomized; exact unrolling is undefined")
    count = 0

    def build(b: Belief, here: int, visited: frozenset) -> TreeNode:
        nonlocal count
        count += 1
        if count > node_cap:
            raise StateSpaceTooLarge(f"policy tree exceeds {node_cap} nodes")
        act = policy.act(scenario, b, here, visited)
        if isinstance(act, Stop):
            return TreeNode(decision=act.decision, loss=float(decision_risks(scenario, b.probs)[act.decision]))
        assert isinstance(act, Visit)
        loc = act.location
        step = scenario.cost(loc, here)
        feats = new_features(scenario, b, [loc], policy.allow_revisit)
        node = TreeNode(location=loc, cost=step)
        depth = 0
        for p, obs, post in branch(scenario, b, feats):
            child = build(Belief(post, b.history + obs), loc, visited | {loc})
            node.children[obs] = (p, child)
            node.cost += p * child.cost
            node.loss += p * child.loss
            depth = max(depth, child.depth)
        node.depth = depth + 1
        return node

    return build(Belief.from_prior(scenario), start, frozenset())


def _evaluate_uniform_random(scenario: Scenario, policy: RandomPolicy, start: int, node_cap: int):
    # expectation over the policy's own uniform draws as well as the outcomes
    if policy.allow_revisit:
        raise ValueError("exact evaluation of the random policy needs allow_revisit=False")
    memo: dict = {}

    def value(b: Belief, here: int, visited: frozenset):
        key = (b.key(), here, visited)
        if key in memo:
            return memo[key]
        if len(memo) >= node_cap:
            raise StateSpaceTooLarge(f"random policy evaluation exceeds {node_cap} states")
        risk = bayes_risk(scenario, b)
        cands = candidates(scenario, visited, False)
        if risk <= policy.tau or not cands:
            memo[key] = (0.0, risk)
            return memo[key]
        cost = loss = 0.0
        for loc in cands:
            c_loc = scenario.cost(loc, here)
            l_loc = 0.0
            for p, obs, post in branch(scenario, b, new_features(scenario, b, [loc])):
                c, l = value(Belief(post, b.history + obs), loc, visited | {loc})
                c_loc += p * c
                l_loc += p * l
            cost += c_loc / len(cands)
            loss += l_loc / len(cands)
        memo[key] = (cost, loss)
        return memo[key]

    return value(Belief.from_prior(scenario), start, frozenset())


def evaluate_policy_exact(scenario: Scenario, policy: Policy | PolicyTree, start: int = START_LOCATION):
    """Exact (expected cost, expected loss) of a policy tree or step policy.

    For the random policy the expectation also runs over its uniform choices.
    """
    if isinstance(policy, PolicyTree):
        return evaluate_tree(scenario, policy, start)
    if isinstance(policy, RandomPolicy):
        return _evaluate_uniform_random(scenario, policy, start, NODE_CAP)
    root = unroll(scenario, policy, start)
    return root.cost, root.loss


def prior_risk(scenario: Scenario) -> float:
    return bayes_risk(scenario, scenario.prior_array)
