from .evaluate import evaluate_policy_exact, evaluate_tree, unroll
from .oracle import (
    Infeasible,
    NonAdaptivePlan,
    PolicyTree,
    StateSpaceTooLarge,
    TreeNode,
    brute_force_optimal,
    brute_force_optimal_nonadaptive,
    set_expected_loss,
)
from .policies import (
    AdaptiveIG,
    CostIG,
    FixedOrder,
    NonAdaptiveIG,
    PlannerConfig,
    Policy,
    RandomPolicy,
    RecedingHorizon,
    Stop,
    Visit,
    adaptive_greedy_step,
    cost_weighted_greedy_step,
    nonadaptive_greedy_order,
    random_policy_step,
    POLICY_NAMES,
    policy_from_name,
    receding_horizon_step,
)
