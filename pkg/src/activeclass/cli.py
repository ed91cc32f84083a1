"""Command-line interface: generate, check, simulate, compare, oracle.

Exit codes: 0 ok, 2 input/validation error, 3 resource guard tripped,
4 loss threshold infeasible.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from .belief import OutcomeSpaceTooLarge
from .model import ScenarioError, is_noiseless, save_scenario, scenario_from_dict, validate, load_scenario
from .planner import (
    POLICY_NAMES,
    Infeasible,
    PlannerConfig,
    StateSpaceTooLarge,
    brute_force_optimal,
    brute_force_optimal_nonadaptive,
    policy_from_name,
)
from .scenarios import make_polyhedra_like_instance, make_random_instance, make_theorem1_instance
from .sim import compare_policies, run_episodes

EXIT_OK, EXIT_INPUT, EXIT_GUARD, EXIT_INFEASIBLE = 0, 2, 3, 4

RESULT_COLUMNS = [
    "run_id",
    "policy",
    "true_hypothesis",
    "steps",
    "cost",
    "decision",
    "loss",
    "correct",
    "final_entropy_bits",
]


class CliError(Exception):
    def __init__(self, msg: str, code: int = EXIT_INPUT):
        super().__init__(msg)
        self.code = code


def _fmt(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return ""
    return f"{x:.12g}"


def _load(path: str):
    try:
        return load_scenario(path)
    except ScenarioError as e:
        raise CliError(str(e)) from e


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _policy(name: str, tau, seed: int):
    try:
        return policy_from_name(name, tau=tau, seed=seed)
    except ValueError as e:
        raise CliError(str(e)) from e


# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    try:
        if args.type == "theorem1":
            sc = make_theorem1_instance(args.n, unit_cost=args.unit_cost if args.unit_cost is not None else 1.0)
        elif args.type == "random":
            sc = make_random_instance(
                args.n,
                args.k,
                args.m,
                alpha=args.alpha,
                seed=args.seed,
                n_values=args.values,
                uniform_prior=args.uniform_prior,
                unit_cost=args.unit_cost is not None,
                tau=args.tau if args.tau is not None else 0.05,
            )
        else:
            sc = make_polyhedra_like_instance(args.classes, args.views, args.profile, seed=args.seed)
    except (ValueError, OSError) as e:
        raise CliError(f"invalid generator parameters: {e}") from e
    errs = validate(sc)
    if errs:
        raise CliError("generated scenario failed validation: " + "; ".join(errs))
    save_scenario(sc, args.out)
    print(
        f"{args.out}: N={sc.n_hypotheses} K={sc.n_features} M={sc.n_locations} "
        f"noiseless={str(is_noiseless(sc)).lower()}"
    )
    return EXIT_OK


def cmd_check(args) -> int:
    path = Path(args.scenario)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise CliError(f"{path}: cannot read ({e.strerror})") from e
    except json.JSONDecodeError as e:
        raise CliError(f"{path}: line {e.lineno} col {e.colno}: {e.msg}") from e
    try:
        sc = scenario_from_dict(raw, check=False)
    except ScenarioError as e:
        raise CliError(f"{path}: {e}") from e
    errs = validate(sc)
    if errs:
        for e in errs:
            print(f"violation: {e}")
        return EXIT_INPUT
    print(
        f"{path}: ok (N={sc.n_hypotheses} K={sc.n_features} M={sc.n_locations} "
        f"noiseless={str(is_noiseless(sc)).lower()})"
    )
    return EXIT_OK


def cmd_simulate(args) -> int:
    sc = _load(args.scenario)
    pol = _policy(args.policy, args.tau, args.seed)
    max_steps = args.budget if args.budget is not None else sc.n_locations
    try:
        eps = run_episodes(sc, pol, args.runs, args.seed, max_steps, args.workers)
    except (OutcomeSpaceTooLarge, StateSpaceTooLarge) as e:
        raise CliError(str(e), EXIT_GUARD) from e
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for i, e in enumerate(eps):
        w.writerow(
            [
                i,
                pol.name,
                sc.hypotheses[e.true_hypothesis],
                e.n_steps,
                _fmt(e.cost),
                sc.hypotheses[e.decision],
                _fmt(e.loss),
                int(e.correct),
                _fmt(e.final_entropy),
            ]
        )
    _write(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_compare(args) -> int:
    names = [p for chunk in args.policies for p in chunk.split(",") if p]
    if len(names) < 2:
        raise CliError("compare needs at least two policies")
    sc = _load(args.scenario)
    pols = [_policy(n, None, args.seed) for n in names]
    try:
        tab = compare_policies(sc, pols, args.runs, base_seed=args.seed, workers=args.workers)
    except (OutcomeSpaceTooLarge, StateSpaceTooLarge) as e:
        raise CliError(str(e), EXIT_GUARD) from e
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["budget"]
    for n in names:
        header += [f"{n}_accuracy", f"{n}_metric_mean", f"{n}_metric_std"]
    w.writerow(header + ["ig_risk_agreement"])
    for j, b in enumerate(tab.budgets):
        row = [b]
        for i in range(len(names)):
            row += [_fmt(tab.accuracy[i][j]), _fmt(tab.metric_mean[i][j]), _fmt(tab.metric_std[i][j])]
        w.writerow(row + [_fmt(tab.agreement[j])])
    _write(buf.getvalue(), args.out)
    return EXIT_OK


def _tree_lines(sc, node, indent=0):
    pad = "  " * indent
    if node.is_leaf:
        yield f"{pad}stop -> {sc.hypotheses[node.decision]} (loss {node.loss:.6g})"
        return
    yield f"{pad}visit {sc.locations[node.location].name}"
    for obs, (p, child) in node.children.items():
        label = ", ".join(f"{sc.features[o.feature].name}={sc.features[o.feature].values[o.value]}" for o in obs)
        yield f"{pad}  [{label}] p={p:.6g}"
        yield from _tree_lines(sc, child, indent + 2)


def _tree_json(sc, node):
    if node.is_leaf:
        return {"stop": sc.hypotheses[node.decision], "loss": node.loss}
    return {
        "visit": sc.locations[node.location].name,
        "cost": node.cost,
        "loss": node.loss,
        "branches": [
            {
                "observed": {sc.features[o.feature].name: sc.features[o.feature].values[o.value] for o in obs},
                "p": p,
                "then": _tree_json(sc, child),
            }
            for obs, (p, child) in node.children.items()
        ],
    }


def cmd_oracle(args) -> int:
    sc = _load(args.scenario)
    tau = sc.tau if args.tau is None else args.tau
    try:
        if args.mode == "adaptive":
            tree = brute_force_optimal(sc, PlannerConfig(tau=tau, state_cap=args.state_cap))
            cost, loss = tree.expected_cost, tree.expected_loss
            plan_json = _tree_json(sc, tree.root)
            lines = list(_tree_lines(sc, tree.root))
        else:
            plan = brute_force_optimal_nonadaptive(sc, tau)
            cost, loss = plan.expected_cost, plan.expected_loss
            names = [sc.locations[i].name for i in plan.order]
            plan_json = names
            lines = ["ordering: " + (" -> ".join(names) if names else "(empty)")]
    except StateSpaceTooLarge as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_GUARD
    except Infeasible as e:
        print(f"infeasible: best achievable expected loss {e.best_loss:.12g} > tau {tau:g}", file=sys.stderr)
        if args.json:
            print(json.dumps({"mode": args.mode, "tau": tau, "infeasible": True, "best_loss": e.best_loss}))
        return EXIT_INFEASIBLE
    if args.json:
        print(json.dumps({"mode": args.mode, "tau": tau, "expected_cost": cost, "expected_loss": loss, "plan": plan_json}))
    else:
        print("\n".join(lines))
        print(f"expected_cost {cost:.12g}")
        print(f"expected_loss {loss:.12g}")
    return EXIT_OK


# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="activeclass", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a generated scenario file")
    g.add_argument("--type", required=True, choices=["theorem1", "random", "polyhedra"])
    g.add_argument("--n", type=int, default=8, help="hypotheses (theorem1, random)")
    g.add_argument("--k", type=int, default=5, help="features (random)")
    g.add_argument("--m", type=int, default=5, help="locations (random)")
    g.add_argument("--alpha", type=float, default=0.0, help="noise level in [0, 0.5] (random)")
    g.add_argument("--values", type=int, default=2, help="values per feature (random)")
    g.add_argument("--uniform-prior", action="store_true")
    g.add_argument("--unit-cost", type=float, nargs="?", const=1.0, default=None)
    g.add_argument("--tau", type=float, default=None)
    g.add_argument("--classes", type=int, default=2, help="object classes (polyhedra)")
    g.add_argument("--views", type=int, default=24, help="views (polyhedra)")
    g.add_argument("--profile", default="platonic-default", help="correspondence profile name or file")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("check", help="validate a scenario file")
    c.add_argument("scenario")
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("simulate", help="Monte Carlo episodes of one policy to CSV")
    s.add_argument("scenario")
    s.add_argument("--policy", required=True, help="one of: " + ", ".join(POLICY_NAMES))
    s.add_argument("--runs", type=int, default=100)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--tau", type=float, default=None)
    s.add_argument("--budget", type=int, default=None, help="max views per episode")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_simulate)

    m = sub.add_parser("compare", help="budget x policy accuracy table to CSV")
    m.add_argument("scenario")
    m.add_argument("--policies", nargs="+", required=True)
    m.add_argument("--runs", type=int, default=100)
    m.add_argument("--seed", type=int, required=True)
    m.add_argument("--workers", type=int, default=1)
    m.add_argument("--out", default=None)
    m.set_defaults(func=cmd_compare)

    o = sub.add_parser("oracle", help="exact optimal policy for min cost s.t. loss <= tau")
    o.add_argument("scenario")
    o.add_argument("--tau", type=float, default=None)
    o.add_argument("--mode", choices=["adaptive", "nonadaptive"], default="adaptive")
    o.add_argument("--state-cap", type=int, default=1_000_000)
    o.add_argument("--json", action="store_true")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse exits on bad flags and --help; report the code instead
        return e.code if isinstance(e.code, int) else EXIT_INPUT
    if getattr(args, "runs", 1) < 1:
        print("error: --runs must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
