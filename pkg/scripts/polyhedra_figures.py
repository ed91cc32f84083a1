#!/usr/bin/env python3
"""Plot-ready CSVs for the polyhedra-style view selection experiments.

Writes ``two_class.csv`` (adaptive IG vs random order) and ``five_class.csv``
(adaptive IG vs non-adaptive IG vs random) into ``--outdir``.  Columns match
the ``compare`` command.  With ``--plot`` and matplotlib installed, PNGs of
accuracy against views are written alongside.
"""

import argparse
import subprocess
import sys
from pathlib import Path

from activeclass.model import save_scenario
from activeclass.scenarios import make_polyhedra_like_instance

SETUPS = {
    "two_class": (2, ["adaptive-ig", "random"]),
    "five_class": (5, ["adaptive-ig", "nonadaptive-ig", "random"]),
}


def _plot(csv_path: Path, policies):
    import csv

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with open(csv_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    budgets = [int(r["budget"]) for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    for p in policies:
        ax.plot(budgets, [float(r[f"{p}_accuracy"]) for r in rows], marker="o", ms=3, label=p)
    ax.set_xlabel("views")
    ax.set_ylabel("correct classification rate")
    ax.legend()
    fig.tight_layout()
    fig.savefig(csv_path.with_suffix(".png"), dpi=120)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="results/polyhedra")
    ap.add_argument("--runs", type=int, default=100)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--generator-seed", type=int, default=0)
    ap.add_argument("--views", type=int, default=24)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args(argv)

    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for name, (classes, policies) in SETUPS.items():
        scen = out / f"{name}.json"
        save_scenario(make_polyhedra_like_instance(classes, args.views, seed=args.generator_seed), scen)
        csv_path = out / f"{name}.csv"
        cmd = [
            sys.executable, "-m", "activeclass", "compare", str(scen),
            "--policies", *policies,
            "--runs", str(args.runs), "--seed", str(args.seed),
            "--workers", str(args.workers), "--out", str(csv_path),
        ]
        subprocess.run(cmd, check=True)
        print(f"wrote {csv_path}")
        if args.plot:
            _plot(csv_path, policies)


if __name__ == "__main__":
    main()
