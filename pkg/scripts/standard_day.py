#!/usr/bin/env python3
"""Default benchmark: 20 cities x 5 tasks, N=10, H=8, solved optimally.

Writes the suite, a metrics CSV and a one-line-per-method summary. Pass
--plans to score externally produced plans (``<task>.plan`` or
``<task>.llm.txt``) alongside the optimal rows.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from tripplan import harness


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/standard_day")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--per-city", type=int, default=5)
    ap.add_argument("--methods", nargs="+", default=["optimal", "oracle"])
    ap.add_argument("--plans")
    ap.add_argument("--heuristic", choices=("h0", "h1"), default="h0")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args(argv)

    out = Path(args.out)
    suite = out / "suite"
    harness.gen_suite(suite, per_city=args.per_city, seed=args.seed, force=True)
    methods = list(args.methods) + (["external"] if args.plans else [])
    records = harness.run_suite(suite, methods=methods, heuristic_name=args.heuristic,
                                plans_dir=args.plans, jobs=args.jobs)
    harness.write_csv(records, out / "metrics.csv")
    print(harness.format_summary(harness.summarize(records)))
    print(f"metrics written to {out / 'metrics.csv'}")
    return harness.exit_code(records)


if __name__ == "__main__":
    sys.exit(main())
