#!/usr/bin/env python3
"""Runtime of the exact solver as N grows (8..18 step 2, H=8) and as H grows (6..10, N=10).

Each point averages over ``--seeds`` synthetic instances. Where N <= 16 the
solver's utility is checked against the subset-DP oracle.
"""

from __future__ import annotations

import argparse
import csv
import statistics
import sys
import time
from pathlib import Path

from tripplan import harness
from tripplan.compile import compile_task
from tripplan.model import plan_utility
from tripplan.planner import ORACLE_MAX_POIS, oracle_solve, solve
from tripplan.providers import synthetic_task
from tripplan.validator import validate


def run_point(n: int, hours: int, seed: int, heuristic_name: str) -> dict:
    task = synthetic_task(seed, n, hours)
    stats: dict = {}
    t0 = time.perf_counter()
    plan = solve(compile_task(task), heuristic_name, task_ref=f"n{n}_h{hours}_s{seed}", stats=stats)
    seconds = time.perf_counter() - t0
    u = plan_utility(plan, task)
    oracle = oracle_solve(task)[0] if n <= ORACLE_MAX_POIS else None
    return {
        "n_pois": n,
        "hours": hours,
        "seed": seed,
        "utility": u,
        "oracle_utility": "" if oracle is None else oracle,
        "valid": validate(plan, task).valid,
        "expanded": stats["expanded"],
        "seconds": round(seconds, 4),
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/scalability.csv")
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--heuristic", choices=("h0", "h1"), default="h0")
    args = ap.parse_args(argv)

    points = [(n, 8) for n in harness.POI_SWEEP] + [(10, h) for h in harness.HOUR_SWEEP]
    rows = []
    for n, hours in points:
        batch = [run_point(n, hours, s, args.heuristic) for s in range(args.seeds)]
        rows += batch
        secs = [r["seconds"] for r in batch]
        agree = all(r["oracle_utility"] in ("", r["utility"]) for r in batch)
        print(f"N={n:2d} H={hours:2d}  mean {statistics.fmean(secs):7.3f}s  max {max(secs):7.3f}s  "
              f"mean expanded {statistics.fmean(r['expanded'] for r in batch):10.0f}  "
              f"oracle agrees: {agree}")

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    print(f"wrote {out}")
    bad = [r for r in rows if not r["valid"] or r["oracle_utility"] not in ("", r["utility"])]
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
