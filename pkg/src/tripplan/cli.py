"""Command-line front end: ``tripplan <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .compile import compile_task
from .model import InvalidTask, load_task, plan_utility, save_task
from .pddl import emit_pddl, parse_plan_llm, parse_plan_native, render_plan_native
from .planner import OracleTooLarge, ResourceExhausted, oracle_solve, solve
from .providers import (
    EndpointConfig,
    ParseError,
    ProviderParseError,
    ProviderRequest,
    ProviderUnavailable,
    RecordingTransport,
    HttpTransport,
    ReplayTransport,
    Transcript,
    UnknownFixture,
    build_task,
    fixture_provider,
    llm_provider,
    synthetic_provider,
)
from .validator import validate


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def cmd_gen(args) -> int:
    if args.sweep:
        paths = harness.gen_sweep(args.out, args.sweep, args.cities or harness.SWEEP_CITIES,
                                  args.per_city, args.seed, args.force, args.max_utility)
    else:
        paths = harness.gen_suite(
            args.out, args.cities or harness.DEFAULT_CITIES, args.per_city, args.pois,
            args.hours, args.seed, args.max_utility, args.force,
            use_fixtures=not args.no_fixtures,
        )
    print(f"wrote {len(paths)} task files under {args.out}")
    return 0


def cmd_fetch(args) -> int:
    req = ProviderRequest(args.city, args.pois, args.hours, args.seed)
    if args.provider == "fixture":
        raw = fixture_provider(args.city)
    elif args.provider == "synthetic":
        raw = synthetic_provider(req, args.max_utility)
    else:
        if args.replay:
            transport = ReplayTransport(Transcript.load(args.replay))
        else:
            transport = HttpTransport(EndpointConfig.from_env())
        recorder = RecordingTransport(transport) if args.record else None
        raw = llm_provider(req, transport=recorder or transport, rating_scale=args.rating_scale)
        if recorder:
            recorder.transcript.save(args.record)
    max_u = None if args.provider != "synthetic" else args.max_utility
    task = build_task(raw, horizon_hours=args.hours, max_utility=max_u, slot_minutes=args.slot_minutes)
    save_task(task, args.out)
    print(f"wrote {args.out} ({task.n} POIs, {task.total_slots} slots)")
    return 0


def cmd_plan(args) -> int:
    task = load_task(args.task)
    try:
        plan = solve(compile_task(task), args.heuristic, task_ref=Path(args.task).stem)
    except ResourceExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _emit(render_plan_native(plan, task), args.out)
    print(f"; utility {plan_utility(plan, task)}", file=sys.stderr)
    return 0


def cmd_oracle(args) -> int:
    task = load_task(args.task)
    try:
        u, plan = oracle_solve(task, Path(args.task).stem)
    except OracleTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"; oracle utility {u}")
    _emit(render_plan_native(plan, task), args.out)
    return 0


def _read_plan(args, task):
    text = Path(args.plan).read_text(encoding="utf-8", errors="replace")
    if args.grammar == "llm":
        return parse_plan_llm(text, task, task_ref=Path(args.task).stem)
    return parse_plan_native(text, task, Path(args.task).stem)


def cmd_validate(args) -> int:
    task = load_task(args.task)
    try:
        plan = _read_plan(args, task)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    report = validate(plan, task)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(report.to_text())
    return 0 if report.valid else 1


def cmd_eval(args) -> int:
    rec = harness.eval_plan(args.task, args.plan, args.grammar, args.placeholder_utility)
    sys.stdout.write(harness.write_csv([rec]))
    return harness.exit_code([rec])


def cmd_run_suite(args) -> int:
    records = harness.run_suite(
        args.suite, methods=args.methods, heuristic_name=args.heuristic,
        placeholder=args.placeholder_utility, plans_dir=args.plans, jobs=args.jobs,
    )
    text = harness.write_csv(records, args.out)
    if not args.out:
        sys.stdout.write(text)
    print(harness.format_summary(harness.summarize(records)), file=sys.stderr)
    return harness.exit_code(records)


def cmd_pddl_export(args) -> int:
    task = load_task(args.task)
    name = Path(args.task).stem
    pair = emit_pddl(compile_task(task))
    dom, prob = pair.write(args.out_dir, name)
    print(f"wrote {dom} and {prob}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tripplan", description="Optimal single-day itinerary planning.")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-utility", type=int, default=10)
    p.add_argument("--slot-minutes", type=int, default=15)
    p.add_argument("--placeholder-utility", type=int, default=21)
    p.add_argument("--heuristic", choices=("h0", "h1"), default="h0")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a benchmark suite of task files")
    g.add_argument("--out", required=True)
    g.add_argument("--cities", nargs="*")
    g.add_argument("--per-city", type=int, default=5)
    g.add_argument("--pois", type=int, default=10)
    g.add_argument("--hours", type=int, default=8)
    g.add_argument("--sweep", choices=("pois", "hours"))
    g.add_argument("--force", action="store_true")
    g.add_argument("--no-fixtures", action="store_true", help="synthesise data even for fixture cities")
    g.set_defaults(func=cmd_gen)

    f = sub.add_parser("fetch", help="build a task file from a travel-information provider")
    f.add_argument("--provider", choices=("fixture", "synthetic", "llm"), default="fixture")
    f.add_argument("--city", default="Paris")
    f.add_argument("--pois", type=int, default=10)
    f.add_argument("--hours", type=int, default=8)
    f.add_argument("--rating-scale", type=int, default=5)
    f.add_argument("--replay", help="transcript JSON to replay instead of calling the endpoint")
    f.add_argument("--record", help="write the exchanged prompts/responses to this transcript")
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fetch)

    for name, func, help_ in (("plan", cmd_plan, "solve a task optimally"),
                              ("oracle", cmd_oracle, "solve a task with the subset-DP oracle")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("task")
        s.add_argument("--out")
        s.set_defaults(func=func)

    for name, func in (("validate", cmd_validate), ("eval", cmd_eval)):
        s = sub.add_parser(name, help=f"{name} a plan file against a task")
        s.add_argument("task")
        s.add_argument("plan")
        s.add_argument("--grammar", choices=("native", "llm"), default="native")
        if name == "validate":
            s.add_argument("--json", action="store_true")
        s.set_defaults(func=func)

    r = sub.add_parser("run-suite", help="solve/evaluate every task in a suite directory")
    r.add_argument("suite")
    r.add_argument("--out")
    r.add_argument("--methods", nargs="+", default=["optimal"],
                   choices=("optimal", "oracle", "external"))
    r.add_argument("--plans", help="directory of external plans (<task>.plan or <task>.llm.txt)")
    r.add_argument("--jobs", type=int, default=1)
    r.set_defaults(func=cmd_run_suite)

    x = sub.add_parser("pddl-export", help="write <task>-domain.pddl and <task>-problem.pddl")
    x.add_argument("task")
    x.add_argument("--out-dir", default=".")
    x.set_defaults(func=cmd_pddl_export)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InvalidTask, OSError, FileExistsError, UnknownFixture, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ProviderUnavailable, ProviderParseError) as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
