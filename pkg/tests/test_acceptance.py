"""One check per primary acceptance criterion; each prints a PASS/FAIL line."""

import json
import random
import time
from fractions import Fraction

import pytest

from tripplan import harness
from tripplan.compile import compile_task, total_cost
from tripplan.model import Plan, PlanStep, dumps_task, load_task, loads_task, make_task, plan_utility
from tripplan.pddl import (
    emit_pddl,
    parse_plan_llm,
    parse_plan_native,
    read_domain,
    read_problem,
    render_plan_native,
)
from tripplan.planner import oracle_solve, solve
from tripplan.providers import ParseError, fixture_path, synthetic_task
from tripplan.validator import Category, validate, violation_ratio

from helpers import GOLDEN


def _equivalence_params(k):
    return k, 4 + k % 5, 4 + (k // 5) % 5


@pytest.fixture(scope="module")
def equivalence_runs():
    runs = []
    t0 = time.perf_counter()
    for seed, n, h in map(_equivalence_params, range(200)):
        task = synthetic_task(seed, n, h)
        plan = solve(compile_task(task))
        u, witness = oracle_solve(task)
        runs.append((task, plan, u, witness))
    return runs, time.perf_counter() - t0


@pytest.fixture(scope="module")
def default_suite(tmp_path_factory):
    out = tmp_path_factory.mktemp("suite")
    paths = harness.gen_suite(out)
    runs = []
    for p in paths:
        task = load_task(p)
        runs.append((p.stem, task, solve(compile_task(task), task_ref=p.stem)))
    return runs


@pytest.fixture(scope="module")
def paris_sweep(paris_task):
    out = {}
    for h in range(6, 11):
        task = paris_task.with_horizon(h)
        out[h] = (task, solve(compile_task(task)))
    return out


def test_oracle_equivalence(equivalence_runs, acceptance_line):
    runs, seconds = equivalence_runs
    mismatches = [
        (task.n, task.grid.horizon_hours, plan_utility(plan, task), u)
        for task, plan, u, _ in runs if plan_utility(plan, task) != u
    ]
    ok = not mismatches and len(runs) == 200 and seconds < 60
    acceptance_line("oracle equivalence", ok,
                    f"{len(runs)} tasks, {len(mismatches)} mismatches, {seconds:.1f}s < 60s")
    assert not mismatches
    assert seconds < 60


def test_duality_identity(equivalence_runs, default_suite, paris_sweep, acceptance_line):
    plans = []
    for task, plan, _, witness in equivalence_runs[0]:
        plans += [(task, plan), (task, witness)]
    plans += [(task, plan) for _, task, plan in default_suite]
    plans += list(paris_sweep.values())
    bad = 0
    for task, plan in plans:
        c = compile_task(task)
        if total_cost(plan, c) + plan_utility(plan, task) != task.n * (task.max_utility + 1):
            bad += 1
    acceptance_line("duality identity", bad == 0, f"{len(plans)} plans, {bad} failures")
    assert bad == 0


def test_optimal_plans_valid(default_suite, acceptance_line):
    invalid = [label for label, task, plan in default_suite if not validate(plan, task).valid]
    ok = len(default_suite) == 100 and not invalid
    acceptance_line("validity of optimal plans", ok,
                    f"{len(default_suite)} suite tasks, {len(invalid)} invalid")
    assert len(default_suite) == 100
    assert not invalid


def test_saturation(acceptance_line):
    misses = []
    for seed in range(20):
        task = synthetic_task(seed, 4, 16)
        # every visit plus the slowest possible move between each consecutive pair
        worst = sum(p.visit_slots for p in task.pois) + 3 * max(max(r) for r in task.travel_slots)
        assert worst <= task.total_slots
        plan = solve(compile_task(task))
        if plan.visited != set(task.ids):
            misses.append(seed)
    acceptance_line("saturation", not misses, f"20 N=4 instances, {len(misses)} not saturated")
    assert not misses


def test_paris_monotone(paris_sweep, acceptance_line):
    us = [plan_utility(plan, task) for task, plan in paris_sweep.values()]
    ok = all(a <= b for a, b in zip(us, us[1:]))
    acceptance_line("Paris monotonicity H=6..10", ok, f"utilities {us}")
    assert ok


def test_fixture_pinning(paris_task, acceptance_line):
    golden = (GOLDEN / "paris_task_h6.json").read_text(encoding="utf-8")
    stable = dumps_task(paris_task) == golden and dumps_task(loads_task(golden)) == golden
    fixture = json.loads(fixture_path("Paris").read_text(encoding="utf-8"))
    ids = [p["id"] for p in fixture["pois"]]
    raw_hop = fixture["travel_minutes"][ids.index("louvre_museum")][ids.index("muse_dorsay")]
    raw_visit = fixture["pois"][ids.index("palace_of_versailles")]["visit_minutes"]
    hop = paris_task.travel("louvre_museum", "muse_dorsay")
    visit = paris_task.poi("palace_of_versailles").visit_slots
    ok = stable and (raw_hop, hop) == (4, 1) and (raw_visit, visit) == (240, 16)
    acceptance_line("fixture pinning", ok,
                    f"byte-stable={stable}, hop {raw_hop}min->{hop} slot, visit {raw_visit}min->{visit} slots")
    assert ok


def test_validator_regression(acceptance_line):
    results = []
    for name, need, actual, want in (("Tower of London", 8, 6, 0.75), ("Toronto Islands", 12, 1, 0.0833)):
        task = make_task("c", [(name, 5, need)], [[0]], horizon_hours=8)
        report = validate(Plan("x", [PlanStep.visit(task.ids[0], 0, actual)]), task)
        (ratio,) = violation_ratio(report, task) or (None,)
        ok = (
            len(report.violations) == 1
            and report.violations[0].category is Category.VISIT_TOO_SHORT
            and (report.violations[0].required_slots, report.violations[0].actual_slots) == (need, actual)
            and ratio == Fraction(actual, need)
            and abs(float(ratio) - actual / need) <= 1e-9
            and round(float(ratio), 4) == want
        )
        results.append(ok)
    acceptance_line("validator regression", all(results), "6/8 -> 0.75, 1/12 -> 0.0833")
    assert all(results)


def test_llm_grammar(paris_task, acceptance_line):
    golden = json.loads((GOLDEN / "paris_llm_golden.json").read_text())
    plan = parse_plan_llm((GOLDEN / "paris_llm_answer.txt").read_text(), paris_task)
    steps = [
        {"kind": s.kind.value, "poi_from": s.poi_from, "poi": s.poi,
         "start_slot": s.start_slot, "end_slot": s.end_slot}
        for s in plan.steps
    ]
    golden_ok = steps == golden["steps"] and validate(plan, paris_task).to_dict() == golden["report"]
    rng = random.Random(2024)
    crashes = 0
    for _ in range(10_000):
        blob = bytes(rng.getrandbits(8) for _ in range(rng.randint(0, 64)))
        try:
            parse_plan_llm(blob.decode("utf-8", errors="replace"), paris_task)
        except ParseError:
            pass
        except Exception:
            crashes += 1
    ok = golden_ok and crashes == 0
    acceptance_line("LLM-grammar parsing", ok, f"golden={golden_ok}, 10000 fuzz inputs, {crashes} crashes")
    assert golden_ok and crashes == 0


def test_pddl_export(paris_task, paris_sweep, acceptance_line):
    pair = emit_pddl(compile_task(paris_task))
    dom = read_domain(pair.domain_text)
    prob = read_problem(pair.problem_text)
    S = paris_task.total_slots
    sums = [f for f in prob["facts"] if f[0] == "logic_sum"]
    sums_ok = bool(sums) and all(
        int(a[1:]) + int(d[1:]) == int(tf[1:]) <= S for a, d, tf in (f[1:] for f in sums)
    )
    shape_ok = (
        set(dom["actions"]) == {"visit", "move", "end_mode", "no_visit"}
        and len(prob["objects"]["time"]) == S + 1
        and prob["metric"] == ["minimize", ["total-cost"]]
    )
    trips = 0
    for task, plan in paris_sweep.values():
        text = render_plan_native(plan, task)
        again = parse_plan_native(text, task, plan.task_ref)
        trips += again == plan and render_plan_native(again, task) == text
    ok = sums_ok and shape_ok and trips == len(paris_sweep)
    acceptance_line("PDDL export", ok,
                    f"{len(sums)} logic_sum facts within S={S}, {trips}/{len(paris_sweep)} plan round-trips")
    assert ok


def test_scalability(acceptance_line):
    worst = 0.0
    problems = []
    for seed in range(5):
        task = synthetic_task(seed, 18, 8)
        t0 = time.perf_counter()
        plan = solve(compile_task(task))
        worst = max(worst, time.perf_counter() - t0)
        if not validate(plan, task).valid:
            problems.append(f"N=18 seed {seed} invalid")
    for n in harness.POI_SWEEP:
        if n > 16:
            continue
        for seed in range(5):
            task = synthetic_task(seed, n, 8)
            plan = solve(compile_task(task))
            if not validate(plan, task).valid or plan_utility(plan, task) != oracle_solve(task)[0]:
                problems.append(f"N={n} seed {seed}")
    ok = worst < 120 and not problems
    acceptance_line("scalability smoke", ok,
                    f"N=18 H=8 worst {worst:.1f}s < 120s, sweep N<=16 oracle mismatches {len(problems)}")
    assert worst < 120
    assert not problems
