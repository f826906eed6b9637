import pytest
from hypothesis import given, settings, strategies as st

from tripplan.compile import compile_task
from tripplan.model import make_task, plan_utility
from tripplan.planner import (
    OracleTooLarge,
    ResourceExhausted,
    SearchState,
    heuristic,
    heuristic_strong,
    oracle_remaining_utility,
    oracle_solve,
    solve,
    travel_closure,
)
from tripplan.providers import synthetic_task
from tripplan.validator import validate

from helpers import brute_force_utility, shortest_paths, small_tasks

# Oracle optimum for the Paris fixture at H = 6..10, frozen from oracle_solve.
PARIS_OPTIMUM = {6: 16, 7: 18, 8: 20, 9: 23, 10: 24}


@settings(max_examples=150)
@given(small_tasks(max_n=5))
def test_oracle_matches_brute_force(task):
    assert oracle_solve(task)[0] == brute_force_utility(task)


@settings(max_examples=150)
@given(small_tasks(max_n=7), st.sampled_from(["h0", "h1"]))
def test_solver_matches_oracle(task, h):
    plan = solve(compile_task(task), h)
    assert plan_utility(plan, task) == oracle_solve(task)[0]
    assert validate(plan, task).valid


@given(small_tasks(max_n=7))
def test_oracle_witness_is_valid(task):
    u, plan = oracle_solve(task)
    assert validate(plan, task).valid
    assert plan_utility(plan, task) == u


@given(small_tasks(max_n=6))
def test_closure_matches_reference(task):
    assert travel_closure(task.travel_slots) == shortest_paths(task.travel_slots)


def _random_state(task, data):
    loc = data.draw(st.integers(0, task.n - 1))
    t = data.draw(st.integers(0, task.total_slots))
    mask = data.draw(st.integers(0, (1 << task.n) - 1))
    if t > 0:
        mask |= 1 << loc
    return SearchState(loc, t, mask)


@settings(max_examples=500)
@given(small_tasks(max_n=6), st.data())
def test_heuristics_admissible(task, data):
    state = _random_state(task, data)
    c = compile_task(task)
    unvisited = [i for i in range(task.n) if not state.visited >> i & 1]
    true_cost = sum(c.skip_cost[i] for i in unvisited) - oracle_remaining_utility(task, state)
    h0 = heuristic(state, c)
    h1 = heuristic_strong(state, c)
    assert h0 <= h1 <= true_cost


def test_heuristic_examples(paris_task):
    c = compile_task(paris_task)
    assert heuristic(SearchState(0, 0, 0), c) == 21
    assert heuristic(SearchState(0, 5, (1 << 10) - 1), c) == 0
    # nothing fits: every unvisited POI is charged its skip cost
    end = SearchState(0, paris_task.total_slots, 0b11)
    assert heuristic_strong(end, c) == 8 * 6


def test_single_poi_visited():
    t = make_task("c", [("only", 3, 4)], [[0]], horizon_hours=1)
    plan = solve(compile_task(t))
    assert plan.visit_sequence == ("only",)


def test_nothing_fits():
    t = make_task("c", [("a", 3, 9), ("b", 2, 9)], [[0, 1], [1, 0]], horizon_hours=2)
    assert solve(compile_task(t)).steps == ()
    u, plan = oracle_solve(t)
    assert u == 0 and plan.steps == ()


def test_three_unit_pois():
    t = make_task("c", [("a", 1, 1), ("b", 1, 1), ("c", 1, 1)], [[0, 1, 1], [1, 0, 1], [1, 1, 0]])
    assert oracle_solve(t)[0] == 3


def test_waypoint_route_is_used():
    # a->c direct takes 8 slots, a->b->c takes 2; only the detour leaves time to visit c
    t = make_task(
        "c", [("a", 1, 1), ("b", 1, 30), ("c", 5, 1)],
        [[0, 1, 8], [1, 0, 1], [8, 1, 0]], horizon_hours=1,
    )
    plan = solve(compile_task(t))
    assert plan_utility(plan, t) == 6 == oracle_solve(t)[0]
    assert validate(plan, t).valid


def test_paris_matches_oracle(paris_task):
    for h, want in PARIS_OPTIMUM.items():
        task = paris_task.with_horizon(h)
        plan = solve(compile_task(task))
        assert validate(plan, task).valid
        assert plan_utility(plan, task) == want == oracle_solve(task)[0]


@pytest.mark.parametrize("seed", range(4))
def test_monotone_in_horizon(seed):
    us = [oracle_solve(synthetic_task(seed, 8, h))[0] for h in range(2, 9)]
    assert us == sorted(us)


@pytest.mark.parametrize("seed", range(4))
def test_monotone_in_pois(seed):
    # dropping trailing POIs from a task can never help
    full = synthetic_task(seed, 9, 6)
    prev = None
    for n in range(1, 10):
        sub = make_task(
            "c", [(p.id, p.utility, p.visit_slots) for p in full.pois[:n]],
            [row[:n] for row in full.travel_slots[:n]], 6, full.max_utility,
        )
        u = plan_utility(solve(compile_task(sub)), sub)
        assert prev is None or u >= prev
        prev = u


@pytest.mark.parametrize("seed", range(5))
def test_saturation(seed):
    t = synthetic_task(seed, 4, 12)
    plan = solve(compile_task(t))
    assert plan.visited == set(t.ids)


def test_deterministic(paris_task):
    c = compile_task(paris_task.with_horizon(8))
    assert solve(c) == solve(c)
    assert solve(c, "h0") == solve(c, "h1")


def test_node_limit():
    with pytest.raises(ResourceExhausted):
        solve(compile_task(synthetic_task(1, 10, 8)), node_limit=50)


def test_unknown_heuristic(paris_task):
    with pytest.raises(ValueError):
        solve(compile_task(paris_task), "lmcut")


def test_oracle_too_large():
    with pytest.raises(OracleTooLarge):
        oracle_solve(synthetic_task(0, 17, 2))


def test_stats_report_expansions(paris_task):
    stats = {}
    solve(compile_task(paris_task), stats=stats)
    assert stats["expanded"] > 0


@given(small_tasks(max_n=6))
def test_no_trailing_move(task):
    plan = solve(compile_task(task))
    assert not plan.steps or plan.steps[-1].kind.value == "visit"
