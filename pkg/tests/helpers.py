"""Shared strategies and independent reference computations for the test suite."""

from __future__ import annotations

from itertools import permutations
from pathlib import Path

from hypothesis import strategies as st

from tripplan.model import make_task

GOLDEN = Path(__file__).parent / "golden"


@st.composite
def small_tasks(draw, min_n=1, max_n=6, max_hours=3, max_utility=10, max_visit=6, max_travel=4):
    """Random tasks with a non-metric travel matrix."""
    n = draw(st.integers(min_n, max_n))
    hours = draw(st.integers(1, max_hours))
    pois = [
        (f"p{i}", draw(st.integers(1, max_utility)), draw(st.integers(1, max_visit)))
        for i in range(n)
    ]
    travel = [
        [0 if i == j else draw(st.integers(1, max_travel)) for j in range(n)] for i in range(n)
    ]
    return make_task("prop", pois, travel, hours, max_utility)


def shortest_paths(travel):
    # Bellman-Ford style relaxation; deliberately not the solver's Floyd-Warshall.
    n = len(travel)
    dist = [list(row) for row in travel]
    changed = True
    while changed:
        changed = False
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    if dist[i][k] + travel[k][j] < dist[i][j]:
                        dist[i][j] = dist[i][k] + travel[k][j]
                        changed = True
    return dist


def brute_force_utility(task) -> int:
    """Best utility over every ordered subset of POIs; only for tiny N."""
    dist = shortest_paths(task.travel_slots)
    S = task.total_slots
    best = 0
    idx = range(task.n)
    for k in range(1, task.n + 1):
        for order in permutations(idx, k):
            t, here = 0, task.start_poi
            for i in order:
                t += dist[here][i] + task.pois[i].visit_slots
                here = i
                if t > S:
                    break
            else:
                best = max(best, sum(task.pois[i].utility for i in order))
    return best
