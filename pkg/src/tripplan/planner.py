"""Exact itinerary search and an independent subset-DP oracle.

The solver is a best-first search over ``(location, time slot, visited set)``
states in cost space. Each state may visit its current location, move along a
travel edge, or stop (paying the skip penalty for every unvisited POI).

The oracle enumerates visit sequences with a Held-Karp style table keyed on
``(visited subset, last POI)`` holding the earliest completion slot.
"""

from __future__ import annotations

import heapq
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .compile import CompiledTask
from .model import ItineraryTask, Plan, PlanStep

DEFAULT_NODE_LIMIT = 50_000_000
ORACLE_MAX_POIS = 16


class ResourceExhausted(RuntimeError):
    """The search expanded more nodes than its configured limit."""


class OracleTooLarge(ValueError):
    pass


class SearchState(NamedTuple):
    loc: int
    time_slot: int
    visited: int  # bitmask over POI indices


def travel_closure(travel: Sequence[Sequence[int]]) -> list[list[int]]:
    """All-pairs shortest travel slots (Floyd-Warshall)."""
    n = len(travel)
    dist = [list(row) for row in travel]
    for k in range(n):
        dk = dist[k]
        for i in range(n):
            dik = dist[i][k]
            di = dist[i]
            for j in range(n):
                alt = dik + dk[j]
                if alt < di[j]:
                    di[j] = alt
    return dist


def _unvisited(mask: int, n: int):
    return (i for i in range(n) if not mask >> i & 1)


def heuristic(state: SearchState, compiled: CompiledTask) -> int:
    """Sum of visit costs still outstanding. Consistent: visits lower it by exactly their cost."""
    vc = compiled.visit_cost
    return sum(vc[i] for i in _unvisited(state.visited, len(vc)))


def heuristic_strong(
    state: SearchState,
    compiled: CompiledTask,
    dist: Optional[Sequence[Sequence[int]]] = None,
) -> int:
    """Like :func:`heuristic`, but POIs that can no longer fit count at their skip cost.

    Admissible, not consistent. Reachability uses shortest travel times so that
    routes through intermediate POIs are not ruled out.
    """
    task = compiled.task
    if dist is None:
        dist = travel_closure(task.travel_slots)
    left = task.total_slots - state.time_slot
    total = 0
    for i in _unvisited(state.visited, task.n):
        need = dist[state.loc][i] + task.pois[i].visit_slots
        total += compiled.skip_cost[i] if need > left else compiled.visit_cost[i]
    return total


def solve(
    compiled: CompiledTask,
    heuristic_name: str = "h0",
    node_limit: int = DEFAULT_NODE_LIMIT,
    task_ref: str = "",
    stats: Optional[dict] = None,
) -> Plan:
    """Return a minimum-cost (maximum-utility) plan.

    Among optimal plans the one finishing earliest wins, then the one whose
    visit sequence is lexicographically smallest by POI id. If ``stats`` is
    given, the number of expanded states is stored under ``"expanded"``.
    """
    search = _AStar(compiled, heuristic_name, node_limit)
    plan = search.run(task_ref or compiled.task.city)
    if stats is not None:
        stats["expanded"] = search.expanded
    return plan


class _AStar:
    def __init__(self, compiled: CompiledTask, heuristic_name: str, node_limit: int):
        if heuristic_name not in ("h0", "h1"):
            raise ValueError(f"unknown heuristic {heuristic_name!r}")
        task = compiled.task
        self.compiled = compiled
        self.task = task
        self.n = task.n
        self.S = task.total_slots
        self.node_limit = node_limit
        self.reopen = heuristic_name == "h1"
        self.visit_slots = [p.visit_slots for p in task.pois]
        self.vc = list(compiled.visit_cost)
        self.skip = list(compiled.skip_cost)
        self.dist = travel_closure(task.travel_slots)
        # rank of each POI id in sorted order, for the lexicographic tie-break
        order = sorted(range(self.n), key=lambda i: task.pois[i].id)
        self.rank = [0] * self.n
        for r, i in enumerate(order):
            self.rank[i] = r
        # An edge that is not itself a shortest path is never needed: some chain
        # of shortest edges reaches the same place no later.
        self.edges = [
            [(j, task.travel_slots[i][j]) for j in order
             if j != i and task.travel_slots[i][j] == self.dist[i][j]]
            for i in range(self.n)
        ]
        if heuristic_name == "h0":
            self.h = self._h0
        else:
            self.h = self._h1
        self._h0_cache: dict[int, int] = {}
        self._skip_cache: dict[int, int] = {}

    # -- heuristics over packed states

    def _h0(self, mask: int, loc: int, t: int) -> int:
        h = self._h0_cache.get(mask)
        if h is None:
            vc = self.vc
            h = sum(vc[i] for i in range(self.n) if not mask >> i & 1)
            self._h0_cache[mask] = h
        return h

    def _h1(self, mask: int, loc: int, t: int) -> int:
        left = self.S - t
        dl = self.dist[loc]
        vs, vc, sk = self.visit_slots, self.vc, self.skip
        total = 0
        for i in range(self.n):
            if not mask >> i & 1:
                total += sk[i] if dl[i] + vs[i] > left else vc[i]
        return total

    def _skip_unvisited(self, mask: int) -> int:
        s = self._skip_cache.get(mask)
        if s is None:
            sk = self.skip
            s = sum(sk[i] for i in range(self.n) if not mask >> i & 1)
            self._skip_cache[mask] = s
        return s

    # state keys pack as ((mask * n) + loc) * (S + 1) + t

    def unpack(self, key: int) -> tuple[int, int, int]:
        rest, t = divmod(key, self.S + 1)
        mask, loc = divmod(rest, self.n)
        return mask, loc, t

    def run(self, task_ref: str) -> Plan:
        S, n = self.S, self.n
        S1 = S + 1
        start = self.task.start_poi
        root = start * S1
        g_of = {root: 0}
        self.parent = parent = {root: -1}
        # path key per state: (visit ranks, step tokens), compared for tie-breaks
        path = {root: ((), ())}
        closed: set[int] = set()
        heap = [(self.h(0, start, 0), 0, root)]
        h = self.h
        vs, vc, rank = self.visit_slots, self.vc, self.rank
        move_cost = self.compiled.move_cost
        edges = self.edges
        reopen = self.reopen
        skip_unvisited = self._skip_unvisited
        heappush, heappop = heapq.heappush, heapq.heappop
        expanded = 0
        best = None  # (f, t, key) of the incumbent terminal

        def relax(child, g_new, pkey, cand, mask, loc, t):
            old = g_of.get(child)
            if old is not None:
                if g_new > old:
                    return
                if g_new == old:
                    if child not in closed and cand < path[child]:
                        parent[child] = pkey
                        path[child] = cand
                    return
                if child in closed:
                    if not reopen:
                        return
                    closed.discard(child)
            g_of[child] = g_new
            parent[child] = pkey
            path[child] = cand
            f = g_new + h(mask, loc, t)
            if best is not None and f > best[0]:
                return
            heappush(heap, (f, t, child))

        while heap:
            f, t, key = heap[0]
            if best is not None and (f, t) > (best[0], best[1]):
                break
            heappop(heap)
            if key in closed:
                continue
            rest = key // S1
            mask, loc = divmod(rest, n)
            g = g_of[key]
            if g + h(mask, loc, t) != f:
                continue  # stale entry
            closed.add(key)
            expanded += 1
            if expanded > self.node_limit:
                raise ResourceExhausted(f"node limit {self.node_limit} reached")

            goal_f = g + skip_unvisited(mask)
            if best is None or (goal_f, t) < (best[0], best[1]):
                best = (goal_f, t, key)
            elif (goal_f, t) == (best[0], best[1]) and path[key] < path[best[2]]:
                best = (goal_f, t, key)

            visits, steps = path[key]
            if not mask >> loc & 1:
                tf = t + vs[loc]
                if tf <= S:
                    nmask = mask | (1 << loc)
                    r = rank[loc]
                    relax((nmask * n + loc) * S1 + tf, g + vc[loc], key,
                          (visits + (r,), steps + ((0, r),)), nmask, loc, tf)
            base = mask * n
            rl = rank[loc]
            for j, d in edges[loc]:
                tf = t + d
                if tf <= S:
                    relax((base + j) * S1 + tf, g + move_cost, key,
                          (visits, steps + ((1, rl, rank[j]),)), mask, j, tf)

        self.expanded = expanded
        assert best is not None
        return self.reconstruct(best[2], task_ref)

    def reconstruct(self, key: int, task_ref: str) -> Plan:
        ids = self.task.ids
        steps: list[PlanStep] = []
        while self.parent[key] >= 0:
            pk = self.parent[key]
            cmask, cloc, ct = self.unpack(key)
            pmask, ploc, pt = self.unpack(pk)
            if cmask != pmask:
                steps.append(PlanStep.visit(ids[cloc], pt, ct))
            else:
                steps.append(PlanStep.move(ids[ploc], ids[cloc], pt, ct))
            key = pk
        steps.reverse()
        return Plan(task_ref, tuple(steps))


def solve_task(task: ItineraryTask, heuristic_name: str = "h0", **kw) -> Plan:
    from .compile import compile_task

    return solve(compile_task(task), heuristic_name, **kw)


# ---------------------------------------------------------------------------
# oracle


def _oracle_closure(task: ItineraryTask):
    mat = np.asarray(task.travel_slots, dtype=float)
    dist, pred = shortest_path(mat, method="FW", directed=True, return_predecessors=True)
    return dist.astype(np.int64).tolist(), pred.tolist()


def _best_extension(task: ItineraryTask, dist, loc: int, t0: int, visited: int):
    """Max extra utility reachable from a state, with the visit order achieving it."""
    S = task.total_slots
    util = [p.utility for p in task.pois]
    dur = [p.visit_slots for p in task.pois]
    n = task.n
    # layer maps (mask, last) -> earliest completion slot
    layer: dict[tuple[int, int], int] = {}
    back: dict[tuple[int, int], tuple[int, int]] = {}
    best_u, best_end = 0, None
    for j in range(n):
        if visited >> j & 1:
            continue
        t = t0 + dist[loc][j] + dur[j]
        if t <= S:
            layer[(1 << j, j)] = t
    gained: dict[int, int] = {}
    while layer:
        nxt: dict[tuple[int, int], int] = {}
        for (mask, last), t in sorted(layer.items()):
            u = gained.get(mask)
            if u is None:
                u = gained[mask] = sum(util[i] for i in range(n) if mask >> i & 1)
            if u > best_u:
                best_u, best_end = u, (mask, last)
            for k in range(n):
                if (mask | visited) >> k & 1:
                    continue
                tk = t + dist[last][k] + dur[k]
                if tk > S:
                    continue
                state = (mask | 1 << k, k)
                if tk < nxt.get(state, S + 1):
                    nxt[state] = tk
                    back[state] = (mask, last)
        layer = nxt
    order: list[int] = []
    node = best_end
    while node is not None:
        order.append(node[1])
        node = back.get(node)
    order.reverse()
    return best_u, order


def oracle_remaining_utility(task: ItineraryTask, state: SearchState) -> int:
    """Best utility still collectable from ``state`` (exhaustive subset DP)."""
    if task.n > ORACLE_MAX_POIS:
        raise OracleTooLarge(f"oracle supports at most {ORACLE_MAX_POIS} POIs, got {task.n}")
    dist, _ = _oracle_closure(task)
    return _best_extension(task, dist, state.loc, state.time_slot, state.visited)[0]


def oracle_solve(task: ItineraryTask, task_ref: str = "") -> tuple[int, Plan]:
    """Exact maximum utility by subset DP, plus a witness plan."""
    if task.n > ORACLE_MAX_POIS:
        raise OracleTooLarge(f"oracle supports at most {ORACLE_MAX_POIS} POIs, got {task.n}")
    dist, pred = _oracle_closure(task)
    best_u, order = _best_extension(task, dist, task.start_poi, 0, 0)
    ids = task.ids
    steps: list[PlanStep] = []
    here, t = task.start_poi, 0
    for j in order:
        hops = []
        node = j
        while node != here:
            p = pred[here][node]
            hops.append((p, node))
            node = p
        for a, b in reversed(hops):
            d = task.travel_slots[a][b]
            steps.append(PlanStep.move(ids[a], ids[b], t, t + d))
            t += d
        d = task.pois[j].visit_slots
        steps.append(PlanStep.visit(ids[j], t, t + d))
        t += d
        here = j
    return best_u, Plan(task_ref or task.city, tuple(steps))


HeuristicFn = Callable[[SearchState, CompiledTask], int]
