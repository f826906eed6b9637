"""Cost-space view of an itinerary task.

Utilities become visit costs (``max_utility - utility + 1``) and every POI the
plan leaves unvisited pays a flat skip penalty of ``max_utility + 1``. With
moves free, ``total_cost + plan_utility`` is the same constant for every plan,
so minimising one maximises the other.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

from .model import ItineraryTask, Plan, StepKind, UnknownPoi


@dataclass(frozen=True)
class CompiledTask:
    task: ItineraryTask
    visit_cost: tuple[int, ...]
    skip_cost: tuple[int, ...]
    move_cost: int = 0

    @property
    def horizon(self) -> int:
        return self.task.total_slots

    def sum_table(self, t0: int, delta: int) -> Optional[int]:
        """Slot addition restricted to the horizon; ``None`` where no fact exists."""
        if t0 < 0 or delta < 0:
            return None
        tf = t0 + delta
        return tf if tf <= self.horizon else None

    def sum_facts(self, include_zero: bool = False) -> Iterator[tuple[int, int, int]]:
        lo = 0 if include_zero else 1
        S = self.horizon
        for t0 in range(S + 1):
            for d in range(lo, S - t0 + 1):
                yield t0, d, t0 + d

    @property
    def total_constant(self) -> int:
        """N * (max_utility + 1): the value of total_cost + plan_utility when moves are free."""
        return sum(self.skip_cost)


def compile_task(task: ItineraryTask, move_cost: int = 0) -> CompiledTask:
    m = task.max_utility
    return CompiledTask(
        task=task,
        visit_cost=tuple(m - p.utility + 1 for p in task.pois),
        skip_cost=tuple(m + 1 for _ in task.pois),
        move_cost=move_cost,
    )


def total_cost(plan: Plan, compiled: CompiledTask) -> int:
    task = compiled.task
    for pid in plan.visited:
        if pid not in task.ids:
            raise UnknownPoi(pid)
    cost = 0
    for i, p in enumerate(task.pois):
        cost += compiled.visit_cost[i] if p.id in plan.visited else compiled.skip_cost[i]
    n_moves = sum(1 for s in plan.steps if s.kind is StepKind.MOVE)
    return cost + compiled.move_cost * n_moves
