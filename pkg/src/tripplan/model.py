"""Itinerary task data model on a discrete time grid, plus the plan representation."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import time
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

TASK_FORMAT = "trip-task/1"


class InvalidName(ValueError):
    """A POI name folds to an empty token."""


class UnknownPoi(KeyError):
    """A plan references a POI id that the task does not define."""


class InvalidTask(ValueError):
    """Task data violates the model invariants or the task file format."""


_APOSTROPHES = re.compile(r"['’‘`]")
_NON_ALNUM = re.compile(r"[^a-z0-9]+")


def fold_name(raw: str) -> str:
    """Fold a free-text place name into a stable lowercase token.

    Non-ASCII characters are dropped outright (``"Musée d'Orsay"`` becomes
    ``"muse_dorsay"``), apostrophes vanish, and every other run of
    non-alphanumeric characters becomes a single underscore.
    """
    text = _APOSTROPHES.sub("", raw.lower())
    text = text.encode("ascii", "ignore").decode("ascii")
    token = _NON_ALNUM.sub(" ", text).strip()
    if not token:
        raise InvalidName(f"name {raw!r} is empty after folding")
    return "_".join(token.split())


def parse_clock(text: str) -> time:
    m = re.fullmatch(r"\s*(\d{1,2}):(\d{2})\s*", text)
    if not m:
        raise ValueError(f"expected HH:MM, got {text!r}")
    return time(int(m.group(1)), int(m.group(2)))


@dataclass(frozen=True)
class TimeGrid:
    slot_minutes: int = 15
    day_start: time = time(8, 0)
    horizon_hours: int = 8

    def __post_init__(self):
        if self.slot_minutes <= 0 or 60 % self.slot_minutes:
            raise InvalidTask(f"slot_minutes={self.slot_minutes} must divide 60")
        if self.horizon_hours < 1:
            raise InvalidTask("horizon_hours must be >= 1")

    @property
    def total_slots(self) -> int:
        return self.horizon_hours * 60 // self.slot_minutes

    def with_horizon(self, hours: int) -> "TimeGrid":
        return TimeGrid(self.slot_minutes, self.day_start, hours)


def minutes_to_slots(minutes: int, grid: TimeGrid) -> int:
    """Round a duration up to whole slots; any positive duration takes at least one."""
    if minutes < 0:
        raise ValueError(f"negative duration {minutes}")
    return -(-minutes // grid.slot_minutes)


@dataclass(frozen=True)
class Poi:
    id: str
    display_name: str
    utility: int
    visit_slots: int

    def __post_init__(self):
        if self.visit_slots < 1:
            raise InvalidTask(f"{self.id}: visit_slots must be >= 1")
        if fold_name(self.id) != self.id:
            raise InvalidTask(f"POI id {self.id!r} is not a folded token")


@dataclass(frozen=True)
class ItineraryTask:
    city: str
    grid: TimeGrid
    pois: tuple[Poi, ...]
    travel_slots: tuple[tuple[int, ...], ...]
    max_utility: int = 10
    start_poi: int = 0

    def __post_init__(self):
        object.__setattr__(self, "pois", tuple(self.pois))
        object.__setattr__(self, "travel_slots", tuple(tuple(r) for r in self.travel_slots))
        n = len(self.pois)
        if n == 0:
            raise InvalidTask("a task needs at least one POI")
        ids = [p.id for p in self.pois]
        if len(set(ids)) != n:
            raise InvalidTask(f"duplicate POI ids in {ids}")
        for p in self.pois:
            if not 1 <= p.utility <= self.max_utility:
                raise InvalidTask(
                    f"{p.id}: utility {p.utility} outside [1, {self.max_utility}]"
                )
        if len(self.travel_slots) != n or any(len(r) != n for r in self.travel_slots):
            raise InvalidTask(f"travel matrix must be {n}x{n}")
        for i, row in enumerate(self.travel_slots):
            for j, d in enumerate(row):
                if i == j and d != 0:
                    raise InvalidTask(f"travel diagonal entry ({i},{i}) must be 0")
                if i != j and d < 1:
                    raise InvalidTask(f"travel entry ({i},{j}) must be >= 1 slot")
        if not 0 <= self.start_poi < n:
            raise InvalidTask(f"start_poi {self.start_poi} out of range")

    @property
    def n(self) -> int:
        return len(self.pois)

    @property
    def total_slots(self) -> int:
        return self.grid.total_slots

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.pois)

    def index(self, poi_id: str) -> int:
        for i, p in enumerate(self.pois):
            if p.id == poi_id:
                return i
        raise UnknownPoi(poi_id)

    def poi(self, poi_id: str) -> Poi:
        return self.pois[self.index(poi_id)]

    def travel(self, from_id: str, to_id: str) -> int:
        return self.travel_slots[self.index(from_id)][self.index(to_id)]

    def with_horizon(self, hours: int) -> "ItineraryTask":
        return ItineraryTask(
            self.city, self.grid.with_horizon(hours), self.pois,
            self.travel_slots, self.max_utility, self.start_poi,
        )


class StepKind(str, Enum):
    VISIT = "visit"
    MOVE = "move"


@dataclass(frozen=True)
class PlanStep:
    kind: StepKind
    poi: str
    start_slot: int
    end_slot: int
    poi_from: Optional[str] = None

    # Zero-length steps are representable so that parsed external plans can carry
    # them to the validator; the solver never emits one.
    def __post_init__(self):
        if self.start_slot < 0 or self.end_slot < self.start_slot:
            raise ValueError(f"bad slot range {self.start_slot}->{self.end_slot}")
        if (self.kind is StepKind.MOVE) != (self.poi_from is not None):
            raise ValueError("poi_from is required for Move steps and only for them")

    @property
    def duration(self) -> int:
        return self.end_slot - self.start_slot

    @classmethod
    def visit(cls, poi: str, start: int, end: int) -> "PlanStep":
        return cls(StepKind.VISIT, poi, start, end)

    @classmethod
    def move(cls, poi_from: str, poi: str, start: int, end: int) -> "PlanStep":
        return cls(StepKind.MOVE, poi, start, end, poi_from)


@dataclass(frozen=True)
class Plan:
    task_ref: str
    steps: tuple[PlanStep, ...] = ()
    visited: frozenset = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        object.__setattr__(
            self, "visited",
            frozenset(s.poi for s in self.steps if s.kind is StepKind.VISIT),
        )

    @classmethod
    def from_steps(cls, task_ref: str, steps: Iterable[PlanStep]) -> "Plan":
        return cls(task_ref, tuple(steps))

    @property
    def visit_sequence(self) -> tuple[str, ...]:
        return tuple(s.poi for s in self.steps if s.kind is StepKind.VISIT)

    @property
    def end_slot(self) -> int:
        return self.steps[-1].end_slot if self.steps else 0


def plan_utility(plan: Plan, task: ItineraryTask) -> int:
    """Sum of utilities over the distinct POIs the plan visits."""
    return sum(task.poi(pid).utility for pid in plan.visited)


# ---------------------------------------------------------------------------
# task file format

_TASK_KEYS = {
    "format", "city", "slot_minutes", "day_start", "horizon_hours",
    "max_utility", "start_poi", "pois", "travel_minutes",
}
_POI_KEYS = {"id", "name", "utility", "visit_minutes"}


def task_to_dict(task: ItineraryTask) -> dict:
    g = task.grid
    return {
        "format": TASK_FORMAT,
        "city": task.city,
        "slot_minutes": g.slot_minutes,
        "day_start": g.day_start.strftime("%H:%M"),
        "horizon_hours": g.horizon_hours,
        "max_utility": task.max_utility,
        "start_poi": task.start_poi,
        "pois": [
            {
                "id": p.id,
                "name": p.display_name,
                "utility": p.utility,
                "visit_minutes": p.visit_slots * g.slot_minutes,
            }
            for p in task.pois
        ],
        "travel_minutes": [[d * g.slot_minutes for d in row] for row in task.travel_slots],
    }


def task_from_dict(data: dict) -> ItineraryTask:
    if not isinstance(data, dict):
        raise InvalidTask("task file must hold a JSON object")
    if data.get("format") != TASK_FORMAT:
        raise InvalidTask(f"missing or unsupported format key (want {TASK_FORMAT!r})")
    unknown = set(data) - _TASK_KEYS
    if unknown:
        raise InvalidTask(f"unknown task keys: {sorted(unknown)}")
    try:
        grid = TimeGrid(
            slot_minutes=int(data.get("slot_minutes", 15)),
            day_start=parse_clock(data["day_start"]),
            horizon_hours=int(data["horizon_hours"]),
        )
        pois = []
        for entry in data["pois"]:
            extra = set(entry) - _POI_KEYS
            if extra:
                raise InvalidTask(f"unknown POI keys: {sorted(extra)}")
            pois.append(Poi(
                id=entry["id"],
                display_name=entry["name"],
                utility=int(entry["utility"]),
                visit_slots=minutes_to_slots(int(entry["visit_minutes"]), grid),
            ))
        travel = [[minutes_to_slots(int(m), grid) for m in row] for row in data["travel_minutes"]]
        return ItineraryTask(
            city=data["city"],
            grid=grid,
            pois=tuple(pois),
            travel_slots=travel,
            max_utility=int(data.get("max_utility", 10)),
            start_poi=int(data.get("start_poi", 0)),
        )
    except KeyError as exc:
        raise InvalidTask(f"missing key {exc}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidTask):
            raise
        raise InvalidTask(str(exc)) from None


def dumps_task(task: ItineraryTask) -> str:
    return json.dumps(task_to_dict(task), indent=2, ensure_ascii=False) + "\n"


def loads_task(text: str) -> ItineraryTask:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidTask(f"not valid JSON: {exc}") from None
    return task_from_dict(data)


def load_task(path: Union[str, Path]) -> ItineraryTask:
    return loads_task(Path(path).read_text(encoding="utf-8"))


def save_task(task: ItineraryTask, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps_task(task), encoding="utf-8", newline="\n")


def make_task(
    city: str,
    pois: Sequence[tuple[str, int, int]],
    travel_slots: Sequence[Sequence[int]],
    horizon_hours: int = 8,
    max_utility: int = 10,
    start_poi: int = 0,
    slot_minutes: int = 15,
) -> ItineraryTask:
    """Build a task from ``(name, utility, visit_slots)`` triples; handy in tests and scripts."""
    grid = TimeGrid(slot_minutes=slot_minutes, horizon_hours=horizon_hours)
    return ItineraryTask(
        city=city,
        grid=grid,
        pois=tuple(Poi(fold_name(name), name, u, v) for name, u, v in pois),
        travel_slots=travel_slots,
        max_utility=max_utility,
        start_poi=start_poi,
    )


def clock_minutes(t: time) -> int:
    return t.hour * 60 + t.minute
