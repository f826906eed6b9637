"""Plan checking: action applicability plus minimum-duration and horizon constraints."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional

from .model import ItineraryTask, Plan, StepKind


class Category(str, Enum):
    VISIT_TOO_SHORT = "VisitTooShort"
    TRAVEL_TOO_SHORT = "TravelTooShort"
    HORIZON_EXCEEDED = "HorizonExceeded"
    NOT_APPLICABLE = "NotApplicable"
    DUPLICATE_VISIT = "DuplicateVisit"
    UNKNOWN_POI = "UnknownPoi"
    BAD_CHAINING = "BadChaining"
    PARSE_ERROR = "ParseError"


DURATION_CATEGORIES = (Category.VISIT_TOO_SHORT, Category.TRAVEL_TOO_SHORT)


@dataclass(frozen=True)
class Violation:
    category: Category
    step_index: int
    detail: str
    required_slots: Optional[int] = None
    actual_slots: Optional[int] = None


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()
    starts_off_origin: bool = field(default=False, compare=False)

    @property
    def valid(self) -> bool:
        return not self.violations

    def count(self, category: Category) -> int:
        return sum(1 for v in self.violations if v.category is category)

    def counts(self) -> dict[str, int]:
        return {c.value: self.count(c) for c in Category}

    def to_text(self) -> str:
        if self.valid:
            return "VALID (0 violations)"
        lines = [f"INVALID ({len(self.violations)} violations)"]
        for v in self.violations:
            extra = ""
            if v.required_slots is not None:
                extra = f" [required {v.required_slots}, actual {v.actual_slots}]"
            lines.append(f"  step {v.step_index}: {v.category.value}: {v.detail}{extra}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "violations": [
                {
                    "category": v.category.value,
                    "step_index": v.step_index,
                    "detail": v.detail,
                    "required_slots": v.required_slots,
                    "actual_slots": v.actual_slots,
                }
                for v in self.violations
            ],
        }


def validate(plan: Plan, task: ItineraryTask) -> ValidationReport:
    """Check every step and report all violations, not just the first."""
    known = set(task.ids)
    S = task.total_slots
    out: list[Violation] = []
    here = task.pois[task.start_poi].id
    now: Optional[int] = None
    seen: set[str] = set()
    off_origin = False

    for i, step in enumerate(plan.steps):
        def add(cat, detail, req=None, act=None):
            out.append(Violation(cat, i, detail, req, act))

        if now is not None and step.start_slot != now:
            add(Category.BAD_CHAINING, f"starts at slot {step.start_slot}, previous step ended at {now}")
        if step.start_slot > S:
            add(Category.NOT_APPLICABLE, f"starts at slot {step.start_slot}, past the last slot {S}")

        names = [step.poi] if step.kind is StepKind.VISIT else [step.poi_from, step.poi]
        unknown = [p for p in names if p not in known]
        for p in unknown:
            add(Category.UNKNOWN_POI, f"{p!r} is not a POI of this task")

        if step.kind is StepKind.VISIT:
            if step.poi != here:
                add(Category.BAD_CHAINING, f"visit {step.poi} while at {here}")
                off_origin |= i == 0
            if step.poi in seen:
                add(Category.DUPLICATE_VISIT, f"{step.poi} visited again")
            seen.add(step.poi)
            if not unknown:
                need = task.poi(step.poi).visit_slots
                if step.duration < need:
                    add(Category.VISIT_TOO_SHORT, f"visit {step.poi}", need, step.duration)
        else:
            if step.poi_from != here:
                add(Category.BAD_CHAINING, f"move from {step.poi_from} while at {here}")
                off_origin |= i == 0
            if step.poi_from == step.poi:
                add(Category.BAD_CHAINING, f"move from {step.poi} to itself")
            elif not unknown:
                need = task.travel(step.poi_from, step.poi)
                if step.duration < need:
                    add(
                        Category.TRAVEL_TOO_SHORT,
                        f"move {step.poi_from} -> {step.poi}", need, step.duration,
                    )
        here = step.poi
        now = step.end_slot

    if plan.steps and plan.steps[-1].end_slot > S:
        last = len(plan.steps) - 1
        out.append(Violation(
            Category.HORIZON_EXCEEDED, last,
            f"ends at slot {plan.steps[-1].end_slot}, horizon is {S}",
            S, plan.steps[-1].end_slot,
        ))
    return ValidationReport(tuple(out), starts_off_origin=off_origin)


def violation_ratio(report: ValidationReport, task: Optional[ItineraryTask] = None) -> list[Fraction]:
    """actual / required slots for each duration violation, in report order."""
    return [
        Fraction(v.actual_slots, v.required_slots)
        for v in report.violations
        if v.category in DURATION_CATEGORIES and v.required_slots
    ]
