"""Optimal single-day itinerary planning with soft-goal cost compilation."""

from .compile import CompiledTask, compile_task, total_cost
from .model import (
    ItineraryTask,
    Plan,
    PlanStep,
    Poi,
    StepKind,
    TimeGrid,
    fold_name,
    load_task,
    minutes_to_slots,
    plan_utility,
    save_task,
)
from .planner import oracle_solve, solve
from .validator import ValidationReport, validate

__all__ = [
    "CompiledTask", "ItineraryTask", "Plan", "PlanStep", "Poi", "StepKind", "TimeGrid",
    "ValidationReport", "compile_task", "fold_name", "load_task", "minutes_to_slots",
    "oracle_solve", "plan_utility", "save_task", "solve", "total_cost", "validate",
]
