"""PDDL export of a compiled task and readers for the two plan grammars.

Native plans hold one grounded action per line, e.g. ``(visit eiffel_tower t0 t8 t8)``.
LLM plans hold clauses such as ``(visit place_1 9:00)`` and
``(drive place_1 to place_2 10:00)`` whose times mark when each activity ends.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from .compile import CompiledTask
from .model import (
    InvalidName,
    ItineraryTask,
    Plan,
    PlanStep,
    StepKind,
    TimeGrid,
    clock_minutes,
    fold_name,
)
from .providers import ParseError

DOMAIN_NAME = "trip-day"

DOMAIN_TEMPLATE = """\
(define (domain {name})
  (:requirements :strips :typing :action-costs)
  (:types location time)
  (:predicates
    (normal_mode)
    (end_phase)
    (current_time ?t - time)
    (visited_time ?l - location ?t - time)
    (travel_time ?from - location ?to - location ?t - time)
    (user_at ?l - location)
    (logic_sum ?t0 - time ?td - time ?tf - time)
    (visited ?l - location))
  (:functions
    (total-cost) - number
    (visit_cost ?l - location) - number
    (skip_cost ?l - location) - number)

  (:action visit
    :parameters (?vloc - location
                 ?vt0 - time
                 ?vtvisit - time
                 ?vtf - time)
    :precondition
      (and (normal_mode)
           (current_time ?vt0)
           (visited_time ?vloc ?vtvisit)
           (user_at ?vloc)
           (logic_sum ?vt0 ?vtvisit ?vtf))
    :effect
      (and (visited ?vloc)
           (not (current_time ?vt0))
           (current_time ?vtf)
           (increase (total-cost)
                     (visit_cost ?vloc))))

  (:action move
    :parameters (?mfrom - location
                 ?mto - location
                 ?mt0 - time
                 ?mtmove - time
                 ?mtf - time)
    :precondition
      (and (normal_mode)
           (current_time ?mt0)
           (travel_time ?mfrom ?mto ?mtmove)
           (user_at ?mfrom)
           (logic_sum ?mt0 ?mtmove ?mtf))
    :effect
      (and (not (user_at ?mfrom))
           (user_at ?mto)
           (not (current_time ?mt0))
           (current_time ?mtf)))

  (:action end_mode
    :parameters ()
    :precondition (normal_mode)
    :effect (and (not (normal_mode)) (end_phase)))

  (:action no_visit
    :parameters (?sloc - location)
    :precondition (end_phase)
    :effect
      (and (visited ?sloc)
           (increase (total-cost)
                     (skip_cost ?sloc))))
)
"""


@dataclass(frozen=True)
class PddlDocumentPair:
    domain_text: str
    problem_text: str

    def write(self, out_dir: Union[str, Path], task_name: str) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        dom = out / f"{task_name}-domain.pddl"
        prob = out / f"{task_name}-problem.pddl"
        dom.write_text(self.domain_text, encoding="utf-8", newline="\n")
        prob.write_text(self.problem_text, encoding="utf-8", newline="\n")
        return dom, prob


def _slot(t: int) -> str:
    return f"t{t}"


def emit_pddl(compiled: CompiledTask, problem_name: Optional[str] = None) -> PddlDocumentPair:
    task = compiled.task
    S = task.total_slots
    ids = task.ids
    name = problem_name or fold_name(task.city or "task")
    lines = [
        f"(define (problem {name})",
        f"  (:domain {DOMAIN_NAME})",
        "  (:objects",
        "    " + " ".join(ids) + " - location",
        "    " + " ".join(_slot(t) for t in range(S + 1)) + " - time)",
        "  (:init",
        "    (normal_mode)",
        f"    (current_time {_slot(0)})",
        f"    (user_at {ids[task.start_poi]})",
        "    (= (total-cost) 0)",
    ]
    for i, p in enumerate(task.pois):
        lines.append(f"    (= (visit_cost {p.id}) {compiled.visit_cost[i]})")
        lines.append(f"    (= (skip_cost {p.id}) {compiled.skip_cost[i]})")
    for p in task.pois:
        if p.visit_slots <= S:
            lines.append(f"    (visited_time {p.id} {_slot(p.visit_slots)})")
    for i, a in enumerate(ids):
        for j, b in enumerate(ids):
            d = task.travel_slots[i][j]
            if i != j and d <= S:
                lines.append(f"    (travel_time {a} {b} {_slot(d)})")
    for t0, d, tf in compiled.sum_facts():
        lines.append(f"    (logic_sum {_slot(t0)} {_slot(d)} {_slot(tf)})")
    lines.append("  )")
    lines.append("  (:goal (and " + " ".join(f"(visited {pid})" for pid in ids) + "))")
    lines.append("  (:metric minimize (total-cost))")
    lines.append(")")
    return PddlDocumentPair(DOMAIN_TEMPLATE.format(name=DOMAIN_NAME), "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# minimal s-expression reader for our own emitted subset


def read_sexpr(text: str) -> list:
    """Parse PDDL text into nested lists of lowercase atoms; raises ParseError on imbalance."""
    tokens = re.findall(r"\(|\)|[^\s()]+", re.sub(r";[^\n]*", "", text))
    stack: list[list] = [[]]
    for tok in tokens:
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise ParseError("unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok.lower())
    if len(stack) != 1:
        raise ParseError("unbalanced '('")
    return stack[0]


def _section(form: list, key: str) -> list:
    for item in form:
        if isinstance(item, list) and item and item[0] == key:
            return item
    raise ParseError(f"section {key} not found")


def read_domain(text: str) -> dict:
    """Extract domain name, predicate names and action schemas from emitted domain text."""
    forms = read_sexpr(text)
    if len(forms) != 1 or forms[0][:1] != ["define"]:
        raise ParseError("expected a single (define ...) form")
    d = forms[0]
    actions = {}
    for item in d:
        if isinstance(item, list) and item and item[0] == ":action":
            body = dict(zip(item[2::2], item[3::2]))
            pre = body.get(":precondition", [])
            pre_list = pre[1:] if pre and pre[0] == "and" else [pre]
            actions[item[1]] = {
                "parameters": [x for x in body.get(":parameters", []) if x.startswith("?")],
                "precondition": [p[0] for p in pre_list if p],
                "effect": body.get(":effect", []),
            }
    return {
        "name": _section(d, "domain")[1],
        "predicates": [p[0] for p in _section(d, ":predicates")[1:]],
        "actions": actions,
    }


def read_problem(text: str) -> dict:
    forms = read_sexpr(text)
    if len(forms) != 1 or forms[0][:1] != ["define"]:
        raise ParseError("expected a single (define ...) form")
    d = forms[0]
    objects: dict[str, list[str]] = {}
    pending: list[str] = []
    objs = _section(d, ":objects")[1:]
    k = 0
    while k < len(objs):
        if objs[k] == "-":
            objects.setdefault(objs[k + 1], []).extend(pending)
            pending = []
            k += 2
        else:
            pending.append(objs[k])
            k += 1
    init = _section(d, ":init")[1:]
    facts = [f for f in init if f and f[0] != "="]
    fluents = {tuple(f[1]): int(f[2]) for f in init if f and f[0] == "="}
    goal = _section(d, ":goal")[1]
    return {
        "name": _section(d, "problem")[1],
        "domain": _section(d, ":domain")[1],
        "objects": objects,
        "facts": facts,
        "fluents": fluents,
        "goal": goal[1:] if goal[0] == "and" else [goal],
        "metric": _section(d, ":metric")[1:],
    }


# ---------------------------------------------------------------------------
# native plan grammar


def render_plan_native(plan: Plan, task: ItineraryTask, terminal: bool = True) -> str:
    lines = []
    for s in plan.steps:
        if s.kind is StepKind.VISIT:
            lines.append(f"(visit {s.poi} {_slot(s.start_slot)} {_slot(s.duration)} {_slot(s.end_slot)})")
        else:
            lines.append(
                f"(move {s.poi_from} {s.poi} {_slot(s.start_slot)} {_slot(s.duration)} {_slot(s.end_slot)})"
            )
    if terminal:
        lines.append("(end_mode)")
        lines.extend(f"(no_visit {pid})" for pid in task.ids if pid not in plan.visited)
    return "\n".join(lines) + "\n"


_SLOT_TOKEN = re.compile(r"t(\d+)")


def parse_plan_native(text: str, task: ItineraryTask, task_ref: str = "") -> Plan:
    S = task.total_slots

    def slot(tok: str, lineno: int) -> int:
        m = _SLOT_TOKEN.fullmatch(tok)
        if not m or int(m.group(1)) > S:
            raise ParseError(f"line {lineno}: unknown time object {tok!r}")
        return int(m.group(1))

    steps: list[PlanStep] = []
    skipped: list[str] = []
    ended = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        m = re.fullmatch(r"\(\s*([^()]*?)\s*\)", line)
        if not m:
            raise ParseError(f"line {lineno}: malformed action {raw!r}")
        parts = m.group(1).lower().split()
        if not parts:
            raise ParseError(f"line {lineno}: empty action")
        op, args = parts[0], parts[1:]
        if op == "end_mode" and not args:
            if ended:
                raise ParseError(f"line {lineno}: repeated end_mode")
            ended = True
        elif op == "no_visit" and len(args) == 1:
            if not ended:
                raise ParseError(f"line {lineno}: no_visit before end_mode")
            skipped.append(args[0])
        elif op == "visit" and len(args) == 4:
            if ended:
                raise ParseError(f"line {lineno}: visit after end_mode")
            t0, d, tf = (slot(a, lineno) for a in args[1:])
            if t0 + d != tf:
                raise ParseError(f"line {lineno}: {args[1]} + {args[2]} != {args[3]}")
            steps.append(PlanStep.visit(args[0], t0, tf))
        elif op == "move" and len(args) == 5:
            if ended:
                raise ParseError(f"line {lineno}: move after end_mode")
            t0, d, tf = (slot(a, lineno) for a in args[2:])
            if t0 + d != tf:
                raise ParseError(f"line {lineno}: {args[2]} + {args[3]} != {args[4]}")
            steps.append(PlanStep.move(args[0], args[1], t0, tf))
        else:
            raise ParseError(f"line {lineno}: unrecognised action {raw.strip()!r}")

    plan = Plan(task_ref or task.city, tuple(steps))
    if len(set(skipped)) != len(skipped):
        raise ParseError("no_visit repeated for the same POI")
    if set(skipped) & plan.visited:
        raise ParseError(f"no_visit for visited POIs {sorted(set(skipped) & plan.visited)}")
    if ended and set(skipped) != set(task.ids) - plan.visited:
        raise ParseError("no_visit lines do not cover exactly the unvisited POIs")
    return plan


# ---------------------------------------------------------------------------
# LLM clock-time grammar

_CLAUSE = re.compile(r"\(([^()]*)\)")
_CLOCK = re.compile(
    r"(?P<h>\d{1,2})\s*[:.h]\s*(?P<m>\d{2})\s*(?P<ampm>[ap]\.?\s?m\.?)?\s*$", re.IGNORECASE
)


def match_poi(token: str, task: ItineraryTask) -> str:
    """Map a free-text POI token to a task id: exact fold, then unique prefix; else the folded token."""
    try:
        key = fold_name(token)
    except InvalidName:
        return token.strip() or "?"
    ids = task.ids
    if key in ids:
        return key
    hits = [pid for pid in ids if pid.startswith(key)]
    if len(hits) == 1:
        return hits[0]
    return key


def _clock(m: re.Match) -> tuple[int, bool]:
    hour, minute = int(m.group("h")), int(m.group("m"))
    ampm = m.group("ampm")
    if ampm:
        pm = ampm.lower().startswith("p")
        hour = hour % 12 + (12 if pm else 0)
    return hour * 60 + minute, bool(ampm)


def parse_plan_llm(
    text: str, task: ItineraryTask, grid: Optional[TimeGrid] = None, task_ref: str = ""
) -> Plan:
    """Convert an LLM itinerary into a plan on the task's slot grid.

    Each clause's time is when that activity ends; the first starts at the grid's
    day start. Ends snap to the nearest slot (halves round up). A time that goes
    backwards yields a zero-length step for the validator to flag.
    """
    grid = grid or task.grid
    day0 = clock_minutes(grid.day_start)
    step_min = grid.slot_minutes
    steps: list[PlanStep] = []
    prev_min = day0
    cur = 0
    for m in _CLAUSE.finditer(text):
        body = " ".join(m.group(1).split())
        kw = re.match(r"(?i)(visit|drive|move|travel)\s+(.*)$", body)
        if not kw:
            continue
        rest = kw.group(2)
        cm = _CLOCK.search(rest)
        if not cm:
            continue
        target = rest[: cm.start()].strip()
        minutes, explicit = _clock(cm)
        # A bare 12-hour time before the day even starts ("1:30" after "11:30")
        # must be afternoon; anything else going backwards is taken at face value.
        if not explicit and minutes < day0 and minutes + 720 >= prev_min:
            minutes += 720
        prev_min = max(prev_min, minutes)
        offset = minutes - day0
        end = (2 * offset + step_min) // (2 * step_min) if offset > 0 else 0
        end = max(end, cur)
        if kw.group(1).lower() == "visit":
            if not target:
                continue
            steps.append(PlanStep.visit(match_poi(target, task), cur, end))
        else:
            pair = re.match(r"(?i)(?:from\s+)?(.+?)\s+to\s+(.+)$", target)
            if not pair:
                continue
            steps.append(PlanStep.move(match_poi(pair.group(1), task), match_poi(pair.group(2), task), cur, end))
        cur = end
    if not steps:
        raise ParseError("no visit/drive clauses found")
    return Plan(task_ref or task.city, tuple(steps))
