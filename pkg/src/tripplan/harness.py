"""Benchmark harness: instance suites, evaluation records and the metrics CSV."""

from __future__ import annotations

import csv
import io
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .compile import compile_task
from .model import InvalidTask, ItineraryTask, load_task, plan_utility, save_task
from .pddl import parse_plan_llm, parse_plan_native
from .planner import ORACLE_MAX_POIS, ResourceExhausted, oracle_solve, solve
from .providers import (
    ParseError,
    ProviderRequest,
    UnknownFixture,
    build_task,
    fixture_provider,
    synthetic_provider,
)
from .validator import Category, ValidationReport, validate

POPULAR_CITIES = (
    "Tokyo", "Paris", "Barcelona", "New York City", "London",
    "Cape Town", "Amsterdam", "Toronto", "Rome", "Berlin",
)
LESS_POPULAR_CITIES = (
    "Cienfuegos, Cuba", "Yogyakarta, Indonesia", "Matera, Italy", "Luang Prabang, Laos",
    "Salzburg, Austria", "Valparaiso, Chile", "Zadar, Croatia", "Bergen, Norway",
    "Hoi An, Vietnam", "Colonia del Sacramento, Uruguay",
)
DEFAULT_CITIES = POPULAR_CITIES + LESS_POPULAR_CITIES
SWEEP_CITIES = ("Paris", "Rome")
POI_SWEEP = tuple(range(8, 19, 2))
HOUR_SWEEP = tuple(range(6, 11))

CSV_HEADER = (
    "task_id", "method", "valid", "utility", "reported_utility", "suboptimality",
    "runtime_seconds", "visit_short", "travel_short", "horizon_exceeded", "pois_visited",
)

EXIT_OK, EXIT_INVALID, EXIT_ERROR = 0, 1, 2


@dataclass
class EvalRecord:
    task_id: str
    method: str
    valid: bool
    utility: Optional[int]
    reported_utility: Optional[int]
    suboptimality: Optional[Fraction]
    runtime_seconds: float
    violation_counts: dict[str, int] = field(default_factory=dict)
    pois_visited: int = 0
    error: Optional[str] = None
    starts_off_origin: bool = False

    def row(self) -> list[str]:
        def fmt(x):
            return "" if x is None else str(x)

        sub = "" if self.suboptimality is None else f"{float(self.suboptimality):.6f}"
        vc = self.violation_counts
        return [
            self.task_id, self.method, "true" if self.valid else "false",
            fmt(self.utility), fmt(self.reported_utility), sub,
            f"{self.runtime_seconds:.6f}",
            str(vc.get(Category.VISIT_TOO_SHORT.value, 0)),
            str(vc.get(Category.TRAVEL_TOO_SHORT.value, 0)),
            str(vc.get(Category.HORIZON_EXCEEDED.value, 0)),
            str(self.pois_visited),
        ]


def task_label(city: str, index: int, n_pois: int) -> str:
    return f"{city.replace(' ', '_')}_{index}_POI_{n_pois}"


def derive_seed(seed: int, city_index: int, task_index: int) -> int:
    return int(np.random.SeedSequence([seed, city_index, task_index]).generate_state(1)[0])


def make_suite_task(
    city: str, city_index: int, k: int, n_pois: int, hours: int, seed: int,
    max_utility: int = 10, use_fixtures: bool = True,
) -> ItineraryTask:
    if use_fixtures:
        try:
            raw = fixture_provider(city)
        except UnknownFixture:
            raw = None
        if raw is not None and len(raw.poi_names) == n_pois:
            return build_task(raw, horizon_hours=hours)
    req = ProviderRequest(city, n_pois, hours, derive_seed(seed, city_index, k))
    return build_task(synthetic_provider(req, max_utility), horizon_hours=hours, max_utility=max_utility)


def gen_suite(
    out_dir: Union[str, Path],
    cities: Sequence[str] = DEFAULT_CITIES,
    per_city: int = 5,
    n_pois: int = 10,
    hours: int = 8,
    seed: int = 0,
    max_utility: int = 10,
    force: bool = False,
    use_fixtures: bool = True,
) -> list[Path]:
    """Write ``per_city`` task files for every city; refuses to overwrite without ``force``."""
    if per_city < 1:
        raise ValueError("per_city must be >= 1")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = []
    for ci, city in enumerate(cities):
        for k in range(per_city):
            path = out / f"{task_label(city, k, n_pois)}.json"
            if path.exists() and not force:
                raise FileExistsError(f"{path} exists (use force to overwrite)")
            jobs.append((path, city, ci, k))
    written = []
    for path, city, ci, k in jobs:
        task = make_suite_task(city, ci, k, n_pois, hours, seed, max_utility, use_fixtures)
        save_task(task, path)
        written.append(path)
    return written


def gen_sweep(
    out_dir: Union[str, Path], kind: str, cities: Sequence[str] = SWEEP_CITIES,
    per_city: int = 5, seed: int = 0, force: bool = False, max_utility: int = 10,
) -> list[Path]:
    """POI sweep: N = 8..18 step 2 at H = 8. Hour sweep: H = 6..10 at N = 10."""
    out = Path(out_dir)
    written = []
    if kind == "pois":
        for n in POI_SWEEP:
            written += gen_suite(out / f"pois_{n}", cities, per_city, n, 8, seed, max_utility, force)
    elif kind == "hours":
        for h in HOUR_SWEEP:
            written += gen_suite(out / f"hours_{h}", cities, per_city, 10, h, seed, max_utility, force)
    else:
        raise ValueError(f"unknown sweep {kind!r}")
    return written


def optimum_utility(task: ItineraryTask, heuristic_name: str = "h0") -> int:
    if task.n <= ORACLE_MAX_POIS:
        return oracle_solve(task)[0]
    return plan_utility(solve(compile_task(task), heuristic_name), task)


def suboptimality_ratio(optimum: int, utility: int) -> Optional[Fraction]:
    if utility > 0:
        return Fraction(optimum, utility)
    return Fraction(1) if optimum == 0 else None


def _record(task_id, method, task, plan, report: ValidationReport, runtime, placeholder, optimum):
    u = plan_utility(plan, task) if report.valid else _safe_utility(plan, task)
    sub = suboptimality_ratio(optimum, u) if (report.valid and optimum is not None) else None
    return EvalRecord(
        task_id=task_id,
        method=method,
        valid=report.valid,
        utility=u,
        reported_utility=u if report.valid else placeholder,
        suboptimality=sub,
        runtime_seconds=runtime,
        violation_counts=report.counts(),
        pois_visited=len(plan.visited),
        starts_off_origin=report.starts_off_origin,
    )


def _safe_utility(plan, task) -> int:
    known = set(task.ids)
    return sum(task.poi(p).utility for p in plan.visited if p in known)


def eval_plan(
    task_file: Union[str, Path],
    plan_file: Union[str, Path],
    grammar: str = "native",
    placeholder: int = 21,
    optimum: Optional[int] = None,
) -> EvalRecord:
    task_id = Path(task_file).stem
    task = load_task(task_file)
    t0 = time.perf_counter()
    try:
        text = Path(plan_file).read_text(encoding="utf-8", errors="replace")
        if grammar == "native":
            plan = parse_plan_native(text, task, task_id)
        elif grammar == "llm":
            plan = parse_plan_llm(text, task, task_ref=task_id)
        else:
            raise ValueError(f"unknown grammar {grammar!r}")
    except ParseError as exc:
        return EvalRecord(
            task_id, "external", False, None, placeholder, None,
            time.perf_counter() - t0, {Category.PARSE_ERROR.value: 1}, 0, error=str(exc),
        )
    report = validate(plan, task)
    if optimum is None and report.valid:
        optimum = optimum_utility(task)
    return _record(task_id, "external", task, plan, report, time.perf_counter() - t0, placeholder, optimum)


def run_task(
    path: Union[str, Path], methods: Sequence[str] = ("optimal",), heuristic_name: str = "h0",
    placeholder: int = 21, plans_dir: Optional[Union[str, Path]] = None,
    node_limit: Optional[int] = None,
) -> list[EvalRecord]:
    path = Path(path)
    task_id = path.stem
    try:
        task = load_task(path)
    except (InvalidTask, OSError, UnicodeDecodeError) as exc:
        return [EvalRecord(task_id, methods[0] if methods else "optimal", False, None, None, None,
                           0.0, {}, 0, error=f"task: {exc}")]
    records = []
    optimum = None
    for method in methods:
        t0 = time.perf_counter()
        if method == "optimal":
            kw = {} if node_limit is None else {"node_limit": node_limit}
            try:
                plan = solve(compile_task(task), heuristic_name, task_ref=task_id, **kw)
            except ResourceExhausted as exc:
                records.append(EvalRecord(task_id, method, False, None, None, None,
                                          time.perf_counter() - t0, {}, 0, error=f"ResourceExhausted: {exc}"))
                continue
            rt = time.perf_counter() - t0
            report = validate(plan, task)
            optimum = plan_utility(plan, task)
            records.append(_record(task_id, method, task, plan, report, rt, placeholder, optimum))
        elif method == "oracle":
            if task.n > ORACLE_MAX_POIS:
                continue
            u, plan = oracle_solve(task, task_id)
            rt = time.perf_counter() - t0
            optimum = u if optimum is None else optimum
            records.append(_record(task_id, method, task, plan, validate(plan, task), rt, placeholder, optimum))
        elif method == "external":
            if plans_dir is None:
                continue
            for grammar, suffix in (("native", ".plan"), ("llm", ".llm.txt")):
                pf = Path(plans_dir) / f"{task_id}{suffix}"
                if pf.exists():
                    records.append(eval_plan(path, pf, grammar, placeholder,
                                             optimum if optimum is not None else None))
                    break
        else:
            raise ValueError(f"unknown method {method!r}")
    return records


def run_suite(
    suite_dir: Union[str, Path],
    methods: Sequence[str] = ("optimal",),
    heuristic_name: str = "h0",
    placeholder: int = 21,
    plans_dir: Optional[Union[str, Path]] = None,
    jobs: int = 1,
    node_limit: Optional[int] = None,
) -> list[EvalRecord]:
    files = sorted(Path(suite_dir).glob("*.json"))
    args = [(f, tuple(methods), heuristic_name, placeholder, plans_dir, node_limit) for f in files]
    if jobs > 1 and len(files) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_task_star, args))
    else:
        results = [_run_task_star(a) for a in args]
    return [r for recs in results for r in recs]


def _run_task_star(args):
    return run_task(*args)


def write_csv(records: Iterable[EvalRecord], out=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow(r.row())
    text = buf.getvalue()
    if out is not None:
        Path(out).write_text(text, encoding="utf-8")
    return text


def _mean_std(xs: Sequence[float]) -> tuple[Optional[float], Optional[float]]:
    if not xs:
        return None, None
    return statistics.fmean(xs), (statistics.pstdev(xs) if len(xs) > 1 else 0.0)


def summarize(records: Sequence[EvalRecord]) -> dict[str, dict]:
    out: dict[str, dict] = {}
    for method in sorted({r.method for r in records}):
        rows = [r for r in records if r.method == method]
        ok = [r for r in rows if r.error is None]
        utils = [r.reported_utility for r in ok if r.reported_utility is not None]
        subs = [float(r.suboptimality) for r in ok if r.suboptimality is not None]
        mu, sd = _mean_std(utils)
        out[method] = {
            "rows": len(rows),
            "errors": len(rows) - len(ok),
            "validity_rate": (sum(r.valid for r in ok) / len(ok)) if ok else None,
            "utility_mean": mu,
            "utility_std": sd,
            "suboptimality_mean": statistics.fmean(subs) if subs else None,
            "pois_visited_mean": statistics.fmean([r.pois_visited for r in ok]) if ok else None,
            "starts_off_origin": sum(r.starts_off_origin for r in ok),
        }
    return out


def format_summary(summary: dict[str, dict]) -> str:
    def f(x, spec=".3f"):
        return "n/a" if x is None else format(x, spec)

    lines = []
    for method, s in summary.items():
        lines.append(
            f"{method}: rows={s['rows']} errors={s['errors']} validity={f(s['validity_rate'])} "
            f"utility={f(s['utility_mean'], '.2f')}±{f(s['utility_std'], '.2f')} "
            f"suboptimality={f(s['suboptimality_mean'])} pois_visited={f(s['pois_visited_mean'], '.2f')}"
        )
    return "\n".join(lines)


def exit_code(records: Sequence[EvalRecord]) -> int:
    if any(r.error is not None for r in records):
        return EXIT_ERROR
    if any(not r.valid for r in records):
        return EXIT_INVALID
    return EXIT_OK
