"""Sources of travel information.

Every provider hands back a :class:`RawTravelInfo`. ``build_task`` turns one
into an :class:`~tripplan.model.ItineraryTask` on a given time grid.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from datetime import time
from importlib import resources
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .model import (
    InvalidName,
    ItineraryTask,
    Poi,
    TimeGrid,
    fold_name,
    loads_task,
    minutes_to_slots,
    task_from_dict,
)


class ParseError(ValueError):
    pass


class ProviderUnavailable(RuntimeError):
    pass


class ProviderParseError(ValueError):
    def __init__(self, message: str, raw: str):
        super().__init__(message)
        self.raw = raw


class UnknownFixture(KeyError):
    pass


class IncompleteInfo(ValueError):
    def __init__(self, gaps: Sequence[str]):
        super().__init__("missing travel information: " + "; ".join(gaps))
        self.gaps = list(gaps)


@dataclass(frozen=True)
class ProviderRequest:
    city: str
    n_pois: int = 10
    horizon_hours: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.n_pois < 1 or self.horizon_hours < 1:
            raise ValueError("n_pois and horizon_hours must be >= 1")


@dataclass
class RawTravelInfo:
    poi_names: list[str]
    ratings: dict[str, int]
    visit_minutes: dict[str, int]
    travel_minutes: dict[tuple[str, str], int]
    rating_scale: int = 10
    city: str = ""

    def check(self) -> None:
        """Raise ``ProviderParseError`` unless the maps are keyed exactly by ``poi_names``."""
        names = set(self.poi_names)
        problems = []
        if len(names) != len(self.poi_names):
            problems.append("duplicate POI names")
        for label, keys in (("ratings", self.ratings), ("visit_minutes", self.visit_minutes)):
            if set(keys) != names:
                problems.append(f"{label} keys differ from POI names")
        for a, b in self.travel_minutes:
            if a not in names or b not in names:
                problems.append(f"travel entry ({a}, {b}) names an unknown POI")
                break
        for name, r in self.ratings.items():
            if not 1 <= r <= self.rating_scale:
                problems.append(f"rating {r} for {name} outside 1..{self.rating_scale}")
        for name, m in self.visit_minutes.items():
            if m <= 0 or m % 15:
                problems.append(f"visit time {m} for {name} is not a positive multiple of 15")
        if problems:
            raise ProviderParseError("; ".join(problems), raw=repr(self))


# ---------------------------------------------------------------------------
# reply parsers

_ENUM_PREFIX = re.compile(r"^\s*(?:\d+\s*[.)\-:]\s*|[-*•]\s+)")


def parse_poi_list(text: str) -> list[str]:
    names = []
    for part in re.split(r"[,\n]", text):
        part = _ENUM_PREFIX.sub("", part).strip().strip("*").strip()
        part = part.rstrip(".").strip()
        if part:
            names.append(part)
    if not names:
        raise ParseError("no POI names found")
    return names


_KV_LINE = re.compile(r"^\s*(?:[-*]\s*)?(?P<name>[^=]+?)\s*=\s*(?P<value>\d+)\s*(?P<suffix>[A-Za-z.]*)\s*$")


def parse_kv_lines(text: str, unit_suffix: Optional[str] = None) -> dict[str, int]:
    """Parse ``name = k [suffix]`` lines; other lines are ignored.

    With ``unit_suffix`` set, a trailing word is accepted only if it starts
    with that suffix's stem (``"minutes"`` also admits ``"mins"``/``"min"``).
    """
    out: dict[str, int] = {}
    for line in text.splitlines():
        m = _KV_LINE.match(line)
        if not m:
            continue
        suffix = m.group("suffix").lower().rstrip(".")
        if suffix:
            if unit_suffix is None or not unit_suffix.lower().startswith(suffix[:3]):
                continue
        out[m.group("name").strip().strip("*").strip()] = int(m.group("value"))
    if not out:
        raise ParseError("no 'name = value' entries found")
    return out


# City suffixes (", Paris") are optional on both names.
_TRAVEL_LINE = re.compile(
    r"travel\s+time\s+from\s+(?P<a>[^,]+?)(?:,[^,]*?)?\s+to\s+(?P<b>[^,]+?)(?:,[^,]*?)?"
    r"\s+is\s+(?P<k>\d+)\s*min",
    re.IGNORECASE,
)


def _strip_city(name: str) -> str:
    return name.split(",", 1)[0].strip()


def parse_travel_lines(text: str) -> dict[tuple[str, str], int]:
    """Parse ``Travel time from A, City to B, City is k mins`` lines into folded-id pairs."""
    out: dict[tuple[str, str], int] = {}
    for line in text.splitlines():
        m = _TRAVEL_LINE.search(line)
        if not m:
            continue
        try:
            a = fold_name(_strip_city(m.group("a")))
            b = fold_name(_strip_city(m.group("b")))
        except InvalidName:
            continue
        out[(a, b)] = int(m.group("k"))
    if not out:
        raise ParseError("no travel-time lines found")
    return out


# ---------------------------------------------------------------------------
# fixture provider

FIXTURE_PACKAGE = "tripplan.fixtures"


def fixture_path(city: str) -> Path:
    name = fold_name(city) + ".json"
    ref = resources.files(FIXTURE_PACKAGE).joinpath(name)
    if not ref.is_file():
        raise UnknownFixture(city)
    return Path(str(ref))


def fixture_cities() -> list[str]:
    return sorted(
        p.name[:-5] for p in resources.files(FIXTURE_PACKAGE).iterdir()
        if p.name.endswith(".json")
    )


def fixture_provider(city: str) -> RawTravelInfo:
    """Verbatim fixture data for a city (raw minutes, not slot-rounded)."""
    data = json.loads(fixture_path(city).read_text(encoding="utf-8"))
    task_from_dict(data)  # format check only
    names = [p["name"] for p in data["pois"]]
    matrix = data["travel_minutes"]
    raw = RawTravelInfo(
        poi_names=names,
        ratings={p["name"]: p["utility"] for p in data["pois"]},
        visit_minutes={p["name"]: p["visit_minutes"] for p in data["pois"]},
        travel_minutes={
            (a, b): matrix[i][j]
            for i, a in enumerate(names) for j, b in enumerate(names) if i != j
        },
        rating_scale=data["max_utility"],
        city=data["city"],
    )
    raw.check()
    return raw


def fixture_task(city: str) -> ItineraryTask:
    return loads_task(fixture_path(city).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# synthetic provider

TRAVEL_CHOICES = (15, 30, 45, 60)
VISIT_CHOICES = tuple(range(30, 181, 15))


def synthetic_provider(request: ProviderRequest, max_utility: int = 10) -> RawTravelInfo:
    rng = np.random.default_rng(request.seed)
    n = request.n_pois
    names = [f"poi_{i + 1:02d}" for i in range(n)]
    ratings = rng.integers(1, max_utility + 1, size=n)
    visits = rng.choice(VISIT_CHOICES, size=n)
    travel = rng.choice(TRAVEL_CHOICES, size=(n, n))
    return RawTravelInfo(
        poi_names=names,
        ratings={a: int(r) for a, r in zip(names, ratings)},
        visit_minutes={a: int(v) for a, v in zip(names, visits)},
        travel_minutes={
            (a, b): int(travel[i, j])
            for i, a in enumerate(names) for j, b in enumerate(names) if i != j
        },
        rating_scale=max_utility,
        city=request.city,
    )


# ---------------------------------------------------------------------------
# LLM provider

POI_PROMPT = (
    "Give me a list of {n} tourist points of interest by their full name for the city of {city}. "
    "Present it as a comma separated list of places like placeA, place B, place C. No numbers."
)
RATING_PROMPT = (
    "Given, this information, for the places mentioned, assign a number from 1 to {scale} based on "
    "how popular they are for tourists. For example location one = 2 \n location two = 4 \n "
    "location three = 1 ... put each entry on a new line"
)
VISIT_PROMPT = (
    "For the places and popularity mentioned, assign the amount of time one should spend at each "
    "of the locations. The amount of time should be in chunks of 15 minutes, and give the time in "
    "minutes not hours.For example location one = 15 minutes \n location two = 30 minutes \n "
    "location three = 75 minutes ... put each entry on a new line"
)
TRAVEL_PROMPT = (
    "For every ordered pair of the places mentioned, give the travel time between them in minutes. "
    "Use exactly one line per pair in the form: Travel time from place one, {city} to place two, "
    "{city} is 8 mins"
)

Transport = Callable[[list[dict]], str]


@dataclass
class EndpointConfig:
    url: str
    api_key: str = ""
    model: str = "gpt-4"
    timeout: float = 120.0
    temperature: float = 0.0

    @classmethod
    def from_env(cls) -> "EndpointConfig":
        url = os.environ.get("TRIP_LLM_ENDPOINT")
        if not url:
            raise ProviderUnavailable("TRIP_LLM_ENDPOINT is not set")
        return cls(
            url=url,
            api_key=os.environ.get("TRIP_LLM_KEY", ""),
            model=os.environ.get("TRIP_LLM_MODEL", "gpt-4"),
        )


class HttpTransport:
    """POSTs an OpenAI-style chat-completion payload and returns the reply text."""

    def __init__(self, config: EndpointConfig, client=None):
        self.config = config
        self._client = client

    def __call__(self, messages: list[dict]) -> str:
        import httpx

        cfg = self.config
        payload = {"model": cfg.model, "messages": messages, "temperature": cfg.temperature}
        headers = {"Content-Type": "application/json"}
        if cfg.api_key:
            headers["Authorization"] = f"Bearer {cfg.api_key}"
        client = self._client or httpx.Client(timeout=cfg.timeout)
        try:
            resp = client.post(cfg.url, headers=headers, json=payload)
            resp.raise_for_status()
            if not resp.content:
                raise ProviderUnavailable("endpoint returned an empty body")
            data = resp.json()
            content = data["choices"][0]["message"].get("content") or ""
        except ProviderUnavailable:
            raise
        except (httpx.HTTPError, ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderUnavailable(f"chat endpoint failed: {exc}") from exc
        finally:
            if self._client is None:
                client.close()
        if not content.strip():
            raise ProviderUnavailable("endpoint returned an empty reply")
        return content


@dataclass
class Transcript:
    records: list[dict] = field(default_factory=list)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Transcript":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, list) or not all(
            isinstance(r, dict) and set(r) == {"prompt", "response"} for r in data
        ):
            raise ValueError("transcript must be a list of {prompt, response} records")
        return cls(list(data))

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(
            json.dumps(self.records, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )


class ReplayTransport:
    """Serves recorded responses in order, checking each prompt matches the recording."""

    def __init__(self, transcript: Transcript):
        self.records = list(transcript.records)
        self.pos = 0

    def __call__(self, messages: list[dict]) -> str:
        if self.pos >= len(self.records):
            raise ProviderUnavailable("transcript exhausted")
        rec = self.records[self.pos]
        prompt = messages[-1]["content"]
        if rec["prompt"] != prompt:
            raise ProviderUnavailable(f"transcript prompt mismatch at record {self.pos}")
        self.pos += 1
        return rec["response"]


class RecordingTransport:
    def __init__(self, inner: Transport):
        self.inner = inner
        self.transcript = Transcript()

    def __call__(self, messages: list[dict]) -> str:
        reply = self.inner(messages)
        self.transcript.records.append({"prompt": messages[-1]["content"], "response": reply})
        return reply


def _ask(transport: Transport, messages: list[dict], prompt: str, parse, retries: int = 2):
    last = ""
    for _ in range(retries + 1):
        reply = transport(messages + [{"role": "user", "content": prompt}])
        if not isinstance(reply, str) or not reply.strip():
            raise ProviderUnavailable("empty reply from chat endpoint")
        last = reply
        try:
            value = parse(reply)
        except ParseError:
            continue
        messages.append({"role": "user", "content": prompt})
        messages.append({"role": "assistant", "content": reply})
        return value
    raise ProviderParseError(f"could not parse reply after {retries} retries", raw=last)


def llm_provider(
    request: ProviderRequest,
    config: Optional[EndpointConfig] = None,
    transport: Optional[Transport] = None,
    rating_scale: int = 5,
) -> RawTravelInfo:
    """Query a chat endpoint with four chained prompts; each reply joins the next call's context."""
    if transport is None:
        transport = HttpTransport(config or EndpointConfig.from_env())
    messages: list[dict] = []
    city = request.city
    names = _ask(transport, messages, POI_PROMPT.format(n=request.n_pois, city=city), parse_poi_list)
    ratings = _ask(transport, messages, RATING_PROMPT.format(scale=rating_scale), parse_kv_lines)
    visits = _ask(
        transport, messages, VISIT_PROMPT, lambda s: parse_kv_lines(s, unit_suffix="minutes")
    )
    travel = _ask(transport, messages, TRAVEL_PROMPT.format(city=city), parse_travel_lines)

    def key(name):
        try:
            return fold_name(name)
        except InvalidName:
            return None

    by_id = {key(name): name for name in names}
    by_id.pop(None, None)
    raw = RawTravelInfo(
        poi_names=names,
        ratings={by_id[key(k)]: v for k, v in ratings.items() if key(k) in by_id},
        visit_minutes={by_id[key(k)]: v for k, v in visits.items() if key(k) in by_id},
        travel_minutes={
            (by_id[a], by_id[b]): v for (a, b), v in travel.items() if a in by_id and b in by_id
        },
        rating_scale=rating_scale,
        city=city,
    )
    raw.check()
    return raw


# ---------------------------------------------------------------------------
# task construction


def build_task(
    raw: RawTravelInfo,
    horizon_hours: int = 8,
    max_utility: Optional[int] = None,
    slot_minutes: int = 15,
    day_start: time = time(8, 0),
) -> ItineraryTask:
    """Fold names to ids, round minutes up to slots, and start at the first listed POI."""
    grid = TimeGrid(slot_minutes=slot_minutes, day_start=day_start, horizon_hours=horizon_hours)
    names = raw.poi_names
    gaps = []
    for a in names:
        if a not in raw.ratings:
            gaps.append(f"rating for {a}")
        if a not in raw.visit_minutes:
            gaps.append(f"visit time for {a}")
    for a in names:
        for b in names:
            if a != b and (a, b) not in raw.travel_minutes:
                gaps.append(f"travel {a} -> {b}")
    if gaps:
        raise IncompleteInfo(gaps)
    pois = tuple(
        Poi(fold_name(a), a, raw.ratings[a], minutes_to_slots(raw.visit_minutes[a], grid))
        for a in names
    )
    travel = [
        [0 if a == b else minutes_to_slots(raw.travel_minutes[(a, b)], grid) for b in names]
        for a in names
    ]
    return ItineraryTask(
        city=raw.city,
        grid=grid,
        pois=pois,
        travel_slots=travel,
        max_utility=raw.rating_scale if max_utility is None else max_utility,
        start_poi=0,
    )


def synthetic_task(
    seed: int, n_pois: int = 10, horizon_hours: int = 8, max_utility: int = 10, city: str = "synthetic"
) -> ItineraryTask:
    raw = synthetic_provider(ProviderRequest(city, n_pois, horizon_hours, seed), max_utility)
    return build_task(raw, horizon_hours=horizon_hours, max_utility=max_utility)
