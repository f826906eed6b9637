from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from tripplan.providers import build_task, fixture_provider

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def paris_raw():
    return fixture_provider("Paris")


@pytest.fixture(scope="session")
def paris_task(paris_raw):
    return build_task(paris_raw, horizon_hours=6)


@pytest.fixture
def acceptance_line():
    def emit(name: str, ok: bool, detail: str = "") -> None:
        line = f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "")
        print(line)
        ACCEPTANCE_LINES.append(line)

    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
