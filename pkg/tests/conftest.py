import json
from functools import lru_cache
from pathlib import Path

import pytest

from ladderalg.families import instantiate

FIXTURES = Path(__file__).parent / "fixtures"
ACCEPTANCE_LINES: list[str] = []


@lru_cache(maxsize=None)
def realization(family_id: str, n: int | None = None, k: int | None = None):
    """Default-parameter realization, built once per session."""
    return instantiate(family_id, n=n, k=k)


@pytest.fixture(scope="session")
def oracle():
    return json.loads((FIXTURES / "oracle.json").read_text())


@pytest.fixture(scope="session")
def real():
    return realization


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
