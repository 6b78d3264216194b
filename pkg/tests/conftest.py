from __future__ import annotations

import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from himm.generators import random_hierarchy  # noqa: E402
from himm.io import load_model  # noqa: E402

DATA = Path(__file__).parent / "data"

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def toy2():
    return load_model(DATA / "toy2.json")


@pytest.fixture
def fig3():
    return load_model(DATA / "fig3.json")


def corpus(n: int, seed: int = 2024, **kw):
    """Deterministic list of random hierarchies (depth <= 4, <= 5 states, <= 4 inputs)."""
    rng = random.Random(seed)
    return [random_hierarchy(rng, **kw) for _ in range(n)]


@pytest.fixture(scope="session")
def case_study():
    from himm.casestudy import build_case_study

    return build_case_study()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
