import numpy as np
import pytest
from hypothesis import settings

from fbm_forecast import FbmSpec, LagStructure, solve_predictor

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def sol_065():
    """H = 0.65, sigma = h = 1, single lag delta_1 = h."""
    return solve_predictor(FbmSpec(0.65), LagStructure.from_durations(1.0, [1.0]))


@pytest.fixture(scope="session")
def sol_015():
    return solve_predictor(FbmSpec(0.15), LagStructure.from_durations(1.0, [1.0]))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record a one-line PASS/FAIL verdict for an acceptance criterion."""

    def record(number: int, title: str, ok: bool, detail: str = ""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2} - {title}" + (f" ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split("-")[0])):
            terminalreporter.write_line(line)
