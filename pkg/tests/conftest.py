from __future__ import annotations

import numpy as np
import pytest

from bergerflow.initial_data import construct_initial
from bergerflow.mesh import MetricState, build_grid


def flat_state(n: int = 256, x_max: float = 4.0, outer: str = "pinned") -> MetricState:
    grid = build_grid(n, x_max, outer=outer)
    return MetricState.from_functions(grid, lambda x: x, lambda x: x)


def cylinder_state(n: int = 128, r0: float = 1.0, x_max: float = 4.0, outer: str = "pinned") -> MetricState:
    grid = build_grid(n, x_max, inner="mirror", outer=outer)
    return construct_initial("cylinder", {"r0": r0}, grid)


def cap_state(n: int = 512, a: float = 0.0, x_max: float = 8.0, outer: str = "reflect") -> MetricState:
    grid = build_grid(n, x_max, outer=outer)
    return construct_initial("cap_cylinder", {"B": 1.0, "a": a}, grid)


@pytest.fixture
def flat():
    return flat_state()


@pytest.fixture
def cylinder():
    return cylinder_state()


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


# ---------------------------------------------------------------------------
# acceptance-criterion report lines, echoed in the terminal summary
# ---------------------------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def acceptance(code: str, passed: bool, detail: str) -> None:
    """Record and print one PASS/FAIL line, then assert."""
    line = f"{code}: {'PASS' if passed else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s[1:].split(":")[0].split()[0].rstrip("abcdef"))):
            terminalreporter.write_line(line)
