import numpy as np
import pytest
from hypothesis import settings

from sparsedom.dyadic import Box, GridFunction

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def unit():
    return Box.interval(0.0, 1.0)


def step_function(box, m, rng, pieces=8, positive=False):
    """Random piecewise-constant function with ``pieces`` blocks per axis."""
    coarse = rng.random((pieces,) * box.n) if positive else rng.standard_normal((pieces,) * box.n)
    if positive:
        coarse = 0.05 + coarse * rng.pareto(1.5, coarse.shape)
    rep = 2 ** m // pieces
    vals = coarse
    for axis in range(box.n):
        vals = np.repeat(vals, rep, axis=axis)
    return GridFunction(box, m, vals)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one pass/fail line per acceptance criterion (printed in the terminal summary)."""

    def record(number: int, title: str, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
