"""Shared fixtures and the end-of-run acceptance summary hook."""

from fractions import Fraction

import pytest

from torusdiff.basis import build_basis
from torusdiff.geometry import FULL
from torusdiff.schedule import make_schedule

# One line per acceptance criterion, printed after the run (terminal summary
# output is not captured, so the lines stay visible under plain `pytest -v`).
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log() -> list[str]:
    return ACCEPTANCE_LINES


@pytest.fixture(scope="session")
def depth2_basis():
    """Two-level construction over the full torus (sub-second build)."""
    return build_basis(FULL, make_schedule("geq", Fraction(2), 2), rounds=2)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
