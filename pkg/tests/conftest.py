"""Shared fixtures and the acceptance-criterion reporter.

Acceptance tests register one line per criterion through the ``acceptance``
fixture; the summary is printed at the end of the run so every criterion has
a visible pass/fail line with its runtime.
"""

from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from eomwage.survey import Dataset, Provenance

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def make_dataset(columns: dict, source: str = "test") -> Dataset:
    frame = pd.DataFrame(columns)
    if "weight" not in frame.columns:
        frame["weight"] = 1.0
    return Dataset(frame, Provenance(source=source))


@pytest.fixture
def dataset_factory():
    return make_dataset


class AcceptanceRecorder:
    def record(self, criterion: int, description: str, elapsed: float, passed: bool = True):
        status = "PASS" if passed else "FAIL"
        _ACCEPTANCE_LINES.append(
            f"ACCEPTANCE {criterion}: {status} ({elapsed:.1f}s) — {description}"
        )


@pytest.fixture
def acceptance() -> AcceptanceRecorder:
    return AcceptanceRecorder()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
