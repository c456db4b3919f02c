from __future__ import annotations

import numpy as np
import pytest

from isec import generators as gen
from isec.fibration import Section


@pytest.fixture
def G1():
    return gen.grid(3, 3)


@pytest.fixture
def G9():
    return gen.grid(3, 9)


@pytest.fixture
def phi_id(G1):
    return gen.identity_row(G1)


@pytest.fixture
def phi_z(G1):
    return Section(G1, {0: (0, 0), 1: (1, 2), 2: (2, 0)})


@pytest.fixture
def phi_w(G1):
    return Section(G1, {0: (0, 0), 1: (1, 1), 2: (2, 2)})


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE_LINES: list[str] = []


def pytest_runtest_logreport(report):
    if report.when == "call":
        _ACCEPTANCE_LINES.extend(
            line for line in report.capstdout.splitlines() if line.startswith("ACCEPTANCE ")
        )


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
