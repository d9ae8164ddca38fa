from __future__ import annotations

import pytest

from breakprod import table1_instance


@pytest.fixture(scope="session")
def model():
    return table1_instance(0.02)


@pytest.fixture(scope="session")
def model_b0():
    return table1_instance(0.0)


@pytest.fixture(scope="session")
def model_quadratic():
    return table1_instance(0.001).with_params(gamma=2.0)


def pytest_terminal_summary(terminalreporter):
    from tests.test_acceptance import GATE_LINES

    if GATE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in GATE_LINES:
            terminalreporter.write_line(line)
