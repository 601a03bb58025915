from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ssh_transfer.lattice import ChainSpec
from ssh_transfer.schedules import InterfacePlateau, PolynomialSingle

settings.register_profile("default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def single10():
    return ChainSpec.single(10)


@pytest.fixture
def interface5():
    return ChainSpec.interface(5)


@pytest.fixture
def poly2():
    return PolynomialSingle(2.0)


@pytest.fixture
def plateau40():
    return InterfacePlateau(40.0, delta=0.01)


@pytest.fixture
def rng():
    return np.random.default_rng(7)
