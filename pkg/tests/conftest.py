import functools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from parmfem.geometry import DomainKind, DomainSpec, generate_domain
from parmfem.experiments import CaseConfig, run_case
from parmfem.lagrange import P1Space

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@functools.lru_cache(maxsize=None)
def cached_case(cfg: CaseConfig):
    """Full pipeline result, shared between test modules in one session."""
    return run_case(cfg)


def lshape(n):
    return generate_domain(DomainSpec(DomainKind.LSHAPE, n))


def square(n):
    return generate_domain(DomainSpec(DomainKind.UNIT_SQUARE, n))


@pytest.fixture(scope="session")
def lmesh4():
    return lshape(4)


@pytest.fixture(scope="session")
def lspace4(lmesh4):
    return P1Space(lmesh4)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
