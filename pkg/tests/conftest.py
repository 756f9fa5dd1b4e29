import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from trapwave.params import LocalizationError, ParamSet, check_localization

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

EXAMPLE_A = ParamSet(K=0.0, M=1.0, T=1.0, rho=1.0, k=1.0, v=0.0)
EXAMPLE_B = ParamSet(K=0.0, M=1.0, T=1.0, rho=1.0, k=1.0, v=0.5)


@pytest.fixture
def example_a():
    return EXAMPLE_A


@pytest.fixture
def example_b():
    return EXAMPLE_B


def _trapping(p):
    try:
        check_localization(p)
    except LocalizationError:
        return False
    return True


@st.composite
def admissible_params(draw, moving=True):
    """Parameter sets that hold a trapped mode."""
    T = draw(st.floats(0.3, 3.0))
    rho = draw(st.floats(0.3, 3.0))
    frac = draw(st.floats(0.0, 0.9)) if moving else 0.0
    p = ParamSet(
        K=draw(st.floats(-0.5, 2.0)),
        M=draw(st.floats(0.2, 3.0)),
        T=T,
        rho=rho,
        k=draw(st.floats(0.2, 3.0)),
        v=frac * math.sqrt(T / rho),
    )
    from hypothesis import assume

    assume(_trapping(p))
    return p


def well_conditioned(p, m, limit=1e3):
    """Radicand not cancelled by more than ``limit``: rounding stays below ~1e-13."""
    return p.T * p.rho * m.omega0**2 <= limit * p.radicand(m.omega0)


def squared_root(p):
    """Omega0^2 from the quadratic obtained by squaring the frequency equation."""
    a = p.M**2
    b = 4 * p.T * p.rho - 2 * p.K * p.M
    c = p.K**2 - 4 * (p.k * p.T - p.k * p.rho * p.v**2)
    return (-b + math.sqrt(b * b - 4 * a * c)) / (2 * a)


def relerr(a, b):
    return abs(a - b) / max(abs(a), abs(b))


rng = np.random.default_rng


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
