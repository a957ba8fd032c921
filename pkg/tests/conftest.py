import math

import numpy as np
import pytest

from partcap import CircleMap, InvalidMapError, TrigPoly, coboundary_from, constant_roof, trig_roof


@pytest.fixture
def doubling():
    return CircleMap(2)


@pytest.fixture
def wavy():
    """l = 2 with a_1 = 0.05."""
    return CircleMap(2, sin=(0.05,))


@pytest.fixture
def sin_tau():
    """tau = sin(2 pi x) / (2 pi), so tau' = cos(2 pi x) and ||tau'|| = 1."""
    return trig_roof(sin=(1 / (2 * math.pi),))


@pytest.fixture
def phi():
    return TrigPoly(sin=(0.1,))


@pytest.fixture
def cob(doubling, phi):
    return coboundary_from(phi, 0.3, doubling)


def random_map(rng, degree=None, terms=3):
    """A random valid expanding map (rejection sampling on the expansion bound)."""
    ell = int(degree or rng.choice([2, 3]))
    while True:
        k = int(rng.integers(0, terms + 1))
        scale = (ell - 1.0) / (2 * math.pi * max(k, 1) * 2.5)
        sin = [float(rng.uniform(-scale, scale)) / (i + 1) for i in range(k)]
        cos = [float(rng.uniform(-scale, scale)) / (i + 1) for i in range(k)]
        if k:
            cos[0] -= sum(cos)
        try:
            return CircleMap(ell, sin=sin, cos=cos)
        except InvalidMapError:
            continue


def random_config(rng, degree=None):
    """A random valid (map, tau, R) triple."""
    cmap = random_map(rng, degree)
    kt = int(rng.integers(1, 4))
    tau = trig_roof(
        sin=rng.normal(0, 0.3, kt) / np.arange(1, kt + 1),
        cos=rng.normal(0, 0.3, kt) / np.arange(1, kt + 1),
        const=float(rng.normal()),
    )
    R = tau.sup_deriv * float(rng.uniform(1.05, 3.0)) + 1e-3
    return cmap, tau, R


@pytest.fixture
def const_tau():
    return constant_roof(0.3)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
