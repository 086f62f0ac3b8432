import numpy as np
import pytest

from rydms.hamiltonian import DriveParams, InteractionParams, RampSchedule
from rydms.sequence import make_echo_gate
from rydms.units import GHZ_UM6, MHZ, UM, US

OMEGA = 2.95 * MHZ
DELTA = 2.0 * MHZ
C6 = 25 * GHZ_UM6
R0 = 2.6 * UM


@pytest.fixture(scope="session")
def drive():
    return DriveParams.symmetric(OMEGA, DELTA)


@pytest.fixture(scope="session")
def pair():
    return InteractionParams(C6, R0)


@pytest.fixture(scope="session")
def template():
    return RampSchedule(3 * US, 0.0, 3 * US, OMEGA, 16 * MHZ, DELTA)


@pytest.fixture(scope="session")
def echo_gate(template, pair, drive):
    return make_echo_gate(-np.pi / 2, template, pair, drive)


def random_state(rng, dim=9):
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return psi / np.linalg.norm(psi)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
