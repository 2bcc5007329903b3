import numpy as np
import pytest

from boshattack.geometry import Env
from boshattack.victim import Basin, MlpModel, QueryLedger, SyntheticLandscape

ACCEPTANCE = {}


def halfspace_model(offset=2.0):
    """Label 1 iff x[0] > offset, in two dimensions."""
    return MlpModel((np.array([[0.0, 0.0], [1.0, 0.0]]),), (np.array([0.0, -offset]),))


def single_basin(center=(3.0, 0.0), radius=1.0):
    c = np.asarray(center, dtype=float)
    return SyntheticLandscape(len(c), 0, (Basin(c, radius, 1),), np.zeros(len(c)))


@pytest.fixture
def halfspace_env():
    return Env(halfspace_model(), np.zeros(2), 0, QueryLedger())


@pytest.fixture
def basin_env():
    land = single_basin()
    return Env(land, land.x0, 0, QueryLedger())


@pytest.fixture
def acceptance_report():
    return ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key}: {'PASS' if ok else 'FAIL'}  {detail}")
