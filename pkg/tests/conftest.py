import numpy as np
import pytest

from gchlab.core import InitialDataSpec, make_initial_data
from gchlab.euler import TimeControls
from gchlab.spectral import GridSpec, make_filter_bank


@pytest.fixture(scope="session")
def grid1024():
    return GridSpec(20.0, 1024)


@pytest.fixture(scope="session")
def bank1024(grid1024):
    return make_filter_bank(grid1024)


@pytest.fixture(scope="session")
def grid256():
    return GridSpec(20.0, 256)


@pytest.fixture(scope="session")
def bank256(grid256):
    return make_filter_bank(grid256)


@pytest.fixture(scope="session")
def reference_spec():
    """Gaussian data scaled to ||m0||_{B^{1/2}_{2,1}} = 0.25."""
    return InitialDataSpec("gaussian", amplitude=1.0, width=1.0, norm_target=0.25)


@pytest.fixture(scope="session")
def reference_pair(grid1024, bank1024, reference_spec):
    return make_initial_data(reference_spec, grid1024, bank1024)


@pytest.fixture(scope="session")
def small_pair(grid256, bank256, reference_spec):
    return make_initial_data(reference_spec, grid256, bank256)


@pytest.fixture
def reference_controls():
    return TimeControls(dt=1e-3, t_end=0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# criterion number -> (passed, summary); filled by test_acceptance.py
ACCEPTANCE: dict = {}


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[k]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {k:2d}: {text}")
