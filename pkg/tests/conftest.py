import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from ofdma_selectivity import PowerDelayProfile

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

N_SC = 1024


@st.composite
def pdps(draw, max_taps=16):
    """Random unit-power profiles; the first tap is kept nonzero."""
    n = draw(st.integers(1, max_taps))
    powers = draw(st.lists(st.floats(0.0, 1.0), min_size=n, max_size=n))
    powers[0] = max(powers[0], 1e-3)
    return PowerDelayProfile.from_powers(powers)


def random_pdp(rng, max_taps=16):
    n = int(rng.integers(1, max_taps + 1))
    p = rng.random(n)
    p[0] = max(p[0], 1e-3)
    return PowerDelayProfile.from_powers(p)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# acceptance criteria report: one line per criterion, printed after the run
ACCEPTANCE = {}


def record_criterion(number, ok, detail):
    ACCEPTANCE[number] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
