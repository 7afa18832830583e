import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

from cohcert import linalg as la  # noqa: E402

seeds = st.integers(min_value=0, max_value=2**32 - 1)


@st.composite
def states(draw, dims=(2, 3, 4)):
    """Seeded random density matrices with any rank."""
    d = draw(st.sampled_from(dims))
    r = draw(st.integers(1, d))
    return la.random_density_matrix(d, r, draw(seeds))


@st.composite
def pure_vectors(draw, dims=(2, 3, 4, 5)):
    d = draw(st.sampled_from(dims))
    return la.random_pure_state(d, draw(seeds))


@pytest.fixture
def qutrit():
    return la.random_density_matrix(3, 3, 13)


# one line per acceptance criterion, filled by test_acceptance and echoed after the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
