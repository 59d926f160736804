import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from simplicial_sis.model import SimplicialSis  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

RING2 = np.array([[0.0, 1.0], [1.0, 0.0]])
ONES2 = np.ones((2, 2, 2))


def two_group(beta1, beta2, B=ONES2):
    """The n=2 worked example: Gamma = I, A = 2-ring, B_i = ones."""
    return SimplicialSis(gamma=np.ones(2), A=RING2, B=B, beta1=beta1, beta2=beta2)


@pytest.fixture
def disease_free_model():
    return two_group(0.1, 0.05)


@pytest.fixture
def bistable_model():
    return two_group(0.5, 1.0)


_ACCEPTANCE = []


@pytest.fixture(scope="session")
def acceptance_report():
    def record(number, title, passed, detail=""):
        _ACCEPTANCE.append((number, title, passed, detail))
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_ACCEPTANCE):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number}: {title}  {detail}".rstrip())
