import numpy as np
import pytest
from scipy.stats import unitary_group

from virtiso.measures import replica_rng


@pytest.fixture
def rng():
    return replica_rng(12345, 0)


def haar_unitary(n, seed):
    """Haar unitary from scipy, independent of the reflection construction."""
    return unitary_group.rvs(n, random_state=np.random.default_rng(seed)) if n > 1 else \
        np.exp(2j * np.pi * np.random.default_rng(seed).random()).reshape(1, 1)


def unit(v):
    v = np.asarray(v, dtype=complex)
    return v / np.linalg.norm(v)


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
