import math
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-size verification runs (deselect with -m 'not slow')")


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


def disk_point(rng, radius=2.0):
    r = radius * math.sqrt(rng.random())
    return complex(r * math.cos(2 * math.pi * rng.random()), r * math.sin(2 * math.pi * rng.random()))


def random_state(rng, N, support=10):
    from cvtele.fock import FockVector

    amps = np.zeros(N + 1, dtype=complex)
    amps[: support + 1] = rng.standard_normal(support + 1) + 1j * rng.standard_normal(support + 1)
    return FockVector(amps).normalized()
