import numpy as np
import pytest

from gremlab.model import make_spec, random_spec


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


@pytest.fixture
def rem():
    """n = 1, uniform binary base law, phi = (0, 1)."""
    return make_spec(1, [0.5, 0.5], phi=np.array([0.0, 1.0]))


@pytest.fixture
def zero_model():
    def build(n, S=2):
        return make_spec(n, np.full(S, 1.0 / S), phi=np.zeros(S ** (2**n - 1)))
    return build


@pytest.fixture
def random_model(rng):
    def build(n=2, S=2, scale=2.0):
        return random_spec(rng, n, S, scale)
    return build


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in mod.LINES:
            terminalreporter.write_line(line)
