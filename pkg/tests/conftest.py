import numpy as np
import pytest

from monoscore.synthetic import make_world
from monoscore.vecspace import VectorSpace


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_space():
    return VectorSpace.from_dict({
        "a": [1.0, 0.0, 0.0],
        "b": [0.0, 2.0, 0.0],
        "c": [1.0, 1.0, 0.0],
        "zero": [0.0, 0.0, 0.0],
    })


@pytest.fixture(scope="session")
def world():
    return make_world(dim=20, vocab_size=60, noise=0.0, seed=7, n_phrases=40, n_sentences=150)


_RESULTS = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line per acceptance criterion; returns a checker."""
    results = request.config.stash.setdefault(_RESULTS, [])

    def check(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})"
        results.append(line)
        print(line)
        assert ok, line
    return check


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_RESULTS, [])
    if results:
        terminalreporter.section("acceptance criteria")
        for line in results:
            terminalreporter.write_line(line)
