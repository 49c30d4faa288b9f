import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "default",
    deadline=None,
    max_examples=100,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def _normalize(ws):
    w = np.asarray(ws, dtype=float)
    w = w / w.sum()
    # push the rounding residue into the largest entry so the sum is exact-ish
    w[np.argmax(w)] += 1.0 - w.sum()
    return w


@st.composite
def dists(draw, k=None, min_k=2, max_k=5, full_support=True):
    if k is None:
        k = draw(st.integers(min_k, max_k))
    lo = 1e-3 if full_support else 0.0
    ws = draw(st.lists(st.floats(lo, 1.0), min_size=k, max_size=k))
    if sum(ws) == 0:
        ws[0] = 1.0
    return _normalize(ws)


@st.composite
def dist_pairs(draw, min_k=2, max_k=5, full_support=True):
    k = draw(st.integers(min_k, max_k))
    return draw(dists(k=k, full_support=full_support)), draw(dists(k=k, full_support=full_support))


def random_dist(rng, k, conc=1.0):
    return _normalize(rng.dirichlet(np.full(k, conc)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
