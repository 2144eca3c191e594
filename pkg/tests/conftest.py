import numpy as np
import pytest
from hypothesis import strategies as st

from scaledsm.model import Scenario


def random_scenario(rng, K, N, gain_range=(0.05, 1.0), mask_frac=None, gamma=1.0):
    """Unit-scale instance; cross gains are drawn below direct gains on average."""
    gain = rng.uniform(*gain_range, size=(K, K, N))
    gain[np.arange(K), np.arange(K)] += 0.5
    p_total = rng.uniform(0.5, 2.0, K)
    if mask_frac is None:
        p_mask = np.repeat(p_total[:, None], N, axis=1) * rng.uniform(0.3, 1.2, (K, N))
    else:
        p_mask = np.repeat(p_total[:, None], N, axis=1) * mask_frac
    return Scenario(
        gain=gain,
        noise=rng.uniform(0.05, 0.5, (K, N)),
        weight=rng.uniform(0.5, 3.0, K),
        p_total=p_total,
        p_mask=p_mask,
        gamma=gamma,
    )


def random_power(rng, s, positive=True):
    """Feasible power: uniform direction scaled inside budget and mask."""
    p = rng.uniform(0.01 if positive else 0.0, 1.0, (s.K, s.N)) * s.p_mask
    scale = np.minimum(1.0, s.p_total / p.sum(axis=1)) * rng.uniform(0.2, 1.0, s.K)
    return p * scale[:, None]


@st.composite
def scenarios(draw, max_k=4, max_n=4):
    K = draw(st.integers(1, max_k))
    N = draw(st.integers(1, max_n))
    seed = draw(st.integers(0, 2**31 - 1))
    return random_scenario(np.random.default_rng(seed), K, N)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
        ACCEPTANCE_LINES.clear()  # the hook can be registered twice
