import numpy as np
import pytest

from dismetrics import EvalConfig, PosteriorSet, QuantizationGrid
from dismetrics.oracle import build_world


@pytest.fixture
def cfg():
    return EvalConfig()


@pytest.fixture(scope="session")
def worlds():
    return {name: build_world(name) for name in ("perfect", "redundant-pair", "noise-only", "entangled", "mixed")}


def shared_posterior(n, mu=0.0, sigma=1.0, latents=1):
    return PosteriorSet(np.full((n, latents), mu), np.full((n, latents), sigma))


def two_clusters(sigma, n_each=10, latents=1):
    mu = np.repeat([-1.0, 1.0], n_each)
    means = np.tile(mu[:, None], (1, latents))
    return PosteriorSet(means, np.full(means.shape, sigma))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
