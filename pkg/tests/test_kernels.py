import math

import numpy as np
import pytest
from scipy.special import logsumexp
from scipy.stats import norm

from dismetrics import _accel, kernels

needs_numba = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba path disabled")


def _bin_reference(mu, sigma, lo, hi, n):
    edges = np.linspace(lo, hi, n + 1)
    p = np.diff(norm.cdf(edges, mu, sigma))
    return p / p.sum()


def test_bin_masses_match_cdf_differences():
    rng = np.random.default_rng(3)
    mu = rng.uniform(-3, 3, 20)
    sigma = rng.uniform(0.1, 2, 20)
    got = kernels.bin_masses(mu, sigma, -4, 4, 50)
    for r in range(20):
        np.testing.assert_allclose(got[r], _bin_reference(mu[r], sigma[r], -4, 4, 50), atol=1e-12)


def test_underflow_goes_to_clipped_mean_bin():
    got = kernels.bin_masses([100.0, -100.0], [0.01, 0.01], -4, 4, 8)
    assert got[0].tolist() == [0] * 7 + [1]
    assert got[1].tolist() == [1] + [0] * 7


def test_clipped_bin_index():
    assert kernels.clipped_bin_index(np.array([-9.0, -4.0, 0.0, 3.99, 4.0, 9.0]), -4, 4, 8).tolist() == [0, 0, 4, 7, 7, 7]


def test_mixture_logpdf_matches_logsumexp():
    rng = np.random.default_rng(4)
    means = rng.normal(size=(30, 2))
    stds = rng.uniform(0.05, 1.5, size=(30, 2))
    z = rng.normal(size=(40, 2)) * 3
    comp = norm.logpdf(z[:, None, :], means[None], stds[None]).sum(axis=2)
    ref = logsumexp(comp, axis=1) - math.log(30)
    np.testing.assert_allclose(kernels.mixture_logpdf(z, means, stds), ref, rtol=1e-12, atol=1e-12)


def test_mixture_logpdf_far_tail_is_finite():
    out = kernels.mixture_logpdf(np.array([[50.0]]), np.array([[0.0], [1.0]]), np.array([[0.1], [0.1]]))
    assert np.isfinite(out[0])


@needs_numba
@pytest.mark.parametrize("method", [0, 1, 2])
def test_backends_agree_on_bins(method):
    rng = np.random.default_rng(method)
    mu = np.concatenate([rng.uniform(-6, 6, 200), [50.0]])
    sigma = np.concatenate([rng.uniform(1e-3, 3, 200), [1e-3]])
    a = kernels._bin_masses_numba(mu, sigma, -4.0, 4.0, 100, method)
    b = kernels._bin_masses_numpy(mu, sigma, -4.0, 4.0, 100, method)
    np.testing.assert_allclose(a, b, atol=1e-13)


@needs_numba
def test_backends_agree_on_mixture():
    rng = np.random.default_rng(9)
    means = rng.normal(size=(300, 3))
    stds = rng.uniform(0.01, 2, size=(300, 3))
    z = rng.normal(size=(500, 3))
    a = kernels._mixture_logpdf_numba(z, means, stds)
    b = kernels._mixture_logpdf_numpy(z, means, stds)
    np.testing.assert_allclose(a, b, rtol=1e-11)
