import math

import numpy as np
import pytest
from scipy import integrate
from scipy.stats import norm

from dismetrics import (
    EvalConfig,
    LatentSubset,
    PosteriorSet,
    conditional_entropy_given_x,
    entropy_sampled,
    indin_component,
    mi_x_subset,
    sample_latents,
    sepin_component,
)
from dismetrics.errors import SingleLatent
from dismetrics.sampler import SampledEntropies

from conftest import shared_posterior, two_clusters

H_STD = 0.5 * math.log(2 * math.pi * math.e)


def test_subset_validation():
    assert LatentSubset([2, 0]) == (0, 2)
    with pytest.raises(ValueError):
        LatentSubset([])
    assert LatentSubset([1, 1]) == (1,)
    with pytest.raises(IndexError):
        LatentSubset([3], 2)


def test_sampling_is_deterministic():
    ps = two_clusters(0.3, latents=2)
    a, ia = sample_latents(ps, [0, 1], 500, 7)
    b, ib = sample_latents(ps, [0, 1], 500, 7)
    assert a.tobytes() == b.tobytes() and ia.tolist() == ib.tolist()
    c, _ = sample_latents(ps, [0, 1], 500, 8)
    assert a.tobytes() != c.tobytes()


def test_entropy_is_reproducible_for_fixed_seed():
    ps = two_clusters(0.3, latents=2)
    cfg = EvalConfig(n_mc_samples=2000, rng_seed=5)
    assert entropy_sampled(ps, [0, 1], cfg).value == entropy_sampled(ps, [0, 1], cfg).value


def test_shared_standard_normal_entropy():
    est = entropy_sampled(shared_posterior(20), [0], EvalConfig())
    assert est.value == pytest.approx(H_STD, abs=0.02)
    assert (est.m_used, est.seed) == (10000, 0)


def test_independent_pair_entropy_adds():
    est = entropy_sampled(shared_posterior(20, latents=2), [0, 1], EvalConfig())
    assert est.value == pytest.approx(2 * H_STD, abs=0.03)


def test_sharp_posterior_has_negative_entropy():
    est = entropy_sampled(shared_posterior(10, sigma=0.01), [0], EvalConfig())
    assert est.value == pytest.approx(H_STD + math.log(0.01), abs=0.02)
    assert est.value < 0


def test_conditional_entropy_closed_form():
    ps = PosteriorSet([[0.0, 1.0], [2.0, 3.0]], [[1.0, 0.1], [1.0, 0.1]])
    assert conditional_entropy_given_x(ps, [0]) == pytest.approx(1.4189385, abs=1e-6)
    assert conditional_entropy_given_x(ps, [1]) == pytest.approx(-0.8836466, abs=1e-6)
    assert conditional_entropy_given_x(ps, [0, 1]) == pytest.approx(1.4189385 - 0.8836466, abs=1e-6)


def _mixture_entropy(mus, sigma):
    def integrand(z):
        q = np.mean([norm.pdf(z, m, sigma) for m in mus])
        return -q * math.log(q) if q > 0 else 0.0

    return integrate.quad(integrand, min(mus) - 12 * sigma, max(mus) + 12 * sigma, limit=400, points=list(mus))[0]


@pytest.mark.parametrize("sigma", [0.1, 0.5, 1.0])
def test_two_cluster_mi_matches_quadrature(sigma):
    ps = two_clusters(sigma)
    oracle = _mixture_entropy([-1.0, 1.0], sigma) - (H_STD + math.log(sigma))
    assert mi_x_subset(ps, [0], EvalConfig()).value == pytest.approx(oracle, abs=0.02)


def test_conditioning_reduces_entropy():
    rng = np.random.default_rng(1)
    ps = PosteriorSet(rng.normal(size=(40, 3)), rng.uniform(0.2, 1, size=(40, 3)))
    est = SampledEntropies(ps, EvalConfig(n_mc_samples=4000))
    for sub in ([0], [1, 2], [0, 1, 2]):
        assert est.entropy(sub) >= conditional_entropy_given_x(ps, sub) - 0.05
    assert est.mi_raw([0, 1, 2]) >= est.mi_raw([0, 1]) - 0.05


def test_noise_latent_sepin_is_zero():
    base = two_clusters(0.1)
    noise = shared_posterior(base.n_samples)
    ps = base.append(noise)
    assert sepin_component(ps, 1, EvalConfig()).value == pytest.approx(0.0, abs=0.02)
    assert sepin_component(ps, 0, EvalConfig()).value == pytest.approx(math.log(2), abs=0.02)


def test_duplicate_latent_sepin_is_zero():
    ps = two_clusters(0.01, latents=2)
    assert sepin_component(ps, 0, EvalConfig()).value == pytest.approx(0.0, abs=0.02)


def test_indin_of_independent_noise_matches_sepin():
    ps = two_clusters(0.2).append(shared_posterior(20))
    cfg = EvalConfig()
    assert indin_component(ps, 0, cfg).value == pytest.approx(sepin_component(ps, 0, cfg).value, abs=0.02)


def test_single_latent_errors():
    with pytest.raises(SingleLatent):
        sepin_component(two_clusters(0.1), 0, EvalConfig())
    with pytest.raises(SingleLatent):
        indin_component(two_clusters(0.1), 0, EvalConfig())


def test_appended_latents_do_not_change_existing_draws():
    ps = two_clusters(0.4, latents=2)
    wider = ps.append(shared_posterior(ps.n_samples, latents=3))
    a, _ = sample_latents(ps, [0, 1], 300, 2)
    b, _ = sample_latents(wider, [0, 1], 300, 2)
    assert a.tobytes() == b.tobytes()


def test_small_sample_mean_matches_large_sample():
    ps = two_clusters(0.5).append(shared_posterior(20))
    small = np.mean([entropy_sampled(ps, [0, 1], EvalConfig(n_mc_samples=2000, rng_seed=s)).value
                     for s in range(10)])
    large = entropy_sampled(ps, [0, 1], EvalConfig(n_mc_samples=50000)).value
    assert small == pytest.approx(large, abs=0.01)
