"""Monte Carlo entropies and informations over subsets of latents.

Random streams are keyed per latent: latent ``i`` always draws its standard
normals from ``default_rng([seed, i + 1])`` and the source data indices come
from ``default_rng([seed, 0])``. Any two estimates that share a seed therefore
share their random numbers on the latents they have in common, which makes
differences such as I(x, z) - I(x, z_{-i}) low-variance and lets latents be
appended without perturbing the draws of existing ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterable, Tuple

import numpy as np

from .data import EvalConfig, PosteriorSet
from .errors import SingleLatent
from .kernels import mixture_logpdf

HALF_LOG_2PIE = 0.5 * math.log(2.0 * math.pi * math.e)


class LatentSubset(tuple):
    """Sorted, de-duplicated tuple of latent indices."""

    def __new__(cls, indices: Iterable[int], n_latents: int = None):
        idx = tuple(sorted({int(i) for i in indices}))
        if not idx:
            raise ValueError("latent subset must be non-empty")
        if idx[0] < 0 or (n_latents is not None and idx[-1] >= n_latents):
            raise IndexError(f"latent subset {idx} out of range for L={n_latents}")
        return super().__new__(cls, idx)

    @classmethod
    def all(cls, n_latents: int) -> "LatentSubset":
        return cls(range(n_latents))

    def without(self, i: int) -> "LatentSubset":
        return LatentSubset(j for j in self if j != i)


@dataclass(frozen=True)
class McEstimate:
    value: float
    m_used: int
    seed: int
    raw: float = None

    def __post_init__(self):
        if self.raw is None:
            object.__setattr__(self, "raw", self.value)

    def __float__(self):
        return float(self.value)


def _as_subset(ps: PosteriorSet, subset) -> LatentSubset:
    if isinstance(subset, LatentSubset):
        if subset[-1] >= ps.n_latents:
            raise IndexError(f"latent subset {tuple(subset)} out of range for L={ps.n_latents}")
        return subset
    if isinstance(subset, (int, np.integer)):
        subset = [subset]
    return LatentSubset(subset, ps.n_latents)


def source_indices(n_samples: int, m: int, seed: int) -> np.ndarray:
    return np.random.default_rng([seed, 0]).integers(0, n_samples, size=m)


def latent_noise(i: int, m: int, seed: int) -> np.ndarray:
    return np.random.default_rng([seed, i + 1]).standard_normal(m)


def sample_latents(ps: PosteriorSet, subset, m: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Draw ``m`` points from q(z_subset): pick x^(n) uniformly, then z ~ q(z|x^(n)).

    Returns the ``m x |subset|`` sample matrix and the source row indices.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    sub = _as_subset(ps, subset)
    idx = source_indices(ps.n_samples, m, seed)
    z = np.empty((m, len(sub)))
    for c, i in enumerate(sub):
        z[:, c] = ps.means[idx, i] + ps.stds[idx, i] * latent_noise(i, m, seed)
    return z, idx


def _entropy_from_samples(ps: PosteriorSet, sub: LatentSubset, z: np.ndarray) -> float:
    cols = list(sub)
    logq = mixture_logpdf(z, ps.means[:, cols], ps.stds[:, cols])
    return float(-logq.mean())


def _source_logpdf(ps: PosteriorSet, i: int, z: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """log q(z_i | x^(n)) at each draw, under the posterior the draw came from."""
    u = (z - ps.means[idx, i]) / ps.stds[idx, i]
    return -0.5 * u * u - np.log(ps.stds[idx, i]) - 0.5 * math.log(2.0 * math.pi)


def entropy_sampled(ps: PosteriorSet, subset, cfg: EvalConfig) -> McEstimate:
    """Differential entropy of the aggregate posterior q(z_subset), in nats.

    Can be negative for concentrated posteriors.
    """
    sub = _as_subset(ps, subset)
    z, _ = sample_latents(ps, sub, cfg.n_mc_samples, cfg.rng_seed)
    h = _entropy_from_samples(ps, sub, z)
    return McEstimate(h, cfg.n_mc_samples, cfg.rng_seed)


def conditional_entropy_given_x(ps: PosteriorSet, subset) -> float:
    """Exact H(z_subset | x) for diagonal Gaussian posteriors."""
    sub = list(_as_subset(ps, subset))
    logs = np.log(ps.stds[:, sub]).sum(axis=1).mean()
    return float(len(sub) * HALF_LOG_2PIE + logs)


def mi_x_subset(ps: PosteriorSet, subset, cfg: EvalConfig) -> McEstimate:
    """I(x, z_subset), clamped at 0 (raw kept).

    Both entropies are estimated on the same draws, i.e. the mean of
    log q(z|x^(n)) - log q(z) over draws; a latent that ignores x then
    contributes exactly nothing instead of its Monte Carlo error.
    """
    return SampledEntropies(ps, cfg).mi_x(subset)


class SampledEntropies:
    """Memoised sampled entropies over subsets for one posterior set and seed.

    Samples for every latent are drawn once; each subset reuses its columns.
    """

    def __init__(self, ps: PosteriorSet, cfg: EvalConfig):
        self.ps = ps
        self.cfg = cfg
        self._z, idx = sample_latents(ps, LatentSubset.all(ps.n_latents), cfg.n_mc_samples, cfg.rng_seed)
        self._logc = np.column_stack(
            [_source_logpdf(ps, i, self._z[:, i], idx) for i in range(ps.n_latents)]
        )
        self._logq: Dict[LatentSubset, np.ndarray] = {}

    def _mixture(self, sub: LatentSubset) -> np.ndarray:
        if sub not in self._logq:
            cols = list(sub)
            self._logq[sub] = mixture_logpdf(self._z[:, cols], self.ps.means[:, cols], self.ps.stds[:, cols])
        return self._logq[sub]

    def entropy(self, subset) -> float:
        return float(-self._mixture(_as_subset(self.ps, subset)).mean())

    def conditional_entropy(self, subset) -> float:
        """Sampled H(z_subset | x) on the same draws (compare :func:`conditional_entropy_given_x`)."""
        sub = _as_subset(self.ps, subset)
        return float(-self._logc[:, list(sub)].sum(axis=1).mean())

    def mi_raw(self, subset) -> float:
        sub = _as_subset(self.ps, subset)
        return float((self._logc[:, list(sub)].sum(axis=1) - self._mixture(sub)).mean())

    def estimate(self, raw: float) -> McEstimate:
        return McEstimate(max(raw, 0.0), self.cfg.n_mc_samples, self.cfg.rng_seed, raw)

    def mi_x(self, subset) -> McEstimate:
        return self.estimate(self.mi_raw(subset))

    def sepin(self, i: int) -> McEstimate:
        n = self.ps.n_latents
        if n < 2:
            raise SingleLatent("I(x, z_i | z_-i) needs at least two latents")
        full = LatentSubset.all(n)
        return self.estimate(self.mi_raw(full) - self.mi_raw(full.without(i)))

    def indin(self, i: int) -> McEstimate:
        n = self.ps.n_latents
        if n < 2:
            raise SingleLatent("I(x, z_i) - I(z_i, z_-i) needs at least two latents")
        full = LatentSubset.all(n)
        rest = full.without(i)
        pair_mi = self.entropy([i]) + self.entropy(rest) - self.entropy(full)
        value = self.mi_raw([i]) - pair_mi
        return McEstimate(value, self.cfg.n_mc_samples, self.cfg.rng_seed, value)


def sepin_component(ps: PosteriorSet, i: int, cfg: EvalConfig) -> McEstimate:
    """I(x, z_i | z_-i) = I(x, z) - I(x, z_-i), both terms on common random numbers."""
    return SampledEntropies(ps, cfg).sepin(i)


def indin_component(ps: PosteriorSet, i: int, cfg: EvalConfig) -> McEstimate:
    """Signed I(x, z_i) - I(z_i, z_-i); never clamped."""
    return SampledEntropies(ps, cfg).indin(i)
