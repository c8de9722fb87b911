"""Quantized probability tables and entropies of Gaussian posteriors."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .data import EvalConfig, FactorTable, PosteriorSet, QuantizationGrid
from .errors import DegenerateGrid
from .kernels import bin_masses, clipped_bin_index

PROB_FLOOR = 1e-300
_TOL = 1e-9


def entropy_of(probs) -> float:
    """-sum p log p over any array of probabilities, with 0 log 0 = 0."""
    p = np.asarray(probs, dtype=float).ravel()
    p = p[p > 0]
    return float(-(p * np.log(np.maximum(p, PROB_FLOOR))).sum())


def row_entropies(probs: np.ndarray) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(np.maximum(p, PROB_FLOOR)), 0.0)
    return -terms.sum(axis=1)


@dataclass(frozen=True, eq=False)
class Pmf:
    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 1 or (p < 0).any() or abs(p.sum() - 1.0) > _TOL:
            raise ValueError("Pmf needs a non-negative vector summing to 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def entropy(self) -> float:
        return entropy_of(self.probs)

    def __len__(self):
        return len(self.probs)


@dataclass(frozen=True, eq=False)
class JointPmf:
    """2-D probability table; ``axes`` names what rows and columns index."""

    probs: np.ndarray
    axes: Tuple[str, str] = ("latent-bin", "latent-bin")

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 2 or (p < 0).any() or abs(p.sum() - 1.0) > _TOL:
            raise ValueError("JointPmf needs a non-negative matrix summing to 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def row_marginal(self) -> Pmf:
        return Pmf(self.probs.sum(axis=1))

    def col_marginal(self) -> Pmf:
        return Pmf(self.probs.sum(axis=0))

    def entropy(self) -> float:
        return entropy_of(self.probs)

    def mutual_information(self) -> float:
        mi = self.row_marginal().entropy() + self.col_marginal().entropy() - self.entropy()
        return max(mi, 0.0)


def pmf_entropy(p) -> float:
    return entropy_of(p.probs if isinstance(p, (Pmf, JointPmf)) else p)


def _check_grid(grid: QuantizationGrid):
    if grid.n_bins < 2:
        raise DegenerateGrid(f"need at least 2 bins, got {grid.n_bins}")


def bin_posterior(mu: float, sigma: float, grid: QuantizationGrid, method: str = "erf") -> Pmf:
    """Mass of N(mu, sigma^2) in each grid bin, renormalized over the grid."""
    _check_grid(grid)
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    row = bin_masses([mu], [sigma], grid.lo, grid.hi, grid.n_bins, method)[0]
    return Pmf(row)


def posterior_bins(ps: PosteriorSet, i: int, cfg: EvalConfig) -> np.ndarray:
    """``N x B`` matrix of Q(s_i | x^(n))."""
    g = cfg.grid
    _check_grid(g)
    return bin_masses(ps.means[:, i], ps.stds[:, i], g.lo, g.hi, g.n_bins, cfg.bin_method)


def marginal_latent_pmf(ps: PosteriorSet, i: int, cfg: EvalConfig) -> Pmf:
    return Pmf(posterior_bins(ps, i, cfg).mean(axis=0))


def joint_latent_factor_pmf(
    ps: PosteriorSet, ft: FactorTable, i: int, k: int, cfg: EvalConfig
) -> JointPmf:
    """Q(s_i, y_k) = 1/N sum_n Q(s_i|x^(n)) p(y_k|x^(n)); rows are bins."""
    _check_same_n(ps, ft)
    table = posterior_bins(ps, i, cfg).T @ ft.factor_distribution(k) / ps.n_samples
    return JointPmf(table, ("latent-bin", "factor-value"))


def joint_latent_pair_pmf(ps: PosteriorSet, i: int, j: int, cfg: EvalConfig) -> JointPmf:
    """Q(s_i, s_j) under a factorized posterior: 1/N sum_n Q(s_i|x^(n)) Q(s_j|x^(n))."""
    if i == j:
        raise ValueError("joint_latent_pair_pmf needs two distinct latents")
    table = posterior_bins(ps, i, cfg).T @ posterior_bins(ps, j, cfg) / ps.n_samples
    return JointPmf(table)


def conditional_mean_bins(ps: PosteriorSet, i: int, grid: QuantizationGrid) -> np.ndarray:
    """Bin index of each posterior mean of latent ``i``; out-of-range means are clipped."""
    return clipped_bin_index(ps.means[:, i], grid.lo, grid.hi, grid.n_bins)


def conditional_mean_joint_pmf(ps: PosteriorSet, i: int, j: int, cfg: EvalConfig) -> JointPmf:
    if i == j:
        raise ValueError("conditional_mean_joint_pmf needs two distinct latents")
    g = cfg.grid
    _check_grid(g)
    a = conditional_mean_bins(ps, i, g)
    b = conditional_mean_bins(ps, j, g)
    counts = np.bincount(a * g.n_bins + b, minlength=g.n_bins * g.n_bins)
    return JointPmf(counts.reshape(g.n_bins, g.n_bins) / ps.n_samples)


def conditional_mean_entropy(ps: PosteriorSet, i: int, j: int, cfg: EvalConfig) -> float:
    """Entropy of the binned conditional means, computed from occupied cells only."""
    g = cfg.grid
    _check_grid(g)
    cells = conditional_mean_bins(ps, i, g) * g.n_bins + conditional_mean_bins(ps, j, g)
    _, counts = np.unique(cells, return_counts=True)
    return entropy_of(counts / ps.n_samples)


def latent_entropies(ps: PosteriorSet, i: int, cfg: EvalConfig) -> Tuple[float, float]:
    """(H_q(z_i), H_q(z_i | x)) for latent ``i``."""
    rows = posterior_bins(ps, i, cfg)
    marginal = entropy_of(rows.mean(axis=0))
    conditional = float(row_entropies(rows).mean())
    return marginal, conditional


def informativeness_quantized(ps: PosteriorSet, i: int, cfg: EvalConfig) -> Tuple[float, float]:
    """I(x, z_i) = H_q(z_i) - H_q(z_i|x), raw and divided by log B."""
    h, h_cond = latent_entropies(ps, i, cfg)
    mi = min(max(h - h_cond, 0.0), math.log(cfg.grid.n_bins))
    return mi, mi / math.log(cfg.grid.n_bins)


def _check_same_n(ps: PosteriorSet, ft: FactorTable):
    if ps.n_samples != ft.n_samples:
        raise ValueError(
            f"posteriors have {ps.n_samples} rows but factors have {ft.n_samples}"
        )
