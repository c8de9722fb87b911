"""Disentanglement scores assembled from quantized tables and sampled entropies.

Quantized estimates feed informativeness, MISJED, the latent/factor mutual
information matrix, RMIG, JEMMIG and modularity; the Monte Carlo estimator
feeds I(x, z), the SEPIN/INDIN components and their aggregates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .data import EvalConfig, FactorTable, PosteriorSet, empirical_factor_entropy
from .errors import (
    AllLatentsUninformative,
    EmptyFactors,
    KOutOfRange,
    SingleFactor,
    SingleLatent,
)
from .quantizer import (
    conditional_mean_bins,
    conditional_mean_entropy,
    entropy_of,
    posterior_bins,
    row_entropies,
)
from .sampler import LatentSubset, SampledEntropies

FULL_POSTERIOR = "full-posterior"
CONDITIONAL_MEAN = "conditional-mean"

UNINFORMATIVE_TOTAL = 1e-6
ZERO_ROW = 1e-10

ALL_METRICS = (
    "informativeness",
    "misjed",
    "sepin",
    "indin",
    "rmig",
    "jemmig",
    "modularity",
    "correlation",
)
FACTOR_METRICS = ("rmig", "jemmig", "modularity")


# ------------------------------------------------------------ latent tables


class LatentTables:
    """Per-latent quantized summaries, computed in one pass over each latent.

    Holds H_q(z_i), H_q(z_i|x) and, when factors are given, the joint tables
    Q(s_i, y_k) for every factor. The ``N x B`` bin matrices are not retained.
    """

    def __init__(self, ps: PosteriorSet, cfg: EvalConfig, ft: Optional[FactorTable] = None):
        if ft is not None and ft.n_samples != ps.n_samples:
            raise ValueError(f"posteriors have {ps.n_samples} rows but factors have {ft.n_samples}")
        self.ps, self.cfg, self.ft = ps, cfg, ft
        L = ps.n_latents
        self.marginal_entropy = np.empty(L)
        self.conditional_entropy = np.empty(L)
        self.joint: List[List[np.ndarray]] = []
        factor_dists = [ft.factor_distribution(k) for k in range(ft.n_factors)] if ft else []
        for i in range(L):
            rows = posterior_bins(ps, i, cfg)
            self.marginal_entropy[i] = entropy_of(rows.mean(axis=0))
            self.conditional_entropy[i] = row_entropies(rows).mean()
            self.joint.append([rows.T @ f / ps.n_samples for f in factor_dists])

    def informativeness(self) -> np.ndarray:
        mi = self.marginal_entropy - self.conditional_entropy
        return np.clip(mi, 0.0, math.log(self.cfg.grid.n_bins))

    def joint_entropy(self, i: int, k: int) -> float:
        return entropy_of(self.joint[i][k])

    def mi(self, i: int, k: int) -> float:
        t = self.joint[i][k]
        mi = entropy_of(t.sum(axis=1)) + entropy_of(t.sum(axis=0)) - entropy_of(t)
        return max(mi, 0.0)


# ------------------------------------------------------------------- MISJED


def misjed(ps: PosteriorSet, i: int, j: int, cfg: EvalConfig):
    """H_q(z_i) + H_q(z_j) - H(binned conditional means); returns (raw, normalized)."""
    if i == j:
        raise ValueError("MISJED needs two distinct latents")
    h = []
    for a in (i, j):
        rows = posterior_bins(ps, a, cfg)
        h.append(entropy_of(rows.mean(axis=0)))
    value = max(h[0] + h[1] - conditional_mean_entropy(ps, i, j, cfg), 0.0)
    return value, value / (2.0 * math.log(cfg.grid.n_bins))


def misjed_table(tables: LatentTables) -> np.ndarray:
    """L x L MISJED matrix with NaN on the diagonal."""
    ps, cfg = tables.ps, tables.cfg
    L = ps.n_latents
    out = np.full((L, L), np.nan)
    for i in range(L):
        for j in range(i + 1, L):
            v = tables.marginal_entropy[i] + tables.marginal_entropy[j]
            v -= conditional_mean_entropy(ps, i, j, cfg)
            out[i, j] = out[j, i] = max(v, 0.0)
    return out


# ------------------------------------------------------- SEPIN / INDIN family


def _top_k_mean(components: Sequence[float], k: int) -> float:
    comp = np.asarray(components, dtype=float)
    if not 1 <= k <= comp.size:
        raise KOutOfRange(f"k must be in [1, {comp.size}], got {k}")
    order = np.argsort(-comp, kind="stable")
    return float(comp[order[:k]].mean())


def sepin_at_k(components: Sequence[float], k: int) -> float:
    """Mean of the ``k`` largest components (ties go to the lower latent index)."""
    return _top_k_mean(components, k)


def indin_at_k(components: Sequence[float], k: int) -> float:
    return _top_k_mean(components, k)


def informativeness_weights(informativeness: Sequence[float]) -> np.ndarray:
    w = np.asarray(informativeness, dtype=float)
    total = w.sum()
    if total <= UNINFORMATIVE_TOTAL:
        raise AllLatentsUninformative(
            f"sum of I(x, z_i) is {total:.3g}; informativeness weights are undefined"
        )
    return w / total


def weighted_by_informativeness(components: Sequence[float], informativeness: Sequence[float]) -> float:
    return float(np.dot(informativeness_weights(informativeness), np.asarray(components, dtype=float)))


@dataclass
class SampledSummary:
    """Monte Carlo quantities for one posterior set under one seed."""

    mi_x: List[float]
    mi_x_raw: List[float]
    mi_x_all: float
    mi_x_all_raw: float
    sepin: List[float]
    sepin_raw: List[float]
    indin: List[float]
    single_latent: bool = False


def sampled_summary(ps: PosteriorSet, cfg: EvalConfig, want_indin: bool = True) -> SampledSummary:
    est = SampledEntropies(ps, cfg)
    L = ps.n_latents
    mi = [est.mi_x([i]) for i in range(L)]
    full = est.mi_x(LatentSubset.all(L))
    if L == 1:
        # no z_-i: the conditional information reduces to I(x, z_0)
        return SampledSummary(
            [m.value for m in mi], [m.raw for m in mi], full.value, full.raw,
            [mi[0].value], [mi[0].raw], [mi[0].raw], single_latent=True,
        )
    sep = [est.sepin(i) for i in range(L)]
    ind = [est.indin(i).value for i in range(L)] if want_indin else []
    return SampledSummary(
        [m.value for m in mi], [m.raw for m in mi], full.value, full.raw,
        [s.value for s in sep], [s.raw for s in sep], ind,
    )


def wsepin(ps: PosteriorSet, cfg: EvalConfig) -> float:
    """Informativeness-weighted mean of the SEPIN components."""
    s = sampled_summary(ps, cfg, want_indin=False)
    return weighted_by_informativeness(s.sepin, s.mi_x)


def windin(ps: PosteriorSet, cfg: EvalConfig) -> float:
    """Informativeness-weighted mean of the signed INDIN components."""
    s = sampled_summary(ps, cfg)
    return weighted_by_informativeness(s.indin, s.mi_x)


# ------------------------------------------------- latent/factor information


@dataclass(frozen=True, eq=False)
class MiMatrix:
    values: np.ndarray
    mode: str = FULL_POSTERIOR

    @property
    def n_latents(self) -> int:
        return self.values.shape[0]

    @property
    def n_factors(self) -> int:
        return self.values.shape[1]


def _conditional_mean_mi(ps: PosteriorSet, ft: FactorTable, cfg: EvalConfig) -> np.ndarray:
    g = cfg.grid
    out = np.empty((ps.n_latents, ft.n_factors))
    dists = [ft.factor_distribution(k) for k in range(ft.n_factors)]
    for i in range(ps.n_latents):
        bins = conditional_mean_bins(ps, i, g)
        for k, f in enumerate(dists):
            t = np.zeros((g.n_bins, f.shape[1]))
            np.add.at(t, bins, f / ps.n_samples)
            mi = entropy_of(t.sum(axis=1)) + entropy_of(t.sum(axis=0)) - entropy_of(t)
            out[i, k] = max(mi, 0.0)
    return out


def mi_matrix(ps: PosteriorSet, ft: FactorTable, cfg: EvalConfig, mode: str = FULL_POSTERIOR,
              tables: Optional[LatentTables] = None) -> MiMatrix:
    """L x K matrix of quantized I(z_i, y_k).

    ``conditional-mean`` mode bins the posterior means as point masses
    instead of integrating the full posteriors.
    """
    if ps.n_samples != ft.n_samples:
        raise ValueError(f"posteriors have {ps.n_samples} rows but factors have {ft.n_samples}")
    if mode == CONDITIONAL_MEAN:
        return MiMatrix(_conditional_mean_mi(ps, ft, cfg), mode)
    if mode != FULL_POSTERIOR:
        raise ValueError(f"unknown mode {mode!r}")
    tables = tables or LatentTables(ps, cfg, ft)
    vals = np.array([[tables.mi(i, k) for k in range(ft.n_factors)] for i in range(ps.n_latents)])
    return MiMatrix(vals.reshape(ps.n_latents, ft.n_factors), mode)


def top_two(column: Sequence[float]):
    """Indices of the largest and second largest entries (lowest index wins ties)."""
    order = np.argsort(-np.asarray(column, dtype=float), kind="stable")
    return int(order[0]), int(order[1])


@dataclass
class FactorScores:
    factor: int
    best: int
    runner_up: int
    mi_best: float
    mi_runner_up: float
    factor_entropy: float
    latent_entropy: float
    joint_entropy: float
    n_bins: int
    rmig: float = field(init=False)
    rmig_normalized: float = field(init=False)
    jemmig: float = field(init=False)
    jemmig_normalized: float = field(init=False)
    degenerate_factor: bool = field(init=False)

    def __post_init__(self):
        self.rmig = self.mi_best - self.mi_runner_up
        self.degenerate_factor = self.factor_entropy <= 1e-12
        self.rmig_normalized = 0.0 if self.degenerate_factor else min(self.rmig / self.factor_entropy, 1.0)
        self.jemmig = max(self.joint_entropy - self.mi_best + self.mi_runner_up, 0.0)
        self.jemmig_normalized = self.jemmig / (math.log(self.n_bins) + self.factor_entropy)

    def gaps(self) -> Dict[str, float]:
        return {
            "joint_entropy_gap": self.joint_entropy - self.mi_best,
            "latent_entropy_gap": self.latent_entropy - self.mi_best,
            "factor_entropy_gap": self.factor_entropy - self.mi_best,
        }


def factor_scores(tables: LatentTables, k: int, mi: Optional[MiMatrix] = None) -> FactorScores:
    if tables.ps.n_latents < 2:
        raise SingleLatent("RMIG and JEMMIG need at least two latents")
    mi = mi or mi_matrix(tables.ps, tables.ft, tables.cfg, tables=tables)
    col = mi.values[:, k]
    best, runner = top_two(col)
    return FactorScores(
        factor=k,
        best=best,
        runner_up=runner,
        mi_best=float(col[best]),
        mi_runner_up=float(col[runner]),
        factor_entropy=empirical_factor_entropy(tables.ft, k),
        latent_entropy=float(tables.marginal_entropy[best]),
        joint_entropy=tables.joint_entropy(best, k),
        n_bins=tables.cfg.grid.n_bins,
    )


def rmig(ps: PosteriorSet, ft: FactorTable, k: int, cfg: EvalConfig):
    """Gap between the two largest I(z_i, y_k); returns (raw, normalized by H(y_k))."""
    s = factor_scores(LatentTables(ps, cfg, ft), k)
    return s.rmig, s.rmig_normalized


def jemmig(ps: PosteriorSet, ft: FactorTable, k: int, cfg: EvalConfig):
    """H(z_i*, y_k) - I(z_i*, y_k) + I(z_j, y_k); returns (raw, normalized). Lower is better."""
    s = factor_scores(LatentTables(ps, cfg, ft), k)
    return s.jemmig, s.jemmig_normalized


def aggregate(per_factor: Sequence[float]) -> float:
    """Unweighted mean over factors."""
    vals = list(per_factor)
    if not vals:
        raise EmptyFactors("no factors to aggregate")
    return float(np.mean(vals))


# --------------------------------------------------------------- modularity


def modularity(mi: MiMatrix) -> List[Optional[float]]:
    """Per-latent modularity; ``None`` for latents whose MI row is all zero."""
    vals = np.asarray(mi.values if isinstance(mi, MiMatrix) else mi, dtype=float)
    K = vals.shape[1]
    if K < 2:
        raise SingleFactor("modularity is undefined for a single factor")
    out: List[Optional[float]] = []
    for row in vals:
        k_star = int(np.argmax(row))
        peak = row[k_star]
        if peak <= ZERO_ROW:
            out.append(None)
            continue
        template = np.zeros(K)
        template[k_star] = peak
        dev = ((row - template) ** 2).sum()
        out.append(float(1.0 - dev / (peak * peak * (K - 1))))
    return out


def mean_defined(values: Sequence[Optional[float]]) -> Optional[float]:
    v = [x for x in values if x is not None]
    return float(np.mean(v)) if v else None


# -------------------------------------------------------------- correlation


def _pearson(x: np.ndarray):
    centered = x - x.mean(axis=0)
    scale = np.sqrt((centered**2).sum(axis=0))
    flat = scale <= 1e-300
    safe = np.where(flat, 1.0, scale)
    u = centered / safe
    corr = u.T @ u
    corr[flat, :] = 0.0
    corr[:, flat] = 0.0
    corr = np.clip(corr, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return corr, [int(i) for i in np.flatnonzero(flat)]


@dataclass
class Correlations:
    samples: np.ndarray
    means: np.ndarray
    zero_variance_samples: List[int]
    zero_variance_means: List[int]


def correlation_matrices(ps: PosteriorSet, cfg: EvalConfig) -> Correlations:
    """Pearson correlations of one posterior draw per data point and of the posterior means.

    Zero-variance latents get 0 off-diagonal entries and are listed.
    """
    if ps.n_latents < 2:
        raise SingleLatent("correlation matrices need at least two latents")
    n = ps.n_samples
    draws = np.empty_like(ps.means)
    for i in range(ps.n_latents):
        eps = np.random.default_rng([cfg.rng_seed, i + 1]).standard_normal(n)
        draws[:, i] = ps.means[:, i] + ps.stds[:, i] * eps
    cs, fs = _pearson(draws)
    cm, fm = _pearson(np.asarray(ps.means))
    return Correlations(cs, cm, fs, fm)
