import csv
import io
import json
import math

import numpy as np
import pytest
from scipy.stats import norm

from dismetrics import (
    EvalConfig,
    FactorTable,
    MiMatrix,
    PosteriorSet,
    aggregate,
    correlation_matrices,
    evaluate,
    indin_at_k,
    jemmig,
    mi_matrix,
    misjed,
    modularity,
    rmig,
    sepin_at_k,
    windin,
    wsepin,
)
from dismetrics.errors import AllLatentsUninformative, EmptyFactors, KOutOfRange, SingleFactor
from dismetrics.metrics import CONDITIONAL_MEAN, LatentTables, factor_scores, sampled_summary
from dismetrics.oracle import build_jittered_world, build_world, exact_metrics

from conftest import shared_posterior, two_clusters


def _hq_standard_normal(n_bins=100, lo=-4.0, hi=4.0):
    p = np.diff(norm.cdf(np.linspace(lo, hi, n_bins + 1)))
    p /= p.sum()
    return float(-(p * np.log(p)).sum())


def test_misjed_of_two_noise_latents():
    raw, normed = misjed(shared_posterior(10, latents=2), 0, 1, EvalConfig())
    assert raw == pytest.approx(2 * _hq_standard_normal(), abs=1e-9)
    assert normed == pytest.approx(raw / (2 * math.log(100)))


def test_misjed_of_independent_sharp_pair():
    means = np.array([[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]])
    raw, _ = misjed(PosteriorSet(means, np.full((4, 2), 1e-3)), 0, 1, EvalConfig())
    assert raw == pytest.approx(0.0, abs=1e-6)


def test_misjed_ordering_on_mixed_world(cfg):
    _, ps, _ = build_world("mixed")
    ff = misjed(ps, 0, 1, cfg)[0]
    fn = misjed(ps, 0, 2, cfg)[0]
    nn = misjed(ps, 2, 3, cfg)[0]
    assert 0 <= ff < fn < nn


@pytest.mark.parametrize("k, expected", [(1, 3.0), (2, 2.0), (4, 1.0)])
def test_sepin_at_k(k, expected):
    assert sepin_at_k([3, 1, 0, 0], k) == expected
    assert indin_at_k([0, 3, 0, 1], k) == expected


@pytest.mark.parametrize("k", [0, 5])
def test_k_out_of_range(k):
    with pytest.raises(KOutOfRange):
        sepin_at_k([1, 2, 3, 4], k)


def test_wsepin_on_factorized_world(cfg, worlds):
    world, ps, _ = worlds["perfect"]
    s = sampled_summary(ps, cfg)
    _, exact = exact_metrics(world)
    assert wsepin(ps, cfg) == pytest.approx(exact["wsepin"], abs=0.05)
    assert windin(ps, cfg) == pytest.approx(wsepin(ps, cfg), abs=0.05)
    # equally informative independent latents: uniform weights
    ps3 = PosteriorSet(ps.means[:, :3], ps.stds[:, :3])
    s3 = sampled_summary(ps3, cfg)
    assert s.mi_x[3] == pytest.approx(0.0, abs=0.02)
    assert wsepin(ps3, cfg) == pytest.approx(np.dot(s3.mi_x, s3.sepin) / sum(s3.mi_x))


def test_single_informative_latent_among_noise(cfg):
    base = two_clusters(0.1)
    ps = base.append(shared_posterior(base.n_samples, latents=3))
    s = sampled_summary(ps, cfg)
    assert wsepin(ps, cfg) == pytest.approx(s.sepin[0], abs=0.02)


def test_windin_not_above_wsepin_with_duplicate(cfg, worlds):
    _, ps, _ = worlds["redundant-pair"]
    assert windin(ps, cfg) <= wsepin(ps, cfg) + 1e-9


def test_all_noise_is_uninformative(cfg):
    with pytest.raises(AllLatentsUninformative):
        wsepin(shared_posterior(12, latents=3), cfg)
    with pytest.raises(AllLatentsUninformative):
        windin(shared_posterior(12, latents=3), cfg)


def test_mi_matrix_of_perfect_code(cfg, worlds):
    _, ps, ft = worlds["perfect"]
    mi = mi_matrix(ps, ft, cfg).values
    h = [math.log(c) for c in ft.cardinalities]
    np.testing.assert_allclose(np.diag(mi[:3]), h, atol=1e-6)
    off = mi.copy()
    off[np.arange(3), np.arange(3)] = 0.0
    assert np.max(off) < 1e-6


def test_conditional_mean_overestimates_noise():
    ps, ft = build_jittered_world()
    cfg = EvalConfig()
    full = mi_matrix(ps, ft, cfg).values
    cm = mi_matrix(ps, ft, cfg, CONDITIONAL_MEAN).values
    assert np.max(cm - full) > 0.1


@pytest.mark.parametrize("k", [0, 1, 2])
def test_rmig_and_jemmig_on_perfect_code(cfg, worlds, k):
    _, ps, ft = worlds["perfect"]
    assert rmig(ps, ft, k, cfg)[1] == pytest.approx(1.0, abs=1e-6)
    assert jemmig(ps, ft, k, cfg)[0] == pytest.approx(0.0, abs=0.02)


def test_rmig_and_jemmig_on_noise(cfg):
    ps = shared_posterior(8, latents=2)
    ft = FactorTable(np.tile([0, 1], 4))
    assert rmig(ps, ft, 0, cfg) == (0.0, 0.0)
    raw, normed = jemmig(ps, ft, 0, cfg)
    assert raw == pytest.approx(_hq_standard_normal() + math.log(2), abs=1e-9)
    assert normed == pytest.approx(raw / (math.log(100) + math.log(2)))


def test_rmig_of_duplicated_code(cfg):
    ps = two_clusters(0.01, latents=2)
    ft = FactorTable(np.repeat([0, 1], 10))
    assert rmig(ps, ft, 0, cfg)[0] == pytest.approx(0.0, abs=1e-12)


def test_rmig_of_constant_factor_is_zero(cfg):
    ps = two_clusters(0.1, latents=2)
    s = factor_scores(LatentTables(ps, cfg, FactorTable(np.zeros(20, int))), 0)
    assert s.degenerate_factor and s.rmig_normalized == 0.0


def test_aggregate():
    assert aggregate([0.7]) == 0.7
    assert aggregate([0.2, 0.4]) == pytest.approx(0.3)
    with pytest.raises(EmptyFactors):
        aggregate([])


def test_modularity():
    assert modularity(MiMatrix(np.array([[0.0, 0.8, 0.0]]))) == [1.0]
    assert modularity(MiMatrix(np.array([[0.5, 0.5, 0.5]]))) == [0.0]
    assert modularity(MiMatrix(np.zeros((1, 3)))) == [None]
    with pytest.raises(SingleFactor):
        modularity(MiMatrix(np.ones((2, 1))))


def test_correlations_of_identical_latents(cfg):
    ps = two_clusters(1e-9, latents=2)
    c = correlation_matrices(ps, cfg)
    assert c.means[0, 1] == pytest.approx(1.0)
    assert c.samples[0, 1] == pytest.approx(1.0)


def test_correlations_of_noise_within_null_bound(cfg):
    n = 2000
    rng = np.random.default_rng(0)
    ps = PosteriorSet(rng.normal(size=(n, 3)), np.ones((n, 3)))
    c = correlation_matrices(ps, cfg)
    off = c.samples[~np.eye(3, dtype=bool)]
    assert np.all(np.abs(off) < 3 / math.sqrt(n))
    assert np.all(np.diag(c.samples) == 1.0)


def test_zero_variance_column_is_flagged(cfg):
    ps = PosteriorSet(np.array([[0.0, 1.0], [0.0, 2.0], [0.0, 3.0]]), np.ones((3, 2)))
    c = correlation_matrices(ps, cfg)
    assert c.zero_variance_means == [0] and c.means[0, 1] == 0.0


def test_sampled_corr_below_mean_corr():
    ps, _ = build_jittered_world()
    c = correlation_matrices(ps, EvalConfig())
    off = ~np.eye(ps.n_latents, dtype=bool)
    assert np.all(np.abs(c.samples[off]) < np.abs(c.means[off]))


# -------------------------------------------------- report-level invariants

def _scalar(report, key):
    v = report[key]
    return v["mean"] if isinstance(v, dict) else v


AGGREGATES = ["wsepin", "windin", "sepin_mean", "mi_x_z"]
FACTOR_AGGREGATES = ["rmig", "rmig_normalized", "jemmig", "jemmig_normalized"]


def test_latent_permutation_invariance(cfg, worlds):
    _, ps, ft = worlds["entangled"]
    perm = [2, 0, 1]
    a = evaluate(ps, ft, cfg).to_dict()
    b = evaluate(PosteriorSet(ps.means[:, perm], ps.stds[:, perm]), ft, cfg).to_dict()
    np.testing.assert_allclose(np.array(b["informativeness"]), np.array(a["informativeness"])[perm], atol=1e-12)
    for key in FACTOR_AGGREGATES:
        assert b[key]["mean"] == pytest.approx(a[key]["mean"], abs=1e-9)
    for key in AGGREGATES:
        assert _scalar(b, key) == pytest.approx(_scalar(a, key), abs=0.05)


def test_sample_permutation_invariance(cfg, worlds):
    _, ps, ft = worlds["mixed"]
    order = np.random.default_rng(1).permutation(ps.n_samples)
    a = evaluate(ps, ft, cfg, ["informativeness", "misjed", "rmig", "jemmig", "modularity"]).to_dict()
    b = evaluate(ps.permute_samples(order), ft.permute_samples(order), cfg,
                 ["informativeness", "misjed", "rmig", "jemmig", "modularity"]).to_dict()
    for key in ("informativeness", "misjed", "rmig", "jemmig", "modularity"):
        np.testing.assert_allclose(_flat(a[key]), _flat(b[key]), rtol=0, atol=1e-12)


def _flat(obj):
    out = []
    if isinstance(obj, dict):
        for v in obj.values():
            out += _flat(v)
    elif isinstance(obj, list):
        for v in obj:
            out += _flat(v)
    else:
        out.append(np.nan if obj is None else float(obj))
    return out


@pytest.mark.parametrize("preset", ["perfect", "entangled", "mixed", "noise-only"])
def test_factor_score_ranges(cfg, worlds, preset):
    _, ps, ft = worlds[preset]
    tables = LatentTables(ps, cfg, ft)
    for k in range(ft.n_factors):
        s = factor_scores(tables, k)
        h = s.factor_entropy
        assert -1e-12 <= s.rmig <= h + 1e-6
        assert 0 <= s.rmig_normalized <= 1
        assert 0 <= s.jemmig <= h + math.log(100) + 1e-6
        assert 0 <= s.jemmig_normalized <= 1
        assert s.rmig == pytest.approx(s.mi_best - s.mi_runner_up)


def test_csv_matches_json(cfg, worlds):
    _, ps, ft = worlds["mixed"]
    rep = evaluate(ps, ft, cfg)
    rows = dict(csv.reader(io.StringIO(rep.to_csv())))
    doc = json.loads(rep.to_json())
    assert float(rows["wsepin"]) == pytest.approx(doc["wsepin"], rel=1e-12)
    assert float(rows["rmig.mean"]) == pytest.approx(doc["rmig"]["mean"], rel=1e-12)
    assert float(rows["misjed.0.1"]) == pytest.approx(doc["misjed"][0][1], rel=1e-12)


def test_missing_factors_are_marked_skipped(cfg, worlds):
    _, ps, _ = worlds["mixed"]
    rep = evaluate(ps, None, cfg).to_dict()
    assert rep["rmig"] == {"skipped": "missing factors"}
    assert "wsepin" in rep and "misjed" in rep
