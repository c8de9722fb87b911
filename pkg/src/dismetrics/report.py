"""Full metric report: assembly, JSON and CSV serialization, plot data."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

import numpy as np

from .data import EvalConfig, FactorTable, PosteriorSet, empirical_factor_entropy
from .errors import AllLatentsUninformative, SingleFactor
from .metrics import (
    ALL_METRICS,
    CONDITIONAL_MEAN,
    FACTOR_METRICS,
    LatentTables,
    aggregate,
    correlation_matrices,
    factor_scores,
    indin_at_k,
    informativeness_weights,
    mean_defined,
    mi_matrix,
    misjed_table,
    modularity,
    sampled_summary,
    sepin_at_k,
)

MISSING_FACTORS = "missing factors"


def _clean(x):
    """Convert numpy containers/scalars to JSON-ready Python; NaN/inf become None."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


@dataclass
class MetricReport:
    """Ordered mapping of metric name to value, plus flags and skipped entries."""

    values: Dict[str, Any] = field(default_factory=dict)
    flags: List[str] = field(default_factory=list)

    def __getitem__(self, key):
        return self.values[key]

    def __contains__(self, key):
        return key in self.values

    def to_dict(self) -> Dict[str, Any]:
        out = dict(self.values)
        out["flags"] = list(self.flags)
        return _clean(out)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        for key, value in flatten(self.to_dict()):
            w.writerow([key, _csv_cell(value)])
        return buf.getvalue()


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def flatten(obj, prefix: str = "") -> Iterable:
    """Yield ``(dotted.key, scalar)`` pairs in document order."""
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from flatten(v, f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, list):
        if not obj:
            yield prefix, ""
        for i, v in enumerate(obj):
            yield from flatten(v, f"{prefix}.{i}")
    else:
        yield prefix, obj


def _skipped(reason):
    return {"skipped": reason}


def evaluate(
    ps: PosteriorSet,
    ft: Optional[FactorTable],
    cfg: EvalConfig,
    metrics: Optional[Iterable[str]] = None,
) -> MetricReport:
    """Compute every requested metric; factor-based ones are marked skipped without factors."""
    wanted = list(ALL_METRICS if metrics is None else metrics)
    unknown = [m for m in wanted if m not in ALL_METRICS]
    if unknown:
        raise ValueError(f"unknown metrics {unknown}; choose from {list(ALL_METRICS)}")
    rep = MetricReport()
    v = rep.values
    L = ps.n_latents
    log_b = math.log(cfg.grid.n_bins)
    v["config"] = cfg.to_dict()
    v["n_samples"] = ps.n_samples
    v["n_latents"] = L
    v["n_factors"] = ft.n_factors if ft is not None else 0

    quantized = {"informativeness", "misjed", "rmig", "jemmig", "modularity"} & set(wanted)
    factored = ft if (ft is not None and set(FACTOR_METRICS) & set(wanted)) else None
    tables = LatentTables(ps, cfg, factored) if quantized else None

    if "informativeness" in wanted:
        info = tables.informativeness()
        v["informativeness"] = info
        v["informativeness_normalized"] = info / log_b
        v["latent_entropy"] = tables.marginal_entropy.copy()
        v["latent_conditional_entropy"] = tables.conditional_entropy.copy()

    if "misjed" in wanted:
        if L < 2:
            v["misjed"] = _skipped("needs at least two latents")
        else:
            table = misjed_table(tables)
            v["misjed"] = table
            v["misjed_normalized"] = table / (2.0 * log_b)

    if {"sepin", "indin"} & set(wanted):
        s = sampled_summary(ps, cfg, want_indin="indin" in wanted)
        if s.single_latent:
            rep.flags.append("single latent: SEPIN/INDIN components fall back to I(x, z_0)")
        v["informativeness_sampled"] = s.mi_x
        v["informativeness_sampled_raw"] = s.mi_x_raw
        v["mi_x_z"] = s.mi_x_all
        v["mi_x_z_raw"] = s.mi_x_all_raw
        try:
            weights = informativeness_weights(s.mi_x)
        except AllLatentsUninformative:
            weights = None
            rep.flags.append("all latents uninformative: WSEPIN/WINDIN undefined")
        v["informativeness_weights"] = (
            _skipped("all latents uninformative") if weights is None else weights
        )
        if "sepin" in wanted:
            v["sepin"] = s.sepin
            v["sepin_raw"] = s.sepin_raw
            v["sepin_at_k"] = [sepin_at_k(s.sepin, k) for k in range(1, L + 1)]
            v["sepin_mean"] = float(np.mean(s.sepin))
            v["wsepin"] = (
                None if weights is None else float(np.dot(weights, s.sepin))
            )
        if "indin" in wanted:
            v["indin"] = s.indin
            v["indin_at_k"] = [indin_at_k(s.indin, k) for k in range(1, L + 1)]
            v["windin"] = (
                None if weights is None else float(np.dot(weights, s.indin))
            )

    factor_wanted = [m for m in FACTOR_METRICS if m in wanted]
    if factor_wanted and ft is None:
        for m in factor_wanted:
            v[m] = _skipped(MISSING_FACTORS)
            if m != "modularity":
                v[m + "_normalized"] = _skipped(MISSING_FACTORS)
    elif factor_wanted:
        mi = mi_matrix(ps, ft, cfg, tables=tables)
        v["factor_entropy"] = [empirical_factor_entropy(ft, k) for k in range(ft.n_factors)]
        v["mi_matrix"] = mi.values
        if {"rmig", "jemmig"} & set(factor_wanted):
            if L < 2:
                for m in ("rmig", "jemmig"):
                    if m in factor_wanted:
                        v[m] = v[m + "_normalized"] = _skipped("needs at least two latents")
            else:
                scores = [factor_scores(tables, k, mi) for k in range(ft.n_factors)]
                v["top_latents"] = [[s.best, s.runner_up] for s in scores]
                for s in scores:
                    if s.degenerate_factor:
                        rep.flags.append(f"factor {s.factor} has zero entropy: normalized RMIG set to 0")
                if "rmig" in factor_wanted:
                    per = [s.rmig for s in scores]
                    per_n = [s.rmig_normalized for s in scores]
                    v["rmig"] = {"per_factor": per, "mean": aggregate(per)}
                    v["rmig_normalized"] = {"per_factor": per_n, "mean": aggregate(per_n)}
                if "jemmig" in factor_wanted:
                    per = [s.jemmig for s in scores]
                    per_n = [s.jemmig_normalized for s in scores]
                    v["jemmig"] = {"per_factor": per, "mean": aggregate(per)}
                    v["jemmig_normalized"] = {"per_factor": per_n, "mean": aggregate(per_n)}
                    v["interpretability_gaps"] = [s.gaps() for s in scores]
        if "modularity" in factor_wanted:
            cm = mi_matrix(ps, ft, cfg, mode=CONDITIONAL_MEAN)
            v["mi_matrix_conditional_mean"] = cm.values
            try:
                full = modularity(mi)
                orig = modularity(cm)
                v["modularity"] = {"per_latent": full, "mean": mean_defined(full)}
                v["modularity_original"] = {"per_latent": orig, "mean": mean_defined(orig)}
            except SingleFactor:
                v["modularity"] = _skipped("undefined for a single factor")
                v["modularity_original"] = _skipped("undefined for a single factor")

    if "correlation" in wanted:
        if L < 2:
            v["correlation"] = _skipped("needs at least two latents")
        else:
            c = correlation_matrices(ps, cfg)
            v["correlation"] = {
                "samples": c.samples,
                "means": c.means,
                "zero_variance_samples": c.zero_variance_samples,
                "zero_variance_means": c.zero_variance_means,
            }
            if c.zero_variance_samples or c.zero_variance_means:
                rep.flags.append("zero-variance latent: correlation entries reported as 0")
    return rep


# ------------------------------------------------------------------ writing


def plot_data(report: MetricReport) -> Dict[str, str]:
    """CSV text for the informativeness bar chart and the MISJED heat map."""
    files = {}
    d = report.to_dict()
    if isinstance(d.get("informativeness"), list):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["latent", "informativeness", "informativeness_normalized"])
        for i, (a, b) in enumerate(zip(d["informativeness"], d["informativeness_normalized"])):
            w.writerow([i, repr(a), repr(b)])
        files["informativeness_bars.csv"] = buf.getvalue()
    if isinstance(d.get("misjed_normalized"), list):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        L = len(d["misjed_normalized"])
        w.writerow(["latent"] + [f"z_{j}" for j in range(L)])
        for i, row in enumerate(d["misjed_normalized"]):
            w.writerow([f"z_{i}"] + [_csv_cell(x) for x in row])
        files["misjed_heatmap.csv"] = buf.getvalue()
    return files


def write_report(report: MetricReport, out_dir) -> List[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in [("report.json", report.to_json()), ("report.csv", report.to_csv())] + sorted(
        plot_data(report).items()
    ):
        p = out / name
        p.write_text(text, encoding="utf-8")
        written.append(p)
    return written
