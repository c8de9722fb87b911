"""Library-versus-oracle comparison used by ``oracle-check`` and the acceptance suite."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

from .data import EvalConfig, QuantizationGrid
from .oracle import (
    QUANTIZED_KEYS,
    QUANTIZED_TOL,
    SAMPLED_KEYS,
    SAMPLED_TOL,
    average_reports,
    build_world,
    exact_metrics,
    max_deviation,
)
from .report import evaluate


@dataclass
class CheckResult:
    preset: str
    deviations: Dict[str, float]
    tolerances: Dict[str, float]

    @property
    def passed(self) -> bool:
        return all(self.deviations[k] <= self.tolerances[k] for k in self.deviations)

    def lines(self):
        for k in self.deviations:
            ok = "ok" if self.deviations[k] <= self.tolerances[k] else "FAIL"
            yield f"{self.preset:15s} {k:28s} {self.deviations[k]:.3e}  tol={self.tolerances[k]:g}  {ok}"


def oracle_check(
    preset: str,
    cfg: EvalConfig,
    n_seeds: int = 5,
    world_seed: int = 0,
    smooth: bool = False,
    cardinalities: Optional[Sequence[int]] = None,
    library_range: Optional[Tuple[float, float]] = None,
) -> CheckResult:
    """Run the library on a preset world and compare with exact enumeration.

    Quantized metrics come from a single library run; sampled ones are
    averaged over ``n_seeds`` consecutive seeds starting at ``cfg.rng_seed``.
    ``library_range`` deliberately evaluates the library on another value
    range (a negative control).
    """
    world, ps, ft = build_world(preset, world_seed, smooth=smooth, cardinalities=cardinalities)
    _, exact = exact_metrics(world, cfg.grid, cfg.bin_method)
    lib_cfg = cfg
    if library_range is not None:
        lib_cfg = cfg.with_grid(lo=library_range[0], hi=library_range[1])
    runs = [evaluate(ps, ft, lib_cfg.with_seed(cfg.rng_seed + s)).to_dict() for s in range(max(1, n_seeds))]
    quantized = runs[0]
    sampled = average_reports(runs, SAMPLED_KEYS)
    dev, tol = {}, {}
    for key in QUANTIZED_KEYS:
        if key in exact:
            dev[key] = max_deviation(quantized.get(key), exact[key])
            tol[key] = QUANTIZED_TOL
    for key in SAMPLED_KEYS:
        if key in exact:
            dev[key] = max_deviation(sampled.get(key), exact[key])
            tol[key] = SAMPLED_TOL
    return CheckResult(preset, dev, tol)
