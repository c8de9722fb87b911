"""Command-line interface: ``evaluate``, ``synth`` and ``oracle-check``.

Exit codes: 0 success, 1 oracle tolerance breach, 2 input error, 3 config error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from ._accel import backend, configure_threads
from .data import EvalConfig, QuantizationGrid, load_factors, load_posteriors, save_factors, save_posteriors
from .errors import ConfigError, DisMetricsError, InputError
from .metrics import ALL_METRICS

log = logging.getLogger("dismetrics")

EXIT_OK, EXIT_BREACH, EXIT_INPUT, EXIT_CONFIG = 0, 1, 2, 3


def _add_eval_options(p):
    p.add_argument("--bins", type=int, default=100)
    p.add_argument("--range", nargs=2, type=float, default=[-4.0, 4.0], metavar=("LO", "HI"))
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bin-method", default="erf", help="erf (default), erf-poly or rectangle")


def _config(args) -> EvalConfig:
    grid = QuantizationGrid(args.range[0], args.range[1], args.bins)
    return EvalConfig(grid, args.samples, args.seed, args.bin_method, getattr(args, "factor_bins", 20))


def _cardinalities(text):
    if text is None:
        return None
    try:
        return [int(c) for c in text.split(",") if c.strip()]
    except ValueError:
        raise ConfigError(f"bad --cardinalities {text!r}") from None


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def cmd_evaluate(args) -> int:
    from .report import evaluate, write_report

    t0 = time.perf_counter()
    cfg = _config(args)
    metrics = list(ALL_METRICS)
    if args.metrics:
        metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
        bad = [m for m in metrics if m not in ALL_METRICS]
        if bad:
            raise ConfigError(f"unknown metrics {bad}; choose from {list(ALL_METRICS)}")
    soft = {}
    for item in args.soft_labels or []:
        k, sep, path = item.partition("=")
        if not sep or not k.strip().isdigit():
            raise ConfigError(f"--soft-labels expects K=PATH, got {item!r}")
        soft[int(k)] = path
    try:
        ps = load_posteriors(args.posteriors, args.posterior_format)
        ft = load_factors(args.factors, soft, cfg.factor_bins) if args.factors else None
    except OSError as exc:
        raise InputError(str(exc)) from exc
    if ft is not None and ft.n_samples != ps.n_samples:
        raise InputError(f"posteriors have {ps.n_samples} rows but factors have {ft.n_samples}")
    t_load = time.perf_counter()
    report = evaluate(ps, ft, cfg, metrics)
    t_eval = time.perf_counter()
    written = write_report(report, args.out)
    t_write = time.perf_counter()
    inputs = {"posteriors": {"path": str(args.posteriors), "sha256": _sha256(args.posteriors)}}
    if args.factors:
        inputs["factors"] = {"path": str(args.factors), "sha256": _sha256(args.factors)}
    for k, path in sorted(soft.items()):
        inputs[f"soft_labels_{k}"] = {"path": str(path), "sha256": _sha256(path)}
    manifest = {
        "tool": "dismetrics",
        "version": __version__,
        "backend": backend(),
        "threads": configure_threads(),
        "inputs": inputs,
        "config": cfg.to_dict(),
        "metrics": metrics,
        "output_dir": str(args.out),
        "outputs": [p.name for p in written],
        "timings_s": {
            "load": t_load - t0,
            "evaluate": t_eval - t_load,
            "write": t_write - t_eval,
        },
    }
    (Path(args.out) / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    if not args.quiet:
        for p in written:
            print(p)
    return EXIT_OK


def cmd_synth(args) -> int:
    from .oracle import build_world

    _, ps, ft = build_world(args.preset, args.seed, smooth=args.smooth,
                            cardinalities=_cardinalities(args.cardinalities))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.format not in ("bin", "csv"):
        raise ConfigError(f"--format must be bin or csv, got {args.format!r}")
    post = out / f"posteriors.{args.format}"
    save_posteriors(ps, post, "csv" if args.format == "csv" else "binary")
    save_factors(ft, out / "factors.csv")
    if not args.quiet:
        print(post)
        print(out / "factors.csv")
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    from .check import oracle_check
    from .oracle import PRESETS

    cfg = _config(args)
    presets = list(PRESETS) if args.preset == "all" else [args.preset]
    for p in presets:
        if p not in PRESETS:
            raise ConfigError(f"unknown preset {p!r}; choose from {PRESETS} or 'all'")
    ok = True
    for p in presets:
        res = oracle_check(
            p, cfg, n_seeds=args.seeds, world_seed=args.world_seed, smooth=args.smooth,
            cardinalities=_cardinalities(args.cardinalities),
            library_range=tuple(args.corrupt_range) if args.corrupt_range else None,
        )
        for line in res.lines():
            print(line)
        ok = ok and res.passed
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_BREACH


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dismetrics", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evaluate", help="compute metrics from posterior (and factor) files")
    ev.add_argument("--posteriors", required=True)
    ev.add_argument("--posterior-format", default=None, help="csv or binary (default: by extension)")
    ev.add_argument("--factors", default=None)
    ev.add_argument("--soft-labels", action="append", metavar="K=PATH")
    _add_eval_options(ev)
    ev.add_argument("--metrics", default=None, help="comma list; default: all available")
    ev.add_argument("--factor-bins", type=int, default=20)
    ev.add_argument("--out", default=".")
    ev.add_argument("--quiet", action="store_true")
    ev.set_defaults(func=cmd_evaluate)

    sy = sub.add_parser("synth", help="write a synthetic preset world")
    sy.add_argument("--preset", required=True)
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--smooth", action="store_true")
    sy.add_argument("--cardinalities", default=None)
    sy.add_argument("--format", default="bin")
    sy.add_argument("--out", default=".")
    sy.add_argument("--quiet", action="store_true")
    sy.set_defaults(func=cmd_synth)

    oc = sub.add_parser("oracle-check", help="compare library metrics with exact enumeration")
    oc.add_argument("--preset", default="all")
    _add_eval_options(oc)
    oc.add_argument("--seeds", type=int, default=5)
    oc.add_argument("--world-seed", type=int, default=0)
    oc.add_argument("--smooth", action="store_true")
    oc.add_argument("--cardinalities", default=None)
    oc.add_argument("--corrupt-range", nargs=2, type=float, default=None, metavar=("LO", "HI"))
    oc.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    threads = configure_threads()
    log.debug("kernel backend %s, threads %s", backend(), threads)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConfigError as exc:
        print(f"config error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DisMetricsError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
