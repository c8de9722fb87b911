"""Domain types and file ingestion for posteriors and factor labels."""
from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import (
    ConfigError,
    DegenerateGrid,
    InvalidValue,
    LabelOutOfRange,
    MalformedFile,
)

BINARY_MAGIC = b"DMET"
BINARY_VERSION = 1
_HEADER = struct.Struct("<4sIQI")

BIN_METHODS = ("rectangle", "erf", "erf-poly")


def _frozen(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PosteriorSet:
    """Diagonal-Gaussian encoder posteriors, one row per data point."""

    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        means = np.asarray(self.means, dtype=np.float64)
        stds = np.asarray(self.stds, dtype=np.float64)
        if means.ndim == 1:
            means = means[:, None]
        if stds.ndim == 1:
            stds = stds[:, None]
        if means.ndim != 2 or means.shape != stds.shape:
            raise InvalidValue(
                f"means and stds must be matching N x L matrices, got {means.shape} and {stds.shape}"
            )
        if means.shape[0] < 1 or means.shape[1] < 1:
            raise InvalidValue(f"need N >= 1 and L >= 1, got shape {means.shape}")
        if not (np.isfinite(means).all() and np.isfinite(stds).all()):
            raise InvalidValue("posterior parameters must be finite")
        if not (stds > 0).all():
            raise InvalidValue("every posterior std must be > 0")
        object.__setattr__(self, "means", _frozen(means))
        object.__setattr__(self, "stds", _frozen(stds))

    @property
    def n_samples(self) -> int:
        return self.means.shape[0]

    @property
    def n_latents(self) -> int:
        return self.means.shape[1]

    def select(self, latents: Sequence[int]) -> "PosteriorSet":
        idx = list(latents)
        return PosteriorSet(self.means[:, idx], self.stds[:, idx])

    def permute_samples(self, order) -> "PosteriorSet":
        return PosteriorSet(self.means[order], self.stds[order])

    def append(self, other: "PosteriorSet") -> "PosteriorSet":
        """Concatenate latents of two posterior sets over the same data points."""
        return PosteriorSet(
            np.hstack([self.means, other.means]), np.hstack([self.stds, other.stds])
        )


@dataclass(frozen=True, eq=False)
class FactorTable:
    """Discrete ground-truth factors with optional soft label distributions.

    ``soft_labels`` maps a factor index to an ``N x C_k`` row-stochastic
    matrix that replaces the hard labels of that factor.
    """

    labels: np.ndarray
    cardinalities: tuple = None
    soft_labels: Mapping[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim == 1:
            labels = labels[:, None]
        if labels.ndim != 2:
            raise MalformedFile(f"labels must be an N x K matrix, got shape {labels.shape}")
        if labels.size and not np.issubdtype(labels.dtype, np.integer):
            if not np.all(np.equal(np.mod(labels, 1), 0)):
                raise InvalidValue("factor labels must be integers")
        labels = labels.astype(np.int64)
        if labels.size and labels.min() < 0:
            raise InvalidValue("factor labels must be >= 0")
        n, k = labels.shape
        observed = labels.max(axis=0) + 1 if n else np.zeros(k, dtype=np.int64)
        if self.cardinalities is None:
            cards = [int(c) for c in observed]
        else:
            cards = [int(c) for c in self.cardinalities]
            if len(cards) != k:
                raise MalformedFile(f"{len(cards)} cardinalities declared for {k} factors")
            for j, (c, o) in enumerate(zip(cards, observed)):
                if o > c:
                    raise LabelOutOfRange(
                        f"factor {j}: label {o - 1} exceeds declared cardinality {c}"
                    )
        soft = {}
        for j, mat in dict(self.soft_labels).items():
            j = int(j)
            if not 0 <= j < k:
                raise MalformedFile(f"soft labels given for unknown factor {j}")
            mat = np.asarray(mat, dtype=np.float64)
            if mat.ndim != 2 or mat.shape[0] != n:
                raise MalformedFile(f"soft labels for factor {j} must have {n} rows")
            if not np.isfinite(mat).all() or (mat < 0).any():
                raise InvalidValue(f"soft labels for factor {j} must be finite and >= 0")
            if np.abs(mat.sum(axis=1) - 1.0).max(initial=0.0) > 1e-9:
                raise InvalidValue(f"soft label rows for factor {j} must sum to 1")
            cards[j] = max(cards[j], mat.shape[1])
            soft[j] = _frozen(mat)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "cardinalities", tuple(cards))
        object.__setattr__(self, "soft_labels", soft)

    @property
    def n_samples(self) -> int:
        return self.labels.shape[0]

    @property
    def n_factors(self) -> int:
        return self.labels.shape[1]

    def factor_distribution(self, k: int) -> np.ndarray:
        """``N x C_k`` matrix of p(y_k | x^(n)); one-hot rows for hard labels."""
        c = self.cardinalities[k]
        if k in self.soft_labels:
            soft = self.soft_labels[k]
            if soft.shape[1] < c:
                soft = np.hstack([soft, np.zeros((soft.shape[0], c - soft.shape[1]))])
            return soft
        out = np.zeros((self.n_samples, c))
        out[np.arange(self.n_samples), self.labels[:, k]] = 1.0
        return out

    def permute_samples(self, order) -> "FactorTable":
        return FactorTable(
            self.labels[order],
            self.cardinalities,
            {k: v[order] for k, v in self.soft_labels.items()},
        )


@dataclass(frozen=True)
class QuantizationGrid:
    lo: float = -4.0
    hi: float = 4.0
    n_bins: int = 100

    def __post_init__(self):
        if int(self.n_bins) != self.n_bins or self.n_bins < 2:
            raise DegenerateGrid(f"need at least 2 bins, got {self.n_bins}")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
            raise DegenerateGrid(f"need finite lo < hi, got [{self.lo}, {self.hi}]")
        object.__setattr__(self, "n_bins", int(self.n_bins))
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.n_bins

    @property
    def edges(self) -> np.ndarray:
        return self.lo + (self.hi - self.lo) * (np.arange(self.n_bins + 1) / self.n_bins)

    @property
    def centers(self) -> np.ndarray:
        return self.lo + (self.hi - self.lo) * ((np.arange(self.n_bins) + 0.5) / self.n_bins)


@dataclass(frozen=True)
class EvalConfig:
    """Estimator settings. Entropies are always in nats."""

    grid: QuantizationGrid = field(default_factory=QuantizationGrid)
    n_mc_samples: int = 10000
    rng_seed: int = 0
    bin_method: str = "erf"
    factor_bins: int = 20

    def __post_init__(self):
        if int(self.n_mc_samples) != self.n_mc_samples or self.n_mc_samples < 1:
            raise ConfigError(f"n_mc_samples must be >= 1, got {self.n_mc_samples}")
        if int(self.rng_seed) != self.rng_seed or self.rng_seed < 0:
            raise ConfigError(f"rng_seed must be a non-negative integer, got {self.rng_seed}")
        if self.bin_method not in BIN_METHODS:
            raise ConfigError(f"bin_method must be one of {BIN_METHODS}, got {self.bin_method!r}")
        if self.factor_bins < 2:
            raise ConfigError(f"factor_bins must be >= 2, got {self.factor_bins}")

    def with_grid(self, **kwargs) -> "EvalConfig":
        g = self.grid
        grid = QuantizationGrid(
            kwargs.get("lo", g.lo), kwargs.get("hi", g.hi), kwargs.get("n_bins", g.n_bins)
        )
        return EvalConfig(grid, self.n_mc_samples, self.rng_seed, self.bin_method, self.factor_bins)

    def with_seed(self, seed: int, n_mc_samples: Optional[int] = None) -> "EvalConfig":
        m = self.n_mc_samples if n_mc_samples is None else n_mc_samples
        return EvalConfig(self.grid, m, seed, self.bin_method, self.factor_bins)

    def to_dict(self) -> dict:
        return {
            "range": [self.grid.lo, self.grid.hi],
            "bins": self.grid.n_bins,
            "bin_width": self.grid.width,
            "samples": self.n_mc_samples,
            "seed": self.rng_seed,
            "bin_method": self.bin_method,
            "factor_bins": self.factor_bins,
            "log_base": "e",
        }


# ------------------------------------------------------------------ entropy


def empirical_factor_entropy(table: FactorTable, k: int) -> float:
    """Entropy (nats) of the empirical distribution of factor ``k``."""
    if not 0 <= k < table.n_factors:
        raise IndexError(f"factor index {k} out of range for K={table.n_factors}")
    p = table.factor_distribution(k).mean(axis=0)
    p = p[p > 0]
    return float(max(0.0, -(p * np.log(p)).sum()))


# --------------------------------------------------------------- posteriors


def _read_csv_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not (len(r) == 1 and not r[0].strip())]
    return rows


def _parse_float(cell, where):
    try:
        return float(cell)
    except ValueError:
        raise MalformedFile(f"{where}: not a number: {cell!r}") from None


def _load_posteriors_csv(path) -> PosteriorSet:
    rows = _read_csv_rows(path)
    if not rows:
        raise MalformedFile(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2 or len(header) % 2:
        raise MalformedFile(f"{path}: header must list mu_i,sigma_i pairs")
    n_latents = len(header) // 2
    for i in range(n_latents):
        if header[2 * i] != f"mu_{i}" or header[2 * i + 1] != f"sigma_{i}":
            raise MalformedFile(
                f"{path}: expected columns mu_{i},sigma_{i} at position {2 * i}, got {header[2 * i:2 * i + 2]}"
            )
    body = rows[1:]
    if not body:
        raise MalformedFile(f"{path}: no data rows")
    values = np.empty((len(body), 2 * n_latents))
    for r, row in enumerate(body):
        if len(row) != len(header):
            raise MalformedFile(f"{path}: row {r + 2} has {len(row)} cells, expected {len(header)}")
        values[r] = [_parse_float(c, f"{path}:{r + 2}") for c in row]
    return PosteriorSet(values[:, 0::2], values[:, 1::2])


def _load_posteriors_binary(path) -> PosteriorSet:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise MalformedFile(f"{path}: truncated header")
    magic, version, n, n_latents = _HEADER.unpack_from(raw)
    if magic != BINARY_MAGIC:
        raise MalformedFile(f"{path}: bad magic {magic!r}")
    if version != BINARY_VERSION:
        raise MalformedFile(f"{path}: unsupported version {version}")
    count = n * n_latents
    expected = _HEADER.size + 2 * 8 * count
    if len(raw) != expected:
        raise MalformedFile(f"{path}: expected {expected} bytes for N={n}, L={n_latents}, got {len(raw)}")
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    return PosteriorSet(body[:count].reshape(n, n_latents), body[count:].reshape(n, n_latents))


def _infer_format(path, fmt):
    if fmt is not None:
        return fmt
    return "csv" if str(path).lower().endswith(".csv") else "binary"


def load_posteriors(path, format: Optional[str] = None) -> PosteriorSet:
    """Read posteriors from CSV (``mu_i,sigma_i`` columns) or the DMET binary format.

    The format is inferred from the extension when not given.
    """
    fmt = _infer_format(path, format)
    if fmt == "csv":
        return _load_posteriors_csv(path)
    if fmt in ("binary", "bin"):
        return _load_posteriors_binary(path)
    raise ConfigError(f"unknown posterior format {format!r}")


def save_posteriors(ps: PosteriorSet, path, format: Optional[str] = None) -> None:
    fmt = _infer_format(path, format)
    if fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([c for i in range(ps.n_latents) for c in (f"mu_{i}", f"sigma_{i}")])
            for mu_row, sd_row in zip(ps.means, ps.stds):
                w.writerow([repr(float(v)) for pair in zip(mu_row, sd_row) for v in pair])
    elif fmt in ("binary", "bin"):
        head = _HEADER.pack(BINARY_MAGIC, BINARY_VERSION, ps.n_samples, ps.n_latents)
        body = ps.means.astype("<f8").tobytes() + ps.stds.astype("<f8").tobytes()
        Path(path).write_bytes(head + body)
    else:
        raise ConfigError(f"unknown posterior format {format!r}")


# ------------------------------------------------------------------ factors


def quantize_continuous(values, n_bins: int = 20) -> np.ndarray:
    """Map real factor values to ``n_bins`` equal-width bins over their range."""
    values = np.asarray(values, dtype=float)
    lo, hi = values.min(), values.max()
    if hi <= lo:
        return np.zeros(values.shape, dtype=np.int64)
    idx = np.floor((values - lo) * (n_bins / (hi - lo)))
    return np.clip(idx, 0, n_bins - 1).astype(np.int64)


def load_soft_labels(path) -> np.ndarray:
    rows = _read_csv_rows(path)
    if len(rows) < 2:
        raise MalformedFile(f"{path}: soft-label file needs a header and at least one row")
    width = len(rows[0])
    mat = np.empty((len(rows) - 1, width))
    for r, row in enumerate(rows[1:]):
        if len(row) != width:
            raise MalformedFile(f"{path}: row {r + 2} has {len(row)} cells, expected {width}")
        mat[r] = [_parse_float(c, f"{path}:{r + 2}") for c in row]
    return mat


def load_factors(path, soft_labels: Optional[Mapping[int, str]] = None, factor_bins: int = 20) -> FactorTable:
    """Read a factor CSV (``y_0,...`` header, optional ``#card=`` first line).

    Columns holding non-integer numbers are treated as continuous and
    quantized onto ``factor_bins`` equal-width bins. ``soft_labels`` maps a
    factor index to a CSV of per-row label probabilities.
    """
    rows = _read_csv_rows(path)
    declared = None
    if rows and rows[0][0].lstrip().startswith("#"):
        text = ",".join(rows[0]).lstrip()[1:].strip()
        if not text.startswith("card="):
            raise MalformedFile(f"{path}: unrecognised comment line {text!r}")
        try:
            declared = [int(c) for c in text[len("card="):].split(",") if c.strip()]
        except ValueError:
            raise MalformedFile(f"{path}: bad cardinality declaration {text!r}") from None
        rows = rows[1:]
    if not rows:
        raise MalformedFile(f"{path}: missing header")
    header = [h.strip() for h in rows[0]]
    if header != [f"y_{k}" for k in range(len(header))]:
        raise MalformedFile(f"{path}: header must be y_0,...,y_{{K-1}}, got {header}")
    body = rows[1:]
    if not body:
        raise MalformedFile(f"{path}: no data rows")
    raw = np.empty((len(body), len(header)))
    for r, row in enumerate(body):
        if len(row) != len(header):
            raise MalformedFile(f"{path}: row {r + 2} has {len(row)} cells, expected {len(header)}")
        raw[r] = [_parse_float(c, f"{path}:{r + 2}") for c in row]
    if not np.isfinite(raw).all():
        raise InvalidValue(f"{path}: factor values must be finite")
    labels = np.empty(raw.shape, dtype=np.int64)
    for k in range(raw.shape[1]):
        col = raw[:, k]
        if np.all(col == np.round(col)):
            if col.min() < 0:
                raise InvalidValue(f"{path}: factor y_{k} has negative labels")
            labels[:, k] = col.astype(np.int64)
        else:
            labels[:, k] = quantize_continuous(col, factor_bins)
    soft = {int(k): load_soft_labels(p) for k, p in (soft_labels or {}).items()}
    return FactorTable(labels, declared, soft)


def save_factors(table: FactorTable, path, declare_cardinalities: bool = True) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if declare_cardinalities:
            fh.write("#card=" + ",".join(str(c) for c in table.cardinalities) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"y_{k}" for k in range(table.n_factors)])
        w.writerows(table.labels.tolist())
