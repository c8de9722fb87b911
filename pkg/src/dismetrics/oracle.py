"""Exact ground truth on small discrete worlds.

A world is a grid of discrete factors plus, for every latent, a Gaussian
emission N(mu(y), sigma(y)) indexed by the factor tuple. Every quantized
entropy and mutual information of such a world can be obtained by summing
over factor tuples and grid bins. The routines here do exactly that with
plain Python loops and ``math.erfc``; they share formulas with the library
but none of its code, so the two can check each other.
"""
from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .data import FactorTable, PosteriorSet, QuantizationGrid
from .errors import ConfigError, TooLarge
from .special import erf_poly_scalar

ENUMERATION_CAP = 10**6
PRESETS = ("perfect", "redundant-pair", "noise-only", "entangled", "mixed")

SIGMA_SHARP = 0.01
SIGMA_DEFAULT = 0.05
SIGMA_SMOOTH = 0.5
_PRUNE = 1e-18
DEFAULT_GRID = QuantizationGrid()


@dataclass(frozen=True)
class Emission:
    """Per-factor-tuple Gaussian parameters of one latent.

    ``means`` and ``stds`` are arrays shaped like the factor grid. A latent
    whose emission ignores the factors is a pure-noise latent.
    """

    means: np.ndarray
    stds: np.ndarray

    def params(self, t: Tuple[int, ...]) -> Tuple[float, float]:
        return float(self.means[t]), float(self.stds[t])

    @property
    def constant(self) -> bool:
        return bool(np.all(self.means == self.means.flat[0]) and np.all(self.stds == self.stds.flat[0]))


@dataclass
class DiscreteWorld:
    name: str
    cardinalities: Tuple[int, ...]
    emissions: List[Emission]
    rows: List[Tuple[int, ...]]
    seed: int = 0
    smooth: bool = False

    @property
    def n_latents(self) -> int:
        return len(self.emissions)

    @property
    def n_factors(self) -> int:
        return len(self.cardinalities)

    def weights(self) -> Dict[Tuple[int, ...], float]:
        """Empirical weight of each distinct factor tuple in the data set."""
        w: Dict[Tuple[int, ...], float] = defaultdict(float)
        for t in self.rows:
            w[t] += 1.0 / len(self.rows)
        return dict(sorted(w.items()))

    def posteriors(self) -> PosteriorSet:
        means = [[e.params(t)[0] for e in self.emissions] for t in self.rows]
        stds = [[e.params(t)[1] for e in self.emissions] for t in self.rows]
        return PosteriorSet(np.array(means), np.array(stds))

    def factors(self) -> FactorTable:
        return FactorTable(np.array(self.rows, dtype=np.int64), self.cardinalities)


# ----------------------------------------------------------------- building


def _snap_to_centres(values, grid: QuantizationGrid):
    k = np.round((np.asarray(values) - grid.lo) / grid.width - 0.5)
    return grid.lo + (k + 0.5) * grid.width


def _lattice(card: int, half_span: float, rng, snap: bool):
    vals = np.linspace(-half_span, half_span, card) if card > 1 else np.zeros(1)
    if snap:
        vals = _snap_to_centres(vals, DEFAULT_GRID)
    return vals[rng.permutation(card)]


def _code(cards, k, values, sigma):
    shape = tuple(cards)
    means = np.empty(shape)
    for t in itertools.product(*(range(c) for c in cards)):
        means[t] = values[t[k]]
    return Emission(means, np.full(shape, float(sigma)))


def _noise(cards):
    shape = tuple(cards)
    return Emission(np.zeros(shape), np.ones(shape))


def build_world(
    preset: str,
    seed: int = 0,
    smooth: bool = False,
    cardinalities: Optional[Sequence[int]] = None,
    n_iid: Optional[int] = None,
) -> Tuple[DiscreteWorld, PosteriorSet, FactorTable]:
    """Construct a preset world and its posterior/factor tables.

    ``smooth`` widens informative posteriors (sigma 0.5, means within
    [-2, 2]) so quantized and sampled entropies obey the bin-width gap law.
    Otherwise informative means sit on a lattice in [-3, 3]; the ``perfect``
    preset uses sigma 0.01 with means snapped to bin centres of the default
    grid so each factor value occupies a single bin. The seed permutes which
    lattice value codes which factor value and drives ``n_iid`` draws.
    """
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {PRESETS}")
    defaults = {
        "perfect": (2, 3, 4),
        "redundant-pair": (4, 3),
        "noise-only": (3, 4),
        "entangled": (3, 3),
        "mixed": (4, 5),
    }
    cards = tuple(int(c) for c in (cardinalities or defaults[preset]))
    if any(c < 1 for c in cards):
        raise ConfigError(f"cardinalities must be >= 1, got {cards}")
    if math.prod(cards) > ENUMERATION_CAP:
        raise TooLarge(f"factor grid has {math.prod(cards)} tuples, cap is {ENUMERATION_CAP}")
    rng = np.random.default_rng(seed)
    half = 2.0 if smooth else 3.0
    if smooth:
        sigma = SIGMA_SMOOTH
    else:
        sigma = SIGMA_SHARP if preset == "perfect" else SIGMA_DEFAULT
    snap = preset == "perfect" and not smooth

    def coded(k):
        return _code(cards, k, _lattice(cards[k], half, rng, snap), sigma)

    if preset == "perfect":
        emissions = [coded(k) for k in range(len(cards))] + [_noise(cards), _noise(cards)]
    elif preset == "redundant-pair":
        first = coded(0)
        emissions = [first, Emission(first.means.copy(), first.stds.copy())]
        emissions += [coded(k) for k in range(1, len(cards))] + [_noise(cards)]
    elif preset == "noise-only":
        emissions = [_noise(cards) for _ in range(3)]
    elif preset == "entangled":
        if len(cards) != 2:
            raise ConfigError("the entangled preset needs exactly two factors")
        scale = (0.8 if smooth else 1.2) * 3.0 / max(sum(c - 1 for c in cards), 1)
        a_vals = rng.permutation(cards[0]).astype(float)
        b_vals = rng.permutation(cards[1]).astype(float)
        centre = (cards[0] - 1 + cards[1] - 1) / 2.0
        shift = (cards[0] - cards[1]) / 2.0
        plus = np.empty(cards)
        minus = np.empty(cards)
        for t in itertools.product(range(cards[0]), range(cards[1])):
            a, b = a_vals[t[0]], b_vals[t[1]]
            plus[t] = scale * (a + b - centre)
            minus[t] = scale * (a - b - shift)
        emissions = [
            Emission(plus, np.full(cards, sigma)),
            Emission(minus, np.full(cards, sigma)),
            _noise(cards),
        ]
    else:  # mixed
        emissions = [coded(k) for k in range(len(cards))] + [_noise(cards) for _ in range(3)]

    if n_iid is None:
        rows = list(itertools.product(*(range(c) for c in cards)))
    else:
        draws = np.stack([rng.integers(0, c, size=n_iid) for c in cards], axis=1)
        rows = [tuple(int(v) for v in r) for r in draws]
    world = DiscreteWorld(preset, cards, emissions, rows, seed, smooth)
    return world, world.posteriors(), world.factors()


def build_jittered_world(seed: int = 0, n_per_value: int = 100, n_latents: int = 3,
                         cardinality: int = 4, signal: float = 0.3, jitter: float = 0.02,
                         sigma: float = 1.0) -> Tuple[PosteriorSet, FactorTable]:
    """High-variance posteriors whose means weakly track one factor.

    Every latent is close to the prior (sigma 1) yet its posterior mean is
    ``signal * (y - centre)`` plus per-sample jitter. Binning only the means
    makes such latents look highly informative about the factor.
    """
    rng = np.random.default_rng(seed)
    y = np.repeat(np.arange(cardinality), n_per_value)
    centred = y - (cardinality - 1) / 2.0
    means = signal * centred[:, None] + jitter * rng.standard_normal((y.size, n_latents))
    return PosteriorSet(means, np.full(means.shape, sigma)), FactorTable(y[:, None], (cardinality,))


# -------------------------------------------------------------- exact sums


def _bin_probs(mu: float, sigma: float, grid: QuantizationGrid, method: str) -> List[float]:
    b = grid.n_bins
    edges = [grid.lo + (grid.hi - grid.lo) * (k / b) for k in range(b + 1)]
    if method == "rectangle":
        logs = [-0.5 * ((grid.lo + (grid.hi - grid.lo) * ((k + 0.5) / b) - mu) / sigma) ** 2 for k in range(b)]
        top = max(logs)
        probs = [math.exp(v - top) for v in logs]
    else:
        s = sigma * math.sqrt(2.0)
        ts = [(e - mu) / s for e in edges]
        probs = []
        for t0, t1 in zip(ts[:-1], ts[1:]):
            if method == "erf-poly":
                g = 0.5 * (erf_poly_scalar(t1) - erf_poly_scalar(t0))
            elif t0 >= 0:
                g = 0.5 * (math.erfc(t0) - math.erfc(t1))
            elif t1 <= 0:
                g = 0.5 * (math.erfc(-t1) - math.erfc(-t0))
            else:
                g = 1.0 - 0.5 * math.erfc(t1) - 0.5 * math.erfc(-t0)
            probs.append(max(g, 0.0))
    total = sum(probs)
    if total <= 0.0:
        probs = [0.0] * b
        probs[_mean_bin(mu, grid)] = 1.0
        return probs
    return [p / total for p in probs]


def _mean_bin(mu: float, grid: QuantizationGrid) -> int:
    k = math.floor((mu - grid.lo) * (grid.n_bins / (grid.hi - grid.lo)))
    return min(max(k, 0), grid.n_bins - 1)


def _h(probs) -> float:
    return -sum(p * math.log(p) for p in probs if p > 0.0)


@dataclass
class ExactTables:
    """Exact quantized tables of a world under one grid."""

    grid: QuantizationGrid
    weights: Dict[Tuple[int, ...], float]
    conditional: List[Dict[Tuple[int, ...], List[float]]]
    marginals: List[List[float]]
    latent_factor: Dict[Tuple[int, int], List[List[float]]]
    factor_marginals: List[List[float]]
    latent_entropy: List[float] = field(default_factory=list)
    latent_conditional_entropy: List[float] = field(default_factory=list)

    def latent_pair(self, i: int, j: int) -> List[List[float]]:
        b = self.grid.n_bins
        table = [[0.0] * b for _ in range(b)]
        for t, w in self.weights.items():
            qi, qj = self.conditional[i][t], self.conditional[j][t]
            for a in range(b):
                if qi[a] == 0.0:
                    continue
                row = table[a]
                for c in range(b):
                    row[c] += w * qi[a] * qj[c]
        return table


def _mi_2d(table) -> float:
    rows = [sum(r) for r in table]
    cols = [sum(c) for c in zip(*table)]
    return max(_h(rows) + _h(cols) - _h(p for r in table for p in r), 0.0)


def exact_tables(world: DiscreteWorld, grid: QuantizationGrid, method: str = "erf") -> ExactTables:
    weights = world.weights()
    cond = []
    for e in world.emissions:
        cache: Dict[Tuple[float, float], List[float]] = {}
        per_t = {}
        for t in weights:
            key = e.params(t)
            if key not in cache:
                cache[key] = _bin_probs(key[0], key[1], grid, method)
            per_t[t] = cache[key]
        cond.append(per_t)
    b = grid.n_bins
    marg = []
    for per_t in cond:
        m = [0.0] * b
        for t, w in weights.items():
            for s, q in enumerate(per_t[t]):
                m[s] += w * q
        marg.append(m)
    fmarg = []
    for k, c in enumerate(world.cardinalities):
        f = [0.0] * c
        for t, w in weights.items():
            f[t[k]] += w
        fmarg.append(f)
    lf = {}
    for i, per_t in enumerate(cond):
        for k, c in enumerate(world.cardinalities):
            table = [[0.0] * c for _ in range(b)]
            for t, w in weights.items():
                for s, q in enumerate(per_t[t]):
                    table[s][t[k]] += w * q
            lf[(i, k)] = table
    h = [_h(m) for m in marg]
    hc = [sum(w * _h(per_t[t]) for t, w in weights.items()) for per_t in cond]
    return ExactTables(grid, weights, cond, marg, lf, fmarg, h, hc)


def _joint_entropy(tables: ExactTables, latents: Sequence[int]) -> float:
    """H of the quantized joint over ``latents`` by enumerating the bin support."""
    if not latents:
        return 0.0
    acc: Dict[Tuple[int, ...], float] = defaultdict(float)
    states = 0
    for t, w in tables.weights.items():
        supports = []
        for i in latents:
            q = tables.conditional[i][t]
            supports.append([(s, p) for s, p in enumerate(q) if p > _PRUNE])
        states += math.prod(len(s) for s in supports)
        if states > ENUMERATION_CAP:
            raise TooLarge(f"joint enumeration over latents {list(latents)} exceeds {ENUMERATION_CAP} states")
        for combo in itertools.product(*supports):
            p = w
            for _, q in combo:
                p *= q
            acc[tuple(s for s, _ in combo)] += p
    return _h(acc.values())


def _sorted_top_k(values: Sequence[float], k: int) -> float:
    order = sorted(range(len(values)), key=lambda i: (-values[i], i))
    return sum(values[i] for i in order[:k]) / k


def exact_metrics(world: DiscreteWorld, grid: QuantizationGrid = DEFAULT_GRID, method: str = "erf",
                  joint: bool = True) -> Tuple[ExactTables, Dict[str, object]]:
    """Every quantized metric of ``world`` by exhaustive summation.

    With ``joint`` the SEPIN/INDIN family is included, computed as discrete
    conditional informations over the enumerated joint of all latent bins.
    Latents whose emission ignores the factors are independent of everything
    and are factored out of those joints exactly.
    """
    tab = exact_tables(world, grid, method)
    L, K, B = world.n_latents, world.n_factors, grid.n_bins
    log_b = math.log(B)
    out: Dict[str, object] = {}

    info = [max(h - hc, 0.0) for h, hc in zip(tab.latent_entropy, tab.latent_conditional_entropy)]
    out["informativeness"] = info
    out["informativeness_normalized"] = [v / log_b for v in info]

    mis = [[None] * L for _ in range(L)]
    for i in range(L):
        for j in range(i + 1, L):
            cells: Dict[Tuple[int, int], float] = defaultdict(float)
            for t, w in tab.weights.items():
                mi_, mj_ = world.emissions[i].params(t)[0], world.emissions[j].params(t)[0]
                cells[(_mean_bin(mi_, grid), _mean_bin(mj_, grid))] += w
            v = max(tab.latent_entropy[i] + tab.latent_entropy[j] - _h(cells.values()), 0.0)
            mis[i][j] = mis[j][i] = v
    out["misjed"] = mis
    out["misjed_normalized"] = [[None if v is None else v / (2 * log_b) for v in r] for r in mis]

    hy = [_h(f) for f in tab.factor_marginals]
    out["factor_entropy"] = hy
    mi = [[_mi_2d(tab.latent_factor[(i, k)]) for k in range(K)] for i in range(L)]
    out["mi_matrix"] = mi
    cm = [[0.0] * K for _ in range(L)]
    for i in range(L):
        for k, c in enumerate(world.cardinalities):
            cells = defaultdict(float)
            for t, w in tab.weights.items():
                cells[(_mean_bin(world.emissions[i].params(t)[0], grid), t[k])] += w
            table = [[cells.get((s, v), 0.0) for v in range(c)] for s in range(B)]
            cm[i][k] = _mi_2d(table)
    out["mi_matrix_conditional_mean"] = cm

    if L >= 2 and K >= 1:
        r, rn, j_, jn = [], [], [], []
        for k in range(K):
            col = [mi[i][k] for i in range(L)]
            order = sorted(range(L), key=lambda i: (-col[i], i))
            best, second = order[0], order[1]
            gap = col[best] - col[second]
            r.append(gap)
            rn.append(0.0 if hy[k] <= 1e-12 else min(gap / hy[k], 1.0))
            h_joint = _h(p for row in tab.latent_factor[(best, k)] for p in row)
            jm = max(h_joint - col[best] + col[second], 0.0)
            j_.append(jm)
            jn.append(jm / (log_b + hy[k]))
        out["rmig"] = {"per_factor": r, "mean": sum(r) / K}
        out["rmig_normalized"] = {"per_factor": rn, "mean": sum(rn) / K}
        out["jemmig"] = {"per_factor": j_, "mean": sum(j_) / K}
        out["jemmig_normalized"] = {"per_factor": jn, "mean": sum(jn) / K}

    if K >= 2:
        for key, matrix in (("modularity", mi), ("modularity_original", cm)):
            per = []
            for row in matrix:
                peak = max(row)
                if peak <= 1e-10:
                    per.append(None)
                    continue
                ks = row.index(peak)
                dev = sum((v - (peak if k == ks else 0.0)) ** 2 for k, v in enumerate(row))
                per.append(1.0 - dev / (peak * peak * (K - 1)))
            defined = [p for p in per if p is not None]
            out[key] = {"per_latent": per, "mean": sum(defined) / len(defined) if defined else None}

    if joint:
        out.update(_exact_separability(world, tab))
    return tab, out


def _exact_separability(world: DiscreteWorld, tab: ExactTables) -> Dict[str, object]:
    L = world.n_latents
    live = [i for i in range(L) if not world.emissions[i].constant]

    def h_live(subset):
        return _joint_entropy(tab, [i for i in subset if i in live])

    def h_cond(subset):
        return sum(tab.latent_conditional_entropy[i] for i in subset if i in live)

    def mi_x(subset):
        return max(h_live(subset) - h_cond(subset), 0.0)

    everything = list(range(L))
    info = [mi_x([i]) for i in range(L)]
    out: Dict[str, object] = {
        "informativeness_sampled": info,
        "mi_x_z": mi_x(everything),
    }
    if L < 2:
        return out
    h_all = h_live(everything)
    i_all = max(h_all - h_cond(everything), 0.0)
    sepin, indin = [], []
    for i in range(L):
        rest = [j for j in everything if j != i]
        h_rest = h_live(rest)
        sepin.append(max(i_all - max(h_rest - h_cond(rest), 0.0), 0.0))
        indin.append(info[i] - (h_live([i]) + h_rest - h_all))
    out["sepin"] = sepin
    out["indin"] = indin
    out["sepin_at_k"] = [_sorted_top_k(sepin, k) for k in range(1, L + 1)]
    out["indin_at_k"] = [_sorted_top_k(indin, k) for k in range(1, L + 1)]
    total = sum(info)
    if total > 1e-6:
        out["wsepin"] = sum(w * s for w, s in zip(info, sepin)) / total
        out["windin"] = sum(w * s for w, s in zip(info, indin)) / total
    else:
        out["wsepin"] = out["windin"] = None
    return out


# ------------------------------------------------------------- comparisons

QUANTIZED_KEYS = (
    "informativeness",
    "informativeness_normalized",
    "misjed",
    "misjed_normalized",
    "mi_matrix",
    "mi_matrix_conditional_mean",
    "rmig",
    "rmig_normalized",
    "jemmig",
    "jemmig_normalized",
    "modularity",
    "modularity_original",
)
SAMPLED_KEYS = (
    "informativeness_sampled",
    "mi_x_z",
    "sepin",
    "indin",
    "sepin_at_k",
    "indin_at_k",
    "wsepin",
    "windin",
)
QUANTIZED_TOL = 0.02
SAMPLED_TOL = 0.05


def _leaves(obj):
    if isinstance(obj, dict):
        if "skipped" in obj:
            yield None
            return
        for k in sorted(obj):
            yield from _leaves(obj[k])
    elif isinstance(obj, (list, tuple)):
        for v in obj:
            yield from _leaves(v)
    elif isinstance(obj, np.ndarray):
        yield from _leaves(obj.tolist())
    else:
        yield None if obj is None or (isinstance(obj, float) and math.isnan(obj)) else float(obj)


def max_deviation(a, b) -> float:
    """Largest absolute difference between two nested metric values.

    Two undefined entries agree; a defined entry against an undefined one
    counts as an infinite deviation.
    """
    la, lb = list(_leaves(a)), list(_leaves(b))
    if len(la) != len(lb):
        return math.inf
    worst = 0.0
    for x, y in zip(la, lb):
        if x is None and y is None:
            continue
        if x is None or y is None:
            return math.inf
        worst = max(worst, abs(x - y))
    return worst


def average_reports(reports: Sequence[Dict[str, object]], keys: Sequence[str]) -> Dict[str, object]:
    """Element-wise mean over several reports, for seed averaging."""

    def avg(vals):
        first = vals[0]
        if isinstance(first, dict):
            if "skipped" in first:
                return first
            return {k: avg([v[k] for v in vals]) for k in first}
        if isinstance(first, (list, tuple, np.ndarray)):
            return [avg([v[i] for v in vals]) for i in range(len(first))]
        if any(v is None or (isinstance(v, float) and math.isnan(v)) for v in vals):
            return None
        return float(np.mean(vals))

    return {k: avg([r[k] for r in reports]) for k in keys if all(k in r for r in reports)}
