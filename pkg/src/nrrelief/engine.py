"""N-RReliefF importance estimation.

For each sampled record the ``J`` nearest records are found, each neighbour
is weighted by ``exp(-(rank / sigma)**2)`` (normalized over the ``J``
neighbours), and three accumulators are built up:

* ``n_diff_p``: weighted performance differences,
* ``n_diff_theta[k]``: weighted differences of hyperparameter ``k``,
* ``n_diff_p_and_theta[k]``: weighted products of the two.

After dividing by the number of samples ``M`` the weight of ``k`` is::

    W[k] = n_diff_p_and_theta[k] / n_diff_p
           - (n_diff_theta[k] - n_diff_p_and_theta[k]) / (1 - n_diff_p)

and pair weights are ``exp(W[m] + W[n] - sum(W))``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .dataset import HiaDataset
from .errors import HiaError, ValidationError
from .space import ObservedRanges

FULL_PASS = "full-pass"
SAMPLED = "sampled"
MODES = (FULL_PASS, SAMPLED)
DEFAULT_NEIGHBORS = 30
DEFAULT_SEED = 42
_BATCH_CELLS = 1 << 15


@dataclass(frozen=True)
class EngineParams:
    """Engine settings. ``sigma`` defaults to ``neighbors / 3``.

    ``iterations`` is the number of samples in sampled mode (default: one per
    record) and is ignored in full-pass mode.
    """

    neighbors: int = DEFAULT_NEIGHBORS
    sigma: float | None = None
    iterations: int | None = None
    seed: int = DEFAULT_SEED
    mode: str = FULL_PASS
    raw_performance_diff: bool = False

    def __post_init__(self):
        if isinstance(self.neighbors, bool) or int(self.neighbors) != self.neighbors or self.neighbors < 1:
            raise ValidationError("neighbors must be ≥ 1")
        if self.sigma is None:
            object.__setattr__(self, "sigma", self.neighbors / 3)
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValidationError("sigma must be > 0")
        if self.iterations is not None and self.iterations < 1:
            raise ValidationError("iterations must be ≥ 1")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be an unsigned 64-bit integer")
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {', '.join(MODES)}")

    def to_dict(self) -> dict:
        return {
            "neighbors": self.neighbors,
            "sigma": self.sigma,
            "iterations": self.iterations,
            "seed": self.seed,
            "mode": self.mode,
            "raw_performance_diff": self.raw_performance_diff,
        }


@dataclass
class AccumulatorState:
    n_diff_p: float
    n_diff_theta: np.ndarray
    n_diff_p_and_theta: np.ndarray

    @classmethod
    def zeros(cls, k: int) -> "AccumulatorState":
        return cls(0.0, np.zeros(k), np.zeros(k))

    def copy(self) -> "AccumulatorState":
        return AccumulatorState(self.n_diff_p, self.n_diff_theta.copy(), self.n_diff_p_and_theta.copy())

    def scaled(self, factor: float) -> "AccumulatorState":
        return AccumulatorState(self.n_diff_p * factor, self.n_diff_theta * factor, self.n_diff_p_and_theta * factor)

    def to_dict(self) -> dict:
        return {
            "n_diff_p": float(self.n_diff_p),
            "n_diff_theta": [float(x) for x in self.n_diff_theta],
            "n_diff_p_and_theta": [float(x) for x in self.n_diff_p_and_theta],
        }


class Neighbor(NamedTuple):
    index: int
    distance: float
    rank: int


@dataclass(frozen=True)
class PairWeight:
    first: str
    second: str
    weight: float


@dataclass(frozen=True)
class ImportanceReport:
    """Individual and pairwise importance for one assessment run.

    ``weights`` are the displayed weights. For conditional runs they are the
    sum-to-one normalized weights and ``raw_weights`` keeps the unnormalized
    ones. ``reference_ranks`` optionally attaches an external ranking
    (e.g. from another importance method) for side-by-side display.
    """

    names: tuple[str, ...]
    weights: tuple[float, ...]
    ranks: tuple[int, ...]
    pairs: tuple[PairWeight, ...] = ()
    params: EngineParams | None = None
    warnings: tuple[str, ...] = ()
    raw_weights: tuple[float, ...] | None = None
    accumulators: AccumulatorState | None = field(default=None, compare=False)
    n_records: int | None = None
    iterations: int | None = None
    neighbors_used: int | None = None
    fixed: Mapping[str, object] | None = None
    reference_ranks: Mapping[str, int] | None = None

    def weight_of(self, name: str) -> float:
        return self.weights[self.names.index(name)]

    def rank_of(self, name: str) -> int:
        return self.ranks[self.names.index(name)]

    def ranking(self) -> dict[str, int]:
        return dict(zip(self.names, self.ranks))

    def ordered(self) -> list[int]:
        """Hyperparameter indices in rank order."""
        return sorted(range(len(self.names)), key=lambda i: self.ranks[i])

    def ordered_pairs(self) -> list[PairWeight]:
        """Pairs by descending weight; ties keep space order."""
        return sorted(self.pairs, key=lambda pw: -pw.weight)

    def pair_matrix(self) -> np.ndarray:
        """Symmetric K x K matrix of pair weights with a NaN diagonal."""
        k = len(self.names)
        out = np.full((k, k), np.nan)
        idx = {n: i for i, n in enumerate(self.names)}
        for pw in self.pairs:
            i, j = idx[pw.first], idx[pw.second]
            out[i, j] = out[j, i] = pw.weight
        return out


def rank_order(weights: Sequence[float]) -> tuple[int, ...]:
    """Ranks 1..K by descending weight, ties broken by position."""
    order = sorted(range(len(weights)), key=lambda i: (-weights[i], i))
    ranks = [0] * len(weights)
    for r, i in enumerate(order, start=1):
        ranks[i] = r
    return tuple(ranks)


def diff_performance(p_a: float, p_b: float, ranges: ObservedRanges, raw: bool = False) -> float:
    """|p_a - p_b| scaled by the observed performance range (0 if degenerate)."""
    if raw:
        return abs(p_a - p_b)
    span = ranges.performance_span
    if span <= 0:
        return 0.0
    return abs(p_a - p_b) / span


def rank_weights(j: int, sigma: float) -> np.ndarray:
    if j < 1:
        raise ValidationError("neighbors must be ≥ 1")
    if not sigma > 0:
        raise ValidationError("sigma must be > 0")
    ranks = np.arange(1, j + 1, dtype=float)
    w = np.exp(-((ranks / sigma) ** 2))
    total = w.sum()
    if total == 0.0:
        # exp underflow for tiny sigma: all influence on the nearest neighbour
        w = np.zeros(j)
        w[0] = 1.0
        return w
    return w / total


class _DiffTable:
    """Vectorized per-hyperparameter diffs of every record against a target."""

    def __init__(self, dataset: HiaDataset, raw_performance: bool = False):
        if dataset.inactive.any():
            col = int(np.flatnonzero(dataset.inactive.any(axis=0))[0])
            raise HiaError(
                f"inactive value in diff ({dataset.space.defs[col].name}); "
                "restrict dependent hyperparameters with the conditional workflow first"
            )
        space, ranges = dataset.space, dataset.ranges
        self.k = len(space)
        self.num_cols = np.array([i for i, d in enumerate(space.defs) if d.is_numeric], dtype=int)
        self.cat_cols = np.array([i for i, d in enumerate(space.defs) if not d.is_numeric], dtype=int)
        spans = np.array([ranges.span(space.defs[i].name) for i in self.num_cols], dtype=float)
        self.degenerate = [space.defs[i].name for i, s in zip(self.num_cols, spans) if s <= 0]
        # constant columns get diff 0: zero numerator over unit span
        self.spans = np.where(spans > 0, spans, 1.0)
        self.num = np.ascontiguousarray(dataset.values[:, self.num_cols].T)
        self.cat = np.ascontiguousarray(dataset.codes[:, self.cat_cols].T)
        self.perf = dataset.performance
        pspan = ranges.performance_span
        self.pscale = 1.0 if raw_performance else (1.0 / pspan if pspan > 0 else 0.0)
        self.n = len(dataset)

    def diffs(self, target: int) -> np.ndarray:
        """Array of shape (n, K): diffs of every record against ``target``."""
        return self.batch_diffs(np.array([target]))[0].T

    def batch_diffs(self, targets: np.ndarray) -> np.ndarray:
        """Array of shape (len(targets), K, n), hyperparameter-major."""
        out = np.empty((len(targets), self.k, self.n))
        for c, col, span in zip(self.num_cols, self.num, self.spans):
            np.subtract(col[None, :], col[targets][:, None], out=out[:, c, :])
            np.abs(out[:, c, :], out=out[:, c, :])
            out[:, c, :] /= span
        for c, col in zip(self.cat_cols, self.cat):
            np.not_equal(col[None, :], col[targets][:, None], out=out[:, c, :])
        return out

    def perf_diffs(self, target: int, idx: np.ndarray) -> np.ndarray:
        return np.abs(self.perf[idx] - self.perf[target]) * self.pscale


def _nearest(dist: np.ndarray, j: int) -> np.ndarray:
    """Indices of the ``j`` smallest entries, ties by ascending index."""
    if j >= dist.size:
        return np.argsort(dist, kind="stable")[:j]
    kth = np.partition(dist, j - 1)[j - 1]
    cand = np.flatnonzero(dist <= kth)
    return cand[np.argsort(dist[cand], kind="stable")[:j]]


def _neighbors_from_diffs(diffs: np.ndarray, target: int, j: int) -> tuple[np.ndarray, np.ndarray]:
    """Nearest neighbours of ``target`` given its (K, n) diff block."""
    dist = np.sqrt(np.einsum("kn,kn->n", diffs, diffs))
    dist[target] = np.inf
    idx = _nearest(dist, j)
    return idx, dist[idx]


def _clamp_neighbors(n: int, j: int) -> int:
    if n < 2:
        raise HiaError("dataset too small")
    return min(j, n - 1)


def find_neighbors(dataset: HiaDataset, target: int, j: int) -> list[Neighbor]:
    """The ``j`` records nearest to ``target`` (itself excluded), nearest first.

    Distance ties are broken by ascending record index. If the dataset has
    fewer than ``j + 1`` records, ``j`` is clamped to ``n - 1`` with a warning.
    """
    jj = _clamp_neighbors(len(dataset), j)
    if jj < j:
        warnings.warn(f"neighbors clamped from {j} to {jj}", stacklevel=2)
    table = _DiffTable(dataset)
    idx, dist = _neighbors_from_diffs(table.batch_diffs(np.array([target]))[0], target, jj)
    return [Neighbor(int(i), float(d), r) for r, (i, d) in enumerate(zip(idx, dist), start=1)]


def _accumulate(state: AccumulatorState, nb_diffs: np.ndarray, dp: np.ndarray, w: np.ndarray) -> None:
    wdp = w * dp
    state.n_diff_p += float(wdp.sum())
    state.n_diff_theta += w @ nb_diffs
    state.n_diff_p_and_theta += wdp @ nb_diffs


def accumulate_one(
    dataset: HiaDataset,
    target: int,
    neighbors: Sequence[Neighbor],
    weights: Sequence[float],
    state: AccumulatorState,
    raw_performance: bool = False,
) -> AccumulatorState:
    """Return ``state`` plus the contribution of one sampled record."""
    if len(neighbors) != len(weights):
        raise ValidationError("neighbors and rank weights differ in length")
    table = _DiffTable(dataset, raw_performance)
    idx = np.array([nb.index for nb in neighbors], dtype=int)
    out = state.copy()
    _accumulate(out, table.diffs(target)[idx], table.perf_diffs(target, idx), np.asarray(weights, dtype=float))
    return out


def finalize_weights(state: AccumulatorState, m: int) -> tuple[np.ndarray, AccumulatorState, list[str]]:
    """Average the accumulators over ``m`` samples and convert them to weights.

    Returns the weights, the averaged accumulators and any warnings.
    """
    if m < 1:
        raise ValidationError("iterations must be ≥ 1")
    avg = state.scaled(1.0 / m)
    ndp, nth, joint = avg.n_diff_p, avg.n_diff_theta, avg.n_diff_p_and_theta
    notes: list[str] = []
    if ndp <= 0.0:
        notes.append("no performance variation among sampled neighborhoods; all weights set to 0")
        return np.zeros_like(nth), avg, notes
    first = joint / ndp
    if ndp >= 1.0:
        notes.append("every sampled neighborhood is maximally different in performance; weights use the first term only")
        weights = first
    else:
        weights = first - (nth - joint) / (1.0 - ndp)
    # rounding can push an exact bound a few ulps past +-1
    return np.clip(weights, -1.0, 1.0), avg, notes


def joint_importance(weights: Sequence[float]) -> np.ndarray:
    """Symmetric pair-weight matrix ``exp(W[m] + W[n] - sum(W))``; NaN diagonal."""
    w = np.asarray(weights, dtype=float)
    if w.size < 2:
        raise ValidationError("need at least two hyperparameters")
    out = np.exp(w[:, None] + w[None, :] - w.sum())
    np.fill_diagonal(out, np.nan)
    return out


def pair_list(names: Sequence[str], matrix: np.ndarray) -> tuple[PairWeight, ...]:
    k = len(names)
    return tuple(PairWeight(names[i], names[j], float(matrix[i, j])) for i in range(k) for j in range(i + 1, k))


def sample_order(n: int, m: int, seed: int) -> np.ndarray:
    """Indices of ``m`` samples drawn from ``n`` records.

    Uses PCG64 seeded with ``seed``. Sampling is without replacement within
    each pass over the data; once ``m`` exceeds ``n`` a fresh permutation is
    started.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    passes = -(-m // n)
    return np.concatenate([rng.permutation(n) for _ in range(passes)])[:m]


def run_nrrelieff(dataset: HiaDataset, params: EngineParams | None = None) -> ImportanceReport:
    """Run N-RReliefF over every hyperparameter of ``dataset``.

    The dataset must not contain INACTIVE values; use
    :func:`nrrelief.conditional.conditional_importance` for dependent
    hyperparameters.
    """
    params = params or EngineParams()
    n = len(dataset)
    j = _clamp_neighbors(n, params.neighbors)
    notes: list[str] = []
    table = _DiffTable(dataset, params.raw_performance_diff)
    if j < params.neighbors:
        notes.append(f"neighbors clamped from {params.neighbors} to {j} (dataset has {n} records)")
    for name in table.degenerate:
        notes.append(f"constant column {name}: diffs are 0")
    if params.raw_performance_diff:
        lo, hi = dataset.ranges.performance
        if lo < 0.0 or hi > 1.0:
            notes.append("raw performance diffs on a metric outside [0, 1]")

    if params.mode == FULL_PASS:
        order = np.arange(n)
    else:
        order = sample_order(n, params.iterations or n, params.seed)
    m = len(order)

    w = rank_weights(j, params.sigma)
    state = AccumulatorState.zeros(table.k)
    batch = max(1, _BATCH_CELLS // max(1, n * table.k))
    for start in range(0, m, batch):
        targets = order[start : start + batch]
        diffs = table.batch_diffs(targets)
        # contributions are reduced one sample at a time, in sample order
        for b, target in enumerate(targets):
            target = int(target)
            idx, _ = _neighbors_from_diffs(diffs[b], target, j)
            _accumulate(state, diffs[b][:, idx].T, table.perf_diffs(target, idx), w)

    weights, avg, fin_notes = finalize_weights(state, m)
    notes.extend(fin_notes)
    names = dataset.space.names
    pairs = pair_list(names, joint_importance(weights)) if len(names) >= 2 else ()
    return ImportanceReport(
        names=names,
        weights=tuple(float(x) for x in weights),
        ranks=rank_order(weights),
        pairs=pairs,
        params=params,
        warnings=tuple(notes),
        accumulators=avg,
        n_records=n,
        iterations=m,
        neighbors_used=j,
    )
