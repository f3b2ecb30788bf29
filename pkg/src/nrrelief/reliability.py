"""Reliability checks: stratified resampling, repeated assessment, ICC and Spearman."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy import stats

from .dataset import HiaDataset
from .engine import EngineParams, run_nrrelieff
from .errors import HiaError, ValidationError

DEFAULT_BINS = 10
DEFAULT_CAP = 600
DEFAULT_REPEATS = 10
ICC_VARIANT = "ICC(2,1)"


@dataclass(frozen=True)
class StratificationPlan:
    bin_count: int = DEFAULT_BINS
    cap_per_bin: int = DEFAULT_CAP
    seed: int = 42

    def __post_init__(self):
        if self.bin_count < 1:
            raise ValidationError("bins must be ≥ 1")
        if self.cap_per_bin < 1:
            raise ValidationError("cap must be ≥ 1")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class IccResult:
    icc: float
    n_subjects: int
    n_raters: int
    interpretation: str
    variant: str = ICC_VARIANT
    ms_rows: float = float("nan")
    ms_cols: float = float("nan")
    ms_error: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "icc": self.icc,
            "variant": self.variant,
            "interpretation": self.interpretation,
            "n_subjects": self.n_subjects,
            "n_raters": self.n_raters,
            "ms_rows": self.ms_rows,
            "ms_cols": self.ms_cols,
            "ms_error": self.ms_error,
        }


def interpret_icc(value: float) -> str:
    if value < 0.5:
        return "poor"
    if value < 0.75:
        return "moderate"
    if value < 0.9:
        return "good"
    return "excellent"


def performance_bins(performance: np.ndarray, bins: int) -> np.ndarray:
    """Equal-width bin index of each value over its observed range; last bin closed."""
    perf = np.asarray(performance, dtype=float)
    lo, hi = float(perf.min()), float(perf.max())
    if hi <= lo:
        return np.zeros(perf.size, dtype=int)
    idx = np.floor((perf - lo) / (hi - lo) * bins).astype(int)
    return np.clip(idx, 0, bins - 1)


def stratified_subsample(dataset: HiaDataset, plan: StratificationPlan) -> HiaDataset:
    """Cap every performance interval at ``plan.cap_per_bin`` records.

    Within an over-full bin records are drawn without replacement (PCG64
    seeded with ``plan.seed``). The original relative order is kept.
    """
    if len(dataset) == 0:
        raise HiaError("dataset is empty")
    rng = np.random.Generator(np.random.PCG64(plan.seed))
    bins = performance_bins(dataset.performance, plan.bin_count)
    keep = []
    for b in range(plan.bin_count):
        members = np.flatnonzero(bins == b)
        if members.size > plan.cap_per_bin:
            members = rng.choice(members, size=plan.cap_per_bin, replace=False)
        keep.append(members)
    chosen = np.sort(np.concatenate(keep))
    if chosen.size == len(dataset):
        return dataset
    return dataset.subset(int(i) for i in chosen)


def derive_seed(seed: int, repeat: int) -> int:
    """Per-repeat seed: first 64-bit word of ``SeedSequence([seed, repeat])``."""
    return int(np.random.SeedSequence([seed, repeat]).generate_state(1, dtype=np.uint64)[0])


def repeat_assess(
    dataset: HiaDataset,
    repeats: int,
    plan: StratificationPlan,
    params: EngineParams | None = None,
    workers: int = 1,
) -> np.ndarray:
    """Weights from ``repeats`` independent stratified subsamples, shape (repeats, K)."""
    if repeats < 2:
        raise ValidationError("need ≥ 2 repeats")

    def one(r: int) -> np.ndarray:
        sub = stratified_subsample(dataset, StratificationPlan(plan.bin_count, plan.cap_per_bin, derive_seed(plan.seed, r)))
        return np.array(run_nrrelieff(sub, params).weights)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, range(repeats)))
    else:
        rows = [one(r) for r in range(repeats)]
    return np.vstack(rows)


def icc(matrix) -> IccResult:
    """ICC(2,1) of a (repeats x hyperparameters) weight matrix.

    Hyperparameters are the subjects and repeats the raters: two-way random
    effects, absolute agreement, single measurement.
    """
    x = np.asarray(matrix, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 2:
        raise ValidationError("icc needs at least 2 repeats and 2 hyperparameters")
    y = x.T  # subjects x raters
    n, k = y.shape
    grand = y.mean()
    if float(np.ptp(y)) == 0.0:
        raise HiaError("degenerate matrix")
    row_means, col_means = y.mean(axis=1), y.mean(axis=0)
    ss_rows = k * float(((row_means - grand) ** 2).sum())
    ss_cols = n * float(((col_means - grand) ** 2).sum())
    ss_err = float(((y - row_means[:, None] - col_means[None, :] + grand) ** 2).sum())
    ms_r = ss_rows / (n - 1)
    ms_c = ss_cols / (k - 1)
    ms_e = ss_err / ((n - 1) * (k - 1))
    value = (ms_r - ms_e) / (ms_r + (k - 1) * ms_e + k / n * (ms_c - ms_e))
    return IccResult(float(value), n, k, interpret_icc(value), ms_rows=ms_r, ms_cols=ms_c, ms_error=ms_e)


def spearman_rank_corr(a: Mapping[str, float], b: Mapping[str, float]) -> float:
    """Spearman's rho between two name -> rank mappings (ties averaged)."""
    if set(a) != set(b):
        missing = sorted(set(a) ^ set(b))
        raise ValidationError(f"rankings cover different hyperparameters: {', '.join(missing)}")
    if len(a) < 2:
        raise ValidationError("need at least two ranked hyperparameters")
    keys = sorted(a)
    x = [a[k] for k in keys]
    y = [b[k] for k in keys]
    if len(set(x)) == 1 or len(set(y)) == 1:
        raise ValidationError("a constant ranking has no rank correlation")
    rho = stats.spearmanr(x, y).statistic
    return float(rho)
