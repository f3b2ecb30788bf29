"""Synthetic datasets with a known importance structure."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .dataset import HiaDataset
from .errors import ValidationError
from .space import INACTIVE, NUMERIC_DISCRETE, ConfigSpace, validate_space

UNIFORM = "uniform"
BIMODAL = "bimodal"


@dataclass(frozen=True)
class SurfaceSpec:
    """Response surface over [0, 1]-normalized hyperparameter values.

    performance = sum(c * u[name]) + sum(c * u[a] * u[b]) + categorical
    offsets + N(0, noise_std), rescaled to [0, 1] over the generated set.
    Inactive hyperparameters contribute 0.
    """

    linear_coeffs: Mapping[str, float] = field(default_factory=dict)
    interactions: Sequence[tuple[str, str, float]] = ()
    noise_std: float = 0.0
    categorical_effects: Mapping[tuple[str, object], float] = field(default_factory=dict)
    sampling: str = UNIFORM

    def check(self, space: ConfigSpace) -> None:
        names = list(self.linear_coeffs)
        names += [n for a, b, _ in self.interactions for n in (a, b)]
        names += [n for n, _ in self.categorical_effects]
        for n in names:
            if n not in space:
                raise ValidationError(f"surface refers to unknown hyperparameter {n!r}")
        for (n, cat) in self.categorical_effects:
            d = space.get(n)
            if d.is_numeric or cat not in d.categories:
                raise ValidationError(f"surface offset for {n}={cat!r}: not a category")
        if not self.noise_std >= 0:
            raise ValidationError("noise_std must be ≥ 0")
        if self.sampling not in (UNIFORM, BIMODAL):
            raise ValidationError(f"sampling must be {UNIFORM} or {BIMODAL}")


def _draw_columns(space: ConfigSpace, n: int, rng: np.random.Generator) -> list[list]:
    k = len(space)
    cols: list[list | None] = [None] * k
    for j in space.topological_order():
        d = space.defs[j]
        if d.is_numeric:
            if d.values is not None:
                raw = [float(v) for v in rng.choice(np.array(d.values, dtype=float), size=n)]
            elif d.kind == NUMERIC_DISCRETE:
                raw = [float(v) for v in rng.integers(int(d.lo), int(d.hi), size=n, endpoint=True)]
            else:
                raw = [float(v) for v in rng.uniform(d.lo, d.hi, size=n)]
        else:
            raw = [d.categories[i] for i in rng.integers(0, len(d.categories), size=n)]
        if d.parent is not None:
            pcol = cols[space.index(d.parent.name)]
            raw = [
                v if (pv is not INACTIVE and any(pv == w for w in d.parent.when)) else INACTIVE
                for v, pv in zip(raw, pcol)
            ]
        cols[j] = raw
    return cols


def _unit(space: ConfigSpace, cols: list[list]) -> dict[str, np.ndarray]:
    out = {}
    for d, col in zip(space.defs, cols):
        if d.is_numeric:
            span = d.hi - d.lo
            u = [0.0 if v is INACTIVE or span == 0 else (v - d.lo) / span for v in col]
        else:
            m = len(d.categories) - 1
            pos = {c: i for i, c in enumerate(d.categories)}
            u = [0.0 if v is INACTIVE or m == 0 else pos[v] / m for v in col]
        out[d.name] = np.array(u)
    return out


def _surface(space: ConfigSpace, spec: SurfaceSpec, cols: list[list], rng: np.random.Generator) -> np.ndarray:
    n = len(cols[0])
    u = _unit(space, cols)
    y = np.zeros(n)
    for name, c in spec.linear_coeffs.items():
        y += c * u[name]
    for a, b, c in spec.interactions:
        y += c * u[a] * u[b]
    for (name, cat), off in spec.categorical_effects.items():
        col = cols[space.index(name)]
        y += off * np.array([v is not INACTIVE and v == cat for v in col], dtype=float)
    if spec.noise_std > 0:
        y += rng.normal(0.0, spec.noise_std, size=n)
    return y


def _to_unit_interval(y: np.ndarray) -> np.ndarray:
    lo, hi = y.min(), y.max()
    if hi <= lo:
        return np.zeros_like(y)
    return (y - lo) / (hi - lo)


def generate_dataset(space: ConfigSpace, spec: SurfaceSpec, n: int, seed: int = 0) -> HiaDataset:
    """Draw ``n`` configurations (parents before children) and score them.

    ``spec.sampling == "bimodal"`` draws 3n candidates and keeps n of them
    with probability rising toward both performance extremes.
    """
    problems = validate_space(space)
    if problems:
        raise ValidationError("; ".join(problems))
    spec.check(space)
    if n < 2:
        raise ValidationError("n must be ≥ 2")
    if all((d.is_numeric and d.lo == d.hi) or (not d.is_numeric and len(d.categories) == 1) for d in space.defs):
        raise ValidationError("degenerate space: every hyperparameter is constant")

    rng = np.random.Generator(np.random.PCG64(seed))
    draw = n if spec.sampling == UNIFORM else 3 * n
    cols = _draw_columns(space, draw, rng)
    y = _surface(space, spec, cols, rng)
    if spec.sampling == BIMODAL:
        z = _to_unit_interval(y)
        w = (2 * z - 1) ** 2 + 0.05
        keep = np.sort(rng.choice(draw, size=n, replace=False, p=w / w.sum()))
        cols = [[col[i] for i in keep] for col in cols]
        y = y[keep]
    perf = _to_unit_interval(y)
    records = [(tuple(col[i] for col in cols), float(perf[i])) for i in range(n)]
    return HiaDataset(space, records)
