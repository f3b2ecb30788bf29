"""Evaluated configuration datasets with cached observed ranges."""

from __future__ import annotations

import math
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import ValidationError
from .space import INACTIVE, ConfigSpace, ObservedRanges, validate_instance


class HiaDataset:
    """Ordered (configuration, performance) records over a :class:`ConfigSpace`.

    Construction validates every instance and computes the observed ranges
    once. Treat instances as immutable; the encoded arrays are read-only.
    """

    def __init__(self, space: ConfigSpace, records: Iterable[tuple[Sequence[Any], float]]):
        self.space = space
        recs = []
        for row, (values, perf) in enumerate(records):
            values = tuple(values)
            problems = validate_instance(space, values)
            if problems:
                raise ValidationError(f"record {row}: " + "; ".join(problems))
            p = float(perf)
            if not math.isfinite(p):
                raise ValidationError(f"record {row}: performance {perf!r} is not finite")
            recs.append((values, p))
        self.records: tuple[tuple[tuple, float], ...] = tuple(recs)
        self._encode()

    def _encode(self) -> None:
        space, n, k = self.space, len(self.records), len(self.space)
        values = np.full((n, k), np.nan)
        codes = np.zeros((n, k), dtype=np.int64)
        inactive = np.zeros((n, k), dtype=bool)
        for j, d in enumerate(space.defs):
            lookup = {c: i for i, c in enumerate(d.categories)}
            for i, (inst, _) in enumerate(self.records):
                v = inst[j]
                if v is INACTIVE:
                    inactive[i, j] = True
                    codes[i, j] = -1
                elif d.is_numeric:
                    values[i, j] = float(v)
                else:
                    codes[i, j] = lookup[v]
        perf = np.array([p for _, p in self.records], dtype=float)

        numeric = {}
        for j, d in enumerate(space.defs):
            if d.is_numeric:
                col = values[~inactive[:, j], j]
                if col.size:
                    numeric[d.name] = (float(col.min()), float(col.max()))
        prange = (float(perf.min()), float(perf.max())) if n else (0.0, 0.0)
        self.ranges = ObservedRanges(numeric, prange)

        for arr in (values, codes, inactive, perf):
            arr.setflags(write=False)
        self.values, self.codes, self.inactive, self.performance = values, codes, inactive, perf

    def __len__(self) -> int:
        return len(self.records)

    def __repr__(self) -> str:
        return f"HiaDataset({len(self)} records, {len(self.space)} hyperparameters)"

    @property
    def instances(self) -> list[tuple]:
        return [inst for inst, _ in self.records]

    def subset(self, indices: Iterable[int]) -> "HiaDataset":
        """Records at ``indices`` (in the given order) with ranges recomputed."""
        return HiaDataset(self.space, [self.records[i] for i in indices])

    def project(self, names: Iterable[str]) -> "HiaDataset":
        """Restrict every record to ``names``, in that order."""
        sub = self.space.subspace(names)
        cols = [self.space.index(n) for n in sub.names]
        return HiaDataset(sub, [(tuple(inst[c] for c in cols), p) for inst, p in self.records])
