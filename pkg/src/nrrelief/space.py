"""Configuration spaces, instance validation, and the diff/distance primitives.

Numeric differences are scaled by the range *observed* in a dataset, not by
the declared domain; declared domains only gate validation.  Categorical
differences are 0/1.  Distances are Euclidean over those normalized diffs so
that mixed numeric/categorical spaces are commensurable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping, Sequence

from .errors import HiaError

NUMERIC_CONTINUOUS = "numeric-continuous"
NUMERIC_DISCRETE = "numeric-discrete"
CATEGORICAL = "categorical"
KINDS = (NUMERIC_CONTINUOUS, NUMERIC_DISCRETE, CATEGORICAL)


class _Inactive:
    """Marker for a hyperparameter whose parent condition is not met."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INACTIVE"

    def __reduce__(self):
        return (_Inactive, ())


INACTIVE = _Inactive()


@dataclass(frozen=True)
class Parent:
    name: str
    when: tuple


@dataclass(frozen=True)
class HyperparameterDef:
    """One hyperparameter of a configuration space.

    Numeric kinds use ``lo``/``hi`` (and optionally an explicit admissible
    ``values`` set, e.g. batch sizes); categorical kinds use ``categories``.
    """

    name: str
    kind: str
    lo: float | None = None
    hi: float | None = None
    categories: tuple = ()
    values: tuple | None = None
    default: Any = None
    parent: Parent | None = None

    @property
    def is_numeric(self) -> bool:
        return self.kind in (NUMERIC_CONTINUOUS, NUMERIC_DISCRETE)

    def accepts(self, value: Any) -> bool:
        """True if ``value`` is a legal active value for this hyperparameter."""
        if value is INACTIVE:
            return False
        if self.is_numeric:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                return False
            v = float(value)
            if not math.isfinite(v) or v < self.lo or v > self.hi:
                return False
            if self.kind == NUMERIC_DISCRETE and not v.is_integer():
                return False
            if self.values is not None and v not in self.values:
                return False
            return True
        return value in self.categories

    def coerce(self, value: Any) -> Any:
        """Map a raw value (possibly a string from a file) onto the domain.

        Raises ValueError when the value cannot be interpreted.
        """
        if value is INACTIVE:
            return INACTIVE
        if self.is_numeric:
            if isinstance(value, str):
                v = float(value.strip())
            elif isinstance(value, bool):
                raise ValueError(f"{value!r} is not numeric")
            else:
                v = float(value)
            if not self.accepts(v):
                raise ValueError(f"{value!r} outside domain of {self.name}")
            return v
        for cat in self.categories:
            if value == cat or str(value).strip() == str(cat):
                return cat
        raise ValueError(f"{value!r} is not a category of {self.name}")


@dataclass(frozen=True)
class ConfigSpace:
    defs: tuple[HyperparameterDef, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "defs", tuple(self.defs))
        object.__setattr__(self, "_index", {d.name: i for i, d in enumerate(self.defs)})

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.defs)

    def __len__(self) -> int:
        return len(self.defs)

    def __iter__(self):
        return iter(self.defs)

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def index(self, name: str) -> int:
        return self._index[name]

    def get(self, name: str) -> HyperparameterDef:
        return self.defs[self._index[name]]

    def is_active(self, d: HyperparameterDef, values: Sequence[Any]) -> bool:
        """Whether ``d`` is active given the other values of an instance."""
        if d.parent is None:
            return True
        pidx = self._index.get(d.parent.name)
        if pidx is None:
            return False
        pval = values[pidx]
        if pval is INACTIVE or not self.is_active(self.defs[pidx], values):
            return False
        return any(pval == w for w in d.parent.when)

    def topological_order(self) -> list[int]:
        """Indices with every parent before its children (space must be acyclic)."""
        order: list[int] = []
        seen: set[int] = set()

        def visit(i: int, stack: tuple = ()):
            if i in seen:
                return
            if i in stack:
                raise HiaError("dependency cycle")
            d = self.defs[i]
            if d.parent is not None and d.parent.name in self._index:
                visit(self._index[d.parent.name], stack + (i,))
            seen.add(i)
            order.append(i)

        for i in range(len(self.defs)):
            visit(i)
        return order

    def subspace(self, names: Iterable[str]) -> "ConfigSpace":
        """Project onto ``names`` (in the order given), dropping parent links."""
        return ConfigSpace(tuple(replace(self.get(n), parent=None) for n in names))


@dataclass(frozen=True)
class ObservedRanges:
    """Observed (min, max) per numeric hyperparameter plus the performance range."""

    numeric: Mapping[str, tuple[float, float]]
    performance: tuple[float, float]

    def span(self, name: str) -> float:
        lo, hi = self.numeric[name]
        return hi - lo

    @property
    def performance_span(self) -> float:
        return self.performance[1] - self.performance[0]


def validate_space(space: ConfigSpace) -> list[str]:
    """Return every invariant violation in ``space``; an empty list means valid."""
    problems: list[str] = []
    seen: set[str] = set()
    for d in space.defs:
        if d.name in seen:
            problems.append(f"duplicate name {d.name}")
        seen.add(d.name)
        if d.kind not in KINDS:
            problems.append(f"{d.name}: unknown kind {d.kind!r}")
            continue
        if d.is_numeric:
            if d.lo is None or d.hi is None:
                problems.append(f"{d.name}: numeric domain needs lo and hi")
            elif not (math.isfinite(d.lo) and math.isfinite(d.hi)):
                problems.append(f"{d.name}: non-finite domain")
            elif d.lo > d.hi:
                problems.append(f"{d.name}: inverted domain")
            elif d.values is not None:
                if not d.values:
                    problems.append(f"{d.name}: empty value set")
                if any(v < d.lo or v > d.hi for v in d.values):
                    problems.append(f"{d.name}: value set outside [lo, hi]")
        else:
            cats = list(d.categories)
            if not cats:
                problems.append(f"{d.name}: categorical domain is empty")
            elif len(set(cats)) != len(cats):
                problems.append(f"{d.name}: repeated categories")

    index = {}
    for i, d in enumerate(space.defs):
        index.setdefault(d.name, i)
    for d in space.defs:
        if d.parent is None:
            continue
        if d.parent.name == d.name:
            problems.append(f"{d.name}: parent refers to itself")
            continue
        if d.parent.name not in index:
            problems.append(f"{d.name}: unknown parent {d.parent.name}")
            continue
        pdef = space.defs[index[d.parent.name]]
        if not d.parent.when:
            problems.append(f"{d.name}: parent condition lists no values")
        if pdef.kind in KINDS:
            for w in d.parent.when:
                if not pdef.accepts(w):
                    problems.append(f"{d.name}: activating value {w!r} not in domain of {pdef.name}")

    # cycle detection over parent links
    for start in space.defs:
        cur, steps = start, 0
        while cur.parent is not None and cur.parent.name in index and steps <= len(space.defs):
            cur = space.defs[index[cur.parent.name]]
            steps += 1
            if cur.name == start.name:
                problems.append(f"dependency cycle through {start.name}")
                break
    return problems


def validate_instance(space: ConfigSpace, values: Sequence[Any]) -> list[str]:
    """Violations of the ConfigInstance invariants for ``values``."""
    if len(values) != len(space.defs):
        return [f"expected {len(space.defs)} values, got {len(values)}"]
    problems = []
    for d, v in zip(space.defs, values):
        active = space.is_active(d, values)
        if v is INACTIVE:
            if active:
                problems.append(f"{d.name}: inactive but parent condition is met")
        elif not active:
            problems.append(f"{d.name}: has a value but parent condition is unmet")
        elif not d.accepts(v):
            problems.append(f"{d.name}: value {v!r} not in domain")
    return problems


def diff_value(d: HyperparameterDef, a: Any, b: Any, ranges: ObservedRanges) -> float:
    """Normalized difference of two active values of one hyperparameter."""
    if a is INACTIVE or b is INACTIVE:
        raise HiaError("inactive value in diff")
    if d.is_numeric:
        span = ranges.span(d.name)
        if span <= 0:
            return 0.0
        return abs(float(a) - float(b)) / span
    return 0.0 if a == b else 1.0


def distance(space: ConfigSpace, a: Sequence[Any], b: Sequence[Any], ranges: ObservedRanges) -> float:
    """Euclidean distance over per-hyperparameter diffs of the active values."""
    total = 0.0
    for d, x, y in zip(space.defs, a, b):
        if (x is INACTIVE) != (y is INACTIVE):
            raise HiaError("incomparable instances")
        if x is INACTIVE:
            continue
        total += diff_value(d, x, y, ranges) ** 2
    return math.sqrt(total)
