"""Dependent-hyperparameter assessment: fix parents, slice, assess children."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Mapping, Sequence

from .dataset import HiaDataset
from .engine import EngineParams, ImportanceReport, rank_order, run_nrrelieff
from .errors import EmptySliceError, ValidationError
from .space import INACTIVE, ConfigSpace

NUMERIC_MATCH_TOL = 1e-12
NORMALIZATION_SKIPPED = "some weights are not positive; normalization skipped"


@dataclass(frozen=True)
class ConditionalQuery:
    fixed: Mapping[str, Any]
    targets: Sequence[str]


def _coerce_fixed(space: ConfigSpace, fixed: Mapping[str, Any]) -> dict[str, Any]:
    out = {}
    for name, value in fixed.items():
        if name not in space:
            raise ValidationError(f"unknown hyperparameter {name!r} in condition")
        try:
            out[name] = space.get(name).coerce(value)
        except ValueError as exc:
            raise ValidationError(f"condition {name}={value!r}: {exc}") from None
    return out


def _matches(space: ConfigSpace, inst: Sequence[Any], fixed: Mapping[str, Any]) -> bool:
    for name, want in fixed.items():
        d = space.get(name)
        v = inst[space.index(name)]
        if v is INACTIVE:
            return False
        if d.is_numeric:
            if abs(float(v) - float(want)) > NUMERIC_MATCH_TOL:
                return False
        elif v != want:
            return False
    return True


def filter_by_parent(dataset: HiaDataset, fixed: Mapping[str, Any]) -> HiaDataset:
    """Records whose values equal every entry of ``fixed``, in original order."""
    fixed = _coerce_fixed(dataset.space, fixed)
    keep = [i for i, (inst, _) in enumerate(dataset.records) if _matches(dataset.space, inst, fixed)]
    if not keep:
        raise EmptySliceError("no records match condition")
    return dataset.subset(keep)


def check_query(space: ConfigSpace, query: ConditionalQuery) -> dict[str, Any]:
    """Validate ``query`` against ``space``; returns the coerced fixed values."""
    fixed = _coerce_fixed(space, query.fixed)
    if not query.targets:
        raise ValidationError("no target hyperparameters given")
    if len(set(query.targets)) != len(query.targets):
        raise ValidationError("duplicate target hyperparameters")
    for name in query.targets:
        if name not in space:
            raise ValidationError(f"unknown target hyperparameter {name!r}")
        if name in fixed:
            raise ValidationError(f"{name} is both fixed and a target")
        # walk up the parent chain; every ancestor condition must hold under `fixed`
        d = space.get(name)
        while d.parent is not None:
            pname = d.parent.name
            if pname not in fixed:
                raise ValidationError(f"target {d.name} depends on {pname}, which is not fixed")
            if not any(fixed[pname] == w for w in d.parent.when):
                raise ValidationError(f"target {d.name} is inactive when {pname}={fixed[pname]!r}")
            d = space.get(pname)
    return fixed


def normalize_weights(raw: Sequence[float]) -> tuple[tuple[float, ...], str | None]:
    """Scale positive weights to sum to one.

    Returns the weights unchanged plus a warning when any weight is not
    positive, since sum-to-one is meaningless with negative Relief weights.
    """
    if all(w > 0 for w in raw):
        total = sum(raw)
        return tuple(w / total for w in raw), None
    return tuple(raw), NORMALIZATION_SKIPPED


def conditional_importance(
    dataset: HiaDataset, query: ConditionalQuery, params: EngineParams | None = None
) -> ImportanceReport:
    """Assess ``query.targets`` within the slice selected by ``query.fixed``.

    Only the targets enter distances and diffs. Displayed weights are
    normalized to sum to one when all raw weights are positive.
    """
    fixed = check_query(dataset.space, query)
    sliced = filter_by_parent(dataset, fixed).project(query.targets)
    report = run_nrrelieff(sliced, params)
    normalized, note = normalize_weights(report.weights)
    notes = report.warnings + ((note,) if note else ())
    return replace(
        report,
        weights=normalized,
        ranks=rank_order(report.weights),
        raw_weights=report.weights,
        warnings=notes,
        fixed=dict(fixed),
    )


def independent_names(space: ConfigSpace) -> list[str]:
    """Hyperparameters that declare no parent, in space order."""
    return [d.name for d in space.defs if d.parent is None]


def restrict_to_independent(dataset: HiaDataset) -> tuple[HiaDataset, list[str]]:
    """Drop every child hyperparameter; returns the projection and the dropped names."""
    keep = independent_names(dataset.space)
    dropped = [n for n in dataset.space.names if n not in keep]
    if not dropped:
        return dataset, []
    return dataset.project(keep), dropped
