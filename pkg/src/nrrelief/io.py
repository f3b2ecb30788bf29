"""Reading and writing spaces, datasets, surfaces, rankings and reports."""

from __future__ import annotations

import csv
import io as _stdio
import json
import logging
import math
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np

from .conditional import NORMALIZATION_SKIPPED
from .dataset import HiaDataset
from .engine import AccumulatorState, EngineParams, ImportanceReport, PairWeight
from .errors import ValidationError
from .space import (
    CATEGORICAL,
    INACTIVE,
    KINDS,
    NUMERIC_DISCRETE,
    ConfigSpace,
    HyperparameterDef,
    Parent,
    validate_instance,
    validate_space,
)
from .synthetic import SurfaceSpec

log = logging.getLogger(__name__)

BUILTIN_SPACES = {"cnn-space": "cnn_space.json"}
REPORT_FORMAT = "nrrelief-report/1"
DEFAULT_METRIC = "performance"
INACTIVE_TOKENS = ("", "NA")
TOP_PAIRS = 10

_SPACE_KEYS = {"hyperparameters", "description"}
_HP_KEYS = {"name", "kind", "domain", "default", "parent", "description"}
_NUMERIC_DOMAIN_KEYS = {"lo", "hi", "values"}
_PARENT_KEYS = {"name", "when"}


def _read_json(path) -> Any:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read {p}: {exc.strerror or exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{p}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _unknown(obj: Mapping, allowed: set, where: str) -> None:
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ValidationError(f"{where}: unknown key(s) {', '.join(map(repr, extra))}")


def _parse_hp(obj: Any, where: str) -> HyperparameterDef:
    if not isinstance(obj, dict):
        raise ValidationError(f"{where}: expected an object")
    _unknown(obj, _HP_KEYS, where)
    for key in ("name", "kind", "domain"):
        if key not in obj:
            raise ValidationError(f"{where}.{key}: missing")
    name = obj["name"]
    if not isinstance(name, str) or not name:
        raise ValidationError(f"{where}.name: expected a non-empty string")
    kind = obj["kind"]
    if kind not in KINDS:
        raise ValidationError(f"{where}.kind: unknown kind {kind!r} (expected one of {', '.join(KINDS)})")
    dom = obj["domain"]
    if not isinstance(dom, dict):
        raise ValidationError(f"{where}.domain: expected an object")
    lo = hi = values = None
    cats: tuple = ()
    if kind == CATEGORICAL:
        _unknown(dom, {"categories"}, f"{where}.domain")
        if "categories" not in dom or not isinstance(dom["categories"], list):
            raise ValidationError(f"{where}.domain.categories: expected a list")
        for c in dom["categories"]:
            if isinstance(c, bool) or not isinstance(c, (str, int, float)):
                raise ValidationError(f"{where}.domain.categories: {c!r} is not a string or number")
        cats = tuple(dom["categories"])
    else:
        _unknown(dom, _NUMERIC_DOMAIN_KEYS, f"{where}.domain")
        for key in ("lo", "hi"):
            if key not in dom:
                raise ValidationError(f"{where}.domain.{key}: missing")
        lo = _number(dom["lo"], f"{where}.domain.lo")
        hi = _number(dom["hi"], f"{where}.domain.hi")
        if "values" in dom:
            if not isinstance(dom["values"], list):
                raise ValidationError(f"{where}.domain.values: expected a list")
            values = tuple(_number(v, f"{where}.domain.values") for v in dom["values"])
    parent = None
    if obj.get("parent") is not None:
        pobj = obj["parent"]
        if not isinstance(pobj, dict):
            raise ValidationError(f"{where}.parent: expected an object")
        _unknown(pobj, _PARENT_KEYS, f"{where}.parent")
        if not isinstance(pobj.get("name"), str) or not isinstance(pobj.get("when"), list):
            raise ValidationError(f"{where}.parent: needs a 'name' string and a 'when' list")
        parent = Parent(pobj["name"], tuple(pobj["when"]))
    return HyperparameterDef(name, kind, lo, hi, cats, values, obj.get("default"), parent)


def parse_space(doc: Any, source: str = "space") -> ConfigSpace:
    if not isinstance(doc, dict):
        raise ValidationError(f"{source}: expected a JSON object")
    _unknown(doc, _SPACE_KEYS, source)
    hps = doc.get("hyperparameters")
    if not isinstance(hps, list):
        raise ValidationError(f"{source}.hyperparameters: expected a list")
    if not hps:
        raise ValidationError(f"{source}: empty space")
    space = ConfigSpace(tuple(_parse_hp(h, f"{source}.hyperparameters[{i}]") for i, h in enumerate(hps)))
    problems = validate_space(space)
    if problems:
        raise ValidationError(f"{source}: invalid space: " + "; ".join(problems))
    return space


def load_space(path) -> ConfigSpace:
    """Load a space file, or a bundled space by name (e.g. ``cnn-space``)."""
    if str(path) in BUILTIN_SPACES:
        ref = resources.files("nrrelief") / "data" / BUILTIN_SPACES[str(path)]
        return parse_space(json.loads(ref.read_text(encoding="utf-8")), str(path))
    return parse_space(_read_json(path), str(path))


def space_to_dict(space: ConfigSpace) -> dict:
    out = []
    for d in space.defs:
        item: dict[str, Any] = {"name": d.name, "kind": d.kind}
        if d.is_numeric:
            dom: dict[str, Any] = {"lo": d.lo, "hi": d.hi}
            if d.values is not None:
                dom["values"] = list(d.values)
            item["domain"] = dom
        else:
            item["domain"] = {"categories": list(d.categories)}
        if d.default is not None:
            item["default"] = d.default
        if d.parent is not None:
            item["parent"] = {"name": d.parent.name, "when": list(d.parent.when)}
        out.append(item)
    return {"hyperparameters": out}


# -- datasets ---------------------------------------------------------------


def _cell(d: HyperparameterDef, raw: Any) -> Any:
    if raw is None or (isinstance(raw, str) and raw.strip() in INACTIVE_TOKENS):
        return INACTIVE
    return d.coerce(raw)


def _metric(raw: Any) -> float:
    if isinstance(raw, bool):
        raise ValueError(f"metric {raw!r} is not numeric")
    try:
        p = float(raw.strip() if isinstance(raw, str) else raw)
    except (TypeError, ValueError):
        raise ValueError(f"metric {raw!r} is not numeric") from None
    if not math.isfinite(p):
        raise ValueError(f"metric {raw!r} is not finite")
    return p


def _iter_rows(path: Path):
    """Yield (line number, mapping) pairs from a CSV or JSON-lines file."""
    suffix = path.suffix.lower()
    try:
        fh = path.open(encoding="utf-8", newline="")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror or exc}") from None
    with fh:
        if suffix in (".jsonl", ".ndjson"):
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    yield lineno, ValueError(f"invalid JSON: {exc.msg}")
                    continue
                yield lineno, obj if isinstance(obj, dict) else ValueError("expected a JSON object")
        else:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                return
            yield 0, list(reader.fieldnames)
            for row in reader:
                yield reader.line_num, row


def load_dataset(
    path,
    space: ConfigSpace,
    metric: str = DEFAULT_METRIC,
    strict: bool = True,
    issues: list[str] | None = None,
) -> HiaDataset:
    """Load records from CSV (header row) or JSON lines.

    Empty cells, ``NA`` cells, and missing or null JSON fields are INACTIVE.
    In strict mode the first bad row raises; otherwise bad rows are skipped
    and described in ``issues`` (if given) and the log.
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"dataset file not found: {path}")
    records = []
    skipped: list[str] = []
    for lineno, row in _iter_rows(path):
        if lineno == 0:
            _check_columns(row, space, metric, path)
            continue
        try:
            if isinstance(row, Exception):
                raise row
            values = tuple(_cell(d, row.get(d.name)) for d in space.defs)
            problems = validate_instance(space, values)
            if problems:
                raise ValueError("; ".join(problems))
            records.append((values, _metric(row.get(metric))))
        except ValueError as exc:
            msg = f"{path}: line {lineno}: {exc}"
            if strict:
                raise ValidationError(msg) from None
            skipped.append(msg)
    if skipped:
        log.warning("skipped %d bad row(s) in %s", len(skipped), path)
        if issues is not None:
            issues.extend(skipped)
    if len(records) < 2:
        raise ValidationError(f"{path}: dataset too small ({len(records)} valid records)")
    return HiaDataset(space, records)


def _check_columns(header: list[str], space: ConfigSpace, metric: str, path: Path) -> None:
    if metric not in header:
        raise ValidationError(f"{path}: missing metric column {metric!r}")
    for d in space.defs:
        if d.parent is None and d.name not in header:
            raise ValidationError(f"{path}: missing column {d.name!r}")


def _format_value(d: HyperparameterDef, v: Any) -> str:
    if v is INACTIVE:
        return ""
    if d.is_numeric:
        if d.kind == NUMERIC_DISCRETE and float(v).is_integer():
            return str(int(v))
        return repr(float(v))
    return str(v)


def write_dataset(dataset: HiaDataset, path, metric: str = DEFAULT_METRIC) -> None:
    """Write CSV (or JSON lines for ``.jsonl``/``.ndjson`` paths)."""
    path = Path(path)
    defs = dataset.space.defs
    if path.suffix.lower() in (".jsonl", ".ndjson"):
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            for inst, p in dataset.records:
                obj = {d.name: (None if v is INACTIVE else v) for d, v in zip(defs, inst)}
                obj[metric] = p
                fh.write(json.dumps(obj) + "\n")
        return
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([d.name for d in defs] + [metric])
        for inst, p in dataset.records:
            w.writerow([_format_value(d, v) for d, v in zip(defs, inst)] + [repr(float(p))])


# -- surfaces and rankings --------------------------------------------------


def load_surface(path, space: ConfigSpace) -> SurfaceSpec:
    """Surface file: {"linear": {...}, "interactions": [[a, b, c]], "categorical": {name: {cat: off}}, "noise_std", "sampling"}."""
    doc = _read_json(path)
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: expected a JSON object")
    _unknown(doc, {"linear", "interactions", "categorical", "noise_std", "sampling", "description"}, str(path))
    linear = {str(k): _number(v, f"{path}.linear.{k}") for k, v in doc.get("linear", {}).items()}
    inter = []
    for i, item in enumerate(doc.get("interactions", [])):
        if not (isinstance(item, list) and len(item) == 3):
            raise ValidationError(f"{path}.interactions[{i}]: expected [name, name, coefficient]")
        inter.append((str(item[0]), str(item[1]), _number(item[2], f"{path}.interactions[{i}]")))
    cat_effects = {}
    for name, offsets in doc.get("categorical", {}).items():
        if name not in space:
            raise ValidationError(f"{path}.categorical.{name}: unknown hyperparameter")
        d = space.get(name)
        for label, off in offsets.items():
            try:
                cat = d.coerce(label)
            except ValueError as exc:
                raise ValidationError(f"{path}.categorical.{name}: {exc}") from None
            cat_effects[(name, cat)] = _number(off, f"{path}.categorical.{name}.{label}")
    spec = SurfaceSpec(
        linear_coeffs=linear,
        interactions=tuple(inter),
        noise_std=_number(doc.get("noise_std", 0.0), f"{path}.noise_std"),
        categorical_effects=cat_effects,
        sampling=doc.get("sampling", "uniform"),
    )
    spec.check(space)
    return spec


def load_ranking(path) -> dict[str, float]:
    """External ranking file: a JSON object mapping hyperparameter name to rank."""
    doc = _read_json(path)
    if not isinstance(doc, dict) or not doc:
        raise ValidationError(f"{path}: expected a non-empty object of name -> rank")
    return {str(k): _number(v, f"{path}.{k}") for k, v in doc.items()}


# -- reports ----------------------------------------------------------------


def _f6(x: float) -> str:
    return f"{x:.6f}"


def _md_escape(s: str) -> str:
    return str(s).replace("|", "\\|")


def _fmt_fixed(fixed: Mapping[str, Any]) -> str:
    return ", ".join(f"{k} = {_plain(v)}" for k, v in fixed.items())


def _plain(v: Any) -> str:
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return str(v)


def report_to_dict(report: ImportanceReport) -> dict:
    return {
        "format": REPORT_FORMAT,
        "hyperparameters": [
            {"name": n, "weight": w, "rank": r} for n, w, r in zip(report.names, report.weights, report.ranks)
        ],
        "raw_weights": list(report.raw_weights) if report.raw_weights is not None else None,
        "pairs": [{"first": p.first, "second": p.second, "weight": p.weight} for p in report.pairs],
        "params": report.params.to_dict() if report.params is not None else None,
        "warnings": list(report.warnings),
        "n_records": report.n_records,
        "iterations": report.iterations,
        "neighbors_used": report.neighbors_used,
        "fixed": dict(report.fixed) if report.fixed is not None else None,
        "reference_ranks": dict(report.reference_ranks) if report.reference_ranks is not None else None,
        "accumulators": report.accumulators.to_dict() if report.accumulators is not None else None,
    }


def report_from_dict(doc: Mapping) -> ImportanceReport:
    if doc.get("format") != REPORT_FORMAT:
        raise ValidationError(f"not a report document (format {doc.get('format')!r})")
    try:
        hps = doc["hyperparameters"]
        acc = doc.get("accumulators")
        return ImportanceReport(
            names=tuple(h["name"] for h in hps),
            weights=tuple(float(h["weight"]) for h in hps),
            ranks=tuple(int(h["rank"]) for h in hps),
            pairs=tuple(PairWeight(p["first"], p["second"], float(p["weight"])) for p in doc.get("pairs", [])),
            params=EngineParams(**doc["params"]) if doc.get("params") is not None else None,
            warnings=tuple(doc.get("warnings", [])),
            raw_weights=tuple(float(x) for x in doc["raw_weights"]) if doc.get("raw_weights") is not None else None,
            accumulators=(
                AccumulatorState(
                    acc["n_diff_p"], np.array(acc["n_diff_theta"]), np.array(acc["n_diff_p_and_theta"])
                )
                if acc is not None
                else None
            ),
            n_records=doc.get("n_records"),
            iterations=doc.get("iterations"),
            neighbors_used=doc.get("neighbors_used"),
            fixed=doc.get("fixed"),
            reference_ranks=doc.get("reference_ranks"),
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed report document: {exc}") from None


def read_report(path) -> ImportanceReport:
    return report_from_dict(_read_json(path))


def _report_markdown(report: ImportanceReport) -> str:
    title = "# Hyperparameter importance"
    if report.fixed:
        title += f" ({_fmt_fixed(report.fixed)})"
    lines = [title, ""]
    show_raw = report.raw_weights is not None and tuple(report.raw_weights) != tuple(report.weights)
    head = ["Hyperparameter", "Weights"]
    if show_raw:
        head.append("Raw weights")
    head.append("Rank")
    if report.reference_ranks is not None:
        head.append("Reference rank")
    lines.append("| " + " | ".join(head) + " |")
    lines.append("|" + "|".join(["---"] * len(head)) + "|")
    for i in report.ordered():
        cells = [_md_escape(report.names[i]), _f6(report.weights[i])]
        if show_raw:
            cells.append(_f6(report.raw_weights[i]))
        cells.append(str(report.ranks[i]))
        if report.reference_ranks is not None:
            ref = report.reference_ranks.get(report.names[i])
            cells.append("" if ref is None else _plain(ref))
        lines.append("| " + " | ".join(cells) + " |")

    if report.pairs:
        shown = report.ordered_pairs()[:TOP_PAIRS]
        lines += ["", f"## Joint importance (top {len(shown)} of {len(report.pairs)} pairs)", ""]
        lines.append("| Hyperparameter pair | Weights | Rank |")
        lines.append("|---|---|---|")
        for r, p in enumerate(shown, start=1):
            lines.append(f"| ({_md_escape(p.first)}, {_md_escape(p.second)}) | {_f6(p.weight)} | {r} |")

    meta = []
    if report.n_records is not None:
        meta.append(f"records: {report.n_records}")
    if report.iterations is not None:
        meta.append(f"iterations: {report.iterations}")
    if report.params is not None:
        prm = report.params
        used = f" (used {report.neighbors_used})" if report.neighbors_used not in (None, prm.neighbors) else ""
        meta.append(f"neighbors: {prm.neighbors}{used}")
        meta.append(f"sigma: {prm.sigma!r}")
        meta.append(f"mode: {prm.mode}")
        meta.append(f"seed: {prm.seed}")
        meta.append(f"performance diff: {'raw' if prm.raw_performance_diff else 'range-normalized'}")
    if report.raw_weights is not None:
        normalized = NORMALIZATION_SKIPPED not in report.warnings
        meta.append("weights: normalized to sum to 1" if normalized else "weights: raw (not normalized)")
    meta.append("warnings: " + ("; ".join(report.warnings) if report.warnings else "none"))
    lines += ["", "---", ""] + [f"- {m}" for m in meta]
    return "\n".join(lines) + "\n"


def _report_csv(report: ImportanceReport) -> str:
    buf = _stdio.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "first", "second", "weight", "raw_weight", "rank"])
    for i in report.ordered():
        raw = _f6(report.raw_weights[i]) if report.raw_weights is not None else ""
        w.writerow(["individual", report.names[i], "", _f6(report.weights[i]), raw, report.ranks[i]])
    for r, p in enumerate(report.ordered_pairs(), start=1):
        w.writerow(["pair", p.first, p.second, _f6(p.weight), "", r])
    return buf.getvalue()


def write_report(report: ImportanceReport, fmt: str = "json") -> str:
    """Render ``report`` as ``json`` (loss-free), ``markdown`` or ``csv``."""
    if fmt == "json":
        return json.dumps(report_to_dict(report), indent=2) + "\n"
    if fmt == "markdown":
        return _report_markdown(report)
    if fmt == "csv":
        return _report_csv(report)
    raise ValidationError(f"unknown report format {fmt!r}")


# -- reliability output -----------------------------------------------------


def reliability_to_dict(names, matrix, result, plan, params, seeds) -> dict:
    return {
        "format": "nrrelief-reliability/1",
        "names": list(names),
        "icc": result.to_dict(),
        "repeats": len(matrix),
        "bins": plan.bin_count,
        "cap": plan.cap_per_bin,
        "seed": plan.seed,
        "repeat_seeds": [int(s) for s in seeds],
        "params": params.to_dict(),
        "matrix": [[float(x) for x in row] for row in matrix],
    }


def write_matrix_csv(names: Iterable[str], matrix) -> str:
    buf = _stdio.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["repeat", *names])
    for r, row in enumerate(matrix):
        w.writerow([r, *(repr(float(x)) for x in row)])
    return buf.getvalue()


def write_reliability(doc: Mapping, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(doc, indent=2) + "\n"
    if fmt == "csv":
        return write_matrix_csv(doc["names"], doc["matrix"])
    if fmt == "markdown":
        icc = doc["icc"]
        lines = [
            "# Reliability",
            "",
            f"- {icc['variant']}: {_f6(icc['icc'])} ({icc['interpretation']})",
            f"- subjects (hyperparameters): {icc['n_subjects']}",
            f"- raters (repeats): {icc['n_raters']}",
            f"- bins: {doc['bins']}, cap per bin: {doc['cap']}, seed: {doc['seed']}",
            "",
            "| Repeat | " + " | ".join(_md_escape(n) for n in doc["names"]) + " |",
            "|" + "|".join(["---"] * (len(doc["names"]) + 1)) + "|",
        ]
        for r, row in enumerate(doc["matrix"]):
            lines.append(f"| {r} | " + " | ".join(_f6(x) for x in row) + " |")
        return "\n".join(lines) + "\n"
    raise ValidationError(f"unknown output format {fmt!r}")
