"""Command-line front end.

Exit codes: 0 success, 1 runtime error, 2 invalid input (flags, files, queries).
Results go to ``--output`` (or stdout); diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .conditional import ConditionalQuery, conditional_importance, restrict_to_independent
from .engine import DEFAULT_NEIGHBORS, DEFAULT_SEED, FULL_PASS, MODES, SAMPLED, EngineParams, run_nrrelieff
from .errors import HiaError, ValidationError
from .io import (
    DEFAULT_METRIC,
    load_dataset,
    load_ranking,
    load_space,
    load_surface,
    read_report,
    reliability_to_dict,
    write_dataset,
    write_matrix_csv,
    write_reliability,
    write_report,
)
from .reliability import (
    DEFAULT_BINS,
    DEFAULT_CAP,
    DEFAULT_REPEATS,
    StratificationPlan,
    derive_seed,
    icc,
    repeat_assess,
    spearman_rank_corr,
)
from .synthetic import generate_dataset

HELP_WIDTH = 100


class _Formatter(argparse.HelpFormatter):
    def __init__(self, prog):
        super().__init__(prog, width=HELP_WIDTH, max_help_position=32)


def _bounded_int(name: str, minimum: int):
    def parse(text: str) -> int:
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be an integer, got {text!r}") from None
        if value < minimum:
            raise argparse.ArgumentTypeError(f"{name} must be ≥ {minimum}")
        return value

    return parse


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"sigma must be a number, got {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError("sigma must be > 0")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _fix(text: str) -> tuple[str, str]:
    name, sep, value = text.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"expected name=value, got {text!r}")
    return name.strip(), value.strip()


def _add_data_flags(p: argparse.ArgumentParser, dataset: bool = True) -> None:
    p.add_argument("--space", required=True, help="space file (JSON) or a bundled space name: cnn-space")
    if dataset:
        p.add_argument("--dataset", required=True, help="dataset file (.csv, or .jsonl/.ndjson)")
        p.add_argument("--metric", default=DEFAULT_METRIC, help=f"performance column name (default: {DEFAULT_METRIC})")
        p.add_argument("--lenient", action="store_true", help="skip invalid rows instead of failing (default: strict)")


def _add_engine_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("engine")
    g.add_argument(
        "--neighbors", type=_bounded_int("neighbors", 1), default=DEFAULT_NEIGHBORS,
        help=f"nearest neighbours per sample, J (default: {DEFAULT_NEIGHBORS})",
    )
    g.add_argument("--sigma", type=_positive_float, default=None, help="rank-influence width (default: neighbors/3)")
    g.add_argument(
        "--iterations", type=_bounded_int("iterations", 1), default=None,
        help="samples M, sampled mode only (default: number of records)",
    )
    g.add_argument("--seed", type=_seed, default=DEFAULT_SEED, help=f"seed for all randomness (default: {DEFAULT_SEED})")
    g.add_argument("--mode", choices=MODES, default=FULL_PASS, help=f"sampling mode (default: {FULL_PASS})")
    g.add_argument(
        "--raw-performance-diff", action="store_true",
        help="use |p - p'| without range scaling (default: range-normalized)",
    )


def _add_output_flags(p: argparse.ArgumentParser, formats=("json", "markdown", "csv"), default="json") -> None:
    p.add_argument("--output", "-o", default=None, help="output file (default: stdout)")
    p.add_argument("--format", choices=formats, default=default, help=f"output format (default: {default})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nrrelief",
        description="Hyperparameter importance assessment with N-RReliefF.",
        formatter_class=_Formatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("assess", help="individual and pairwise importance", formatter_class=_Formatter,
                       description="Individual and pairwise importance of every independent hyperparameter.")
    _add_data_flags(p)
    _add_engine_flags(p)
    _add_output_flags(p)

    p = sub.add_parser("conditional", help="importance of child hyperparameters with parents fixed",
                       formatter_class=_Formatter,
                       description="Fix parent hyperparameters, slice the dataset and assess the targets.")
    _add_data_flags(p)
    p.add_argument("--fix", type=_fix, action="append", required=True, metavar="NAME=VALUE",
                   help="condition to fix; repeatable (required)")
    p.add_argument("--targets", required=True, help="comma-separated hyperparameters to assess (required)")
    _add_engine_flags(p)
    _add_output_flags(p)

    p = sub.add_parser("reliability", help="ICC over repeated stratified subsamples", formatter_class=_Formatter,
                       description="Repeat the assessment on stratified subsamples and report ICC(2,1).")
    _add_data_flags(p)
    g = p.add_argument_group("stratification")
    g.add_argument("--repeats", type=int, default=DEFAULT_REPEATS, help=f"number of subsamples (default: {DEFAULT_REPEATS})")
    g.add_argument("--bins", type=_bounded_int("bins", 1), default=DEFAULT_BINS,
                   help=f"equal-width performance intervals (default: {DEFAULT_BINS})")
    g.add_argument("--cap", type=_bounded_int("cap", 1), default=DEFAULT_CAP,
                   help=f"maximum records per interval (default: {DEFAULT_CAP})")
    g.add_argument("--matrix", default=None, help="also write the repeats x K weight matrix as CSV (default: none)")
    _add_engine_flags(p)
    _add_output_flags(p)

    p = sub.add_parser("compare", help="Spearman correlation against an external ranking", formatter_class=_Formatter,
                       description="Spearman rank correlation between a report and an external ranking.")
    p.add_argument("--report", required=True, help="JSON report written by assess or conditional")
    p.add_argument("--ranking", required=True, help="JSON object mapping hyperparameter name to rank")
    _add_output_flags(p, formats=("json", "markdown"))

    p = sub.add_parser("synth", help="generate a synthetic dataset", formatter_class=_Formatter,
                       description="Generate a dataset from a response-surface file.")
    _add_data_flags(p, dataset=False)
    p.add_argument("--surface", required=True, help="surface spec file (JSON)")
    p.add_argument("--n", type=_bounded_int("n", 2), required=True, help="number of records (required)")
    p.add_argument("--seed", type=_seed, default=DEFAULT_SEED, help=f"generator seed (default: {DEFAULT_SEED})")
    p.add_argument("--metric", default=DEFAULT_METRIC, help=f"performance column name (default: {DEFAULT_METRIC})")
    p.add_argument("--output", "-o", required=True, help="dataset file to write; .jsonl/.ndjson for JSON lines, else CSV")

    p = sub.add_parser("validate", help="validate a space and optionally a dataset", formatter_class=_Formatter,
                       description="Validate a space file and, optionally, a dataset against it.")
    p.add_argument("--space", required=True, help="space file (JSON) or a bundled space name: cnn-space")
    p.add_argument("--dataset", default=None, help="dataset file to check (default: none)")
    p.add_argument("--metric", default=DEFAULT_METRIC, help=f"performance column name (default: {DEFAULT_METRIC})")
    return parser


def _emit(text: str, output: str | None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8", newline="\n")


def _engine_params(args) -> EngineParams:
    if args.iterations is not None and args.mode != SAMPLED:
        raise ValidationError("--iterations requires --mode sampled")
    return EngineParams(
        neighbors=args.neighbors, sigma=args.sigma, iterations=args.iterations, seed=args.seed,
        mode=args.mode, raw_performance_diff=args.raw_performance_diff,
    )


def _load(args):
    space = load_space(args.space)
    issues: list[str] = []
    dataset = load_dataset(args.dataset, space, metric=args.metric, strict=not args.lenient, issues=issues)
    for msg in issues:
        print(f"skipped: {msg}", file=sys.stderr)
    return dataset


def cmd_assess(args) -> int:
    params = _engine_params(args)
    dataset, dropped = restrict_to_independent(_load(args))
    report = run_nrrelieff(dataset, params)
    if dropped:
        note = f"excluded child hyperparameters (use conditional): {', '.join(dropped)}"
        report = replace(report, warnings=(note,) + report.warnings)
    _emit(write_report(report, args.format), args.output)
    return 0


def cmd_conditional(args) -> int:
    params = _engine_params(args)
    targets = [t.strip() for t in args.targets.split(",") if t.strip()]
    fixed = {}
    for name, value in args.fix:
        if name in fixed:
            raise ValidationError(f"--fix given twice for {name}")
        fixed[name] = value
    dataset = _load(args)
    report = conditional_importance(dataset, ConditionalQuery(fixed, targets), params)
    _emit(write_report(report, args.format), args.output)
    return 0


def cmd_reliability(args) -> int:
    if args.repeats < 2:
        raise ValidationError("need ≥ 2 repeats")
    params = _engine_params(args)
    plan = StratificationPlan(args.bins, args.cap, args.seed)
    dataset, _ = restrict_to_independent(_load(args))
    matrix = repeat_assess(dataset, args.repeats, plan, params)
    result = icc(matrix)
    seeds = [derive_seed(plan.seed, r) for r in range(args.repeats)]
    doc = reliability_to_dict(dataset.space.names, matrix, result, plan, params, seeds)
    if args.matrix:
        _emit(write_matrix_csv(dataset.space.names, matrix), args.matrix)
    _emit(write_reliability(doc, args.format), args.output)
    print(f"{result.variant} = {result.icc:.6f} ({result.interpretation})", file=sys.stderr)
    return 0


def cmd_compare(args) -> int:
    report = read_report(args.report)
    ranking = load_ranking(args.ranking)
    rho = spearman_rank_corr(report.ranking(), ranking)
    if args.format == "json":
        doc = {"spearman": rho, "n": len(ranking), "report_ranks": report.ranking(), "reference_ranks": ranking}
        text = json.dumps(doc, indent=2) + "\n"
    else:
        text = write_report(replace(report, reference_ranks=ranking), "markdown")
        text += f"\nSpearman rank correlation with reference: {rho:.6f}\n"
    _emit(text, args.output)
    return 0


def cmd_synth(args) -> int:
    space = load_space(args.space)
    spec = load_surface(args.surface, space)
    dataset = generate_dataset(space, spec, args.n, args.seed)
    write_dataset(dataset, args.output, metric=args.metric)
    return 0


def cmd_validate(args) -> int:
    space = load_space(args.space)
    if args.dataset is None:
        print(f"ok: space with {len(space)} hyperparameters")
        return 0
    issues: list[str] = []
    try:
        dataset = load_dataset(args.dataset, space, metric=args.metric, strict=False, issues=issues)
    except ValidationError:
        for msg in issues:
            print(msg, file=sys.stderr)
        raise
    if issues:
        for msg in issues:
            print(msg, file=sys.stderr)
        print(f"invalid: {len(issues)} bad row(s), {len(dataset)} valid", file=sys.stderr)
        return 2
    print(f"ok: {len(dataset)} records, {len(space)} hyperparameters")
    return 0


COMMANDS = {
    "assess": cmd_assess,
    "conditional": cmd_conditional,
    "reliability": cmd_reliability,
    "compare": cmd_compare,
    "synth": cmd_synth,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except HiaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
