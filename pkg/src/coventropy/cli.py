"""Config-driven experiment runner.

One subcommand per pipeline, one JSON config per run, flags override config
fields.  Output is byte-stable for a fixed config and seed: a CSV of series
rows (label, n, count, exact, mode) and a JSON summary with slopes and
verdicts.  Exit codes: 0 success, 2 a checked inequality failed, 1 a
structural or usage error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from .cellspace import DEFAULT_EXACT_THRESHOLD, load_model
from .cpapprox import audit_csv_rows, matrix_shift_series
from .errors import StructuralError
from .estimator import (
    DEFAULT_EPSILON,
    GrowthSeries,
    entropy_experiment,
    growth_rate,
    permanence_suite,
    sandwich_verdict,
    series_rows,
)
from .lowerbound import kerr_witness, l1_equivalence_constant, report_to_json
from .symbolic import TransferMatrix, full_shift, golden_mean_shift, load_matrix

_HARD_DEFAULTS = {
    "mode": "coloured",
    "n_max": 8,
    "epsilon": DEFAULT_EPSILON,
    "exact_threshold": DEFAULT_EXACT_THRESHOLD,
    "seed": 0,
    "format": "csv",
    "method": "tail_max",
    "family": "rademacher",
    "m": 3,
    "depth": 2,
    "matrix_shift": None,
    "matrix": None,
    "model": None,
    "out": None,
}

_CONFIG_KEYS = frozenset(_HARD_DEFAULTS)


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    matrix: str | None
    model: str | None
    mode: str
    n_max: int
    epsilon: float
    exact_threshold: int
    out: str | None
    seed: int
    format: str
    method: str
    family: str
    m: int
    depth: int
    matrix_shift: int | None

    def __post_init__(self):
        if self.n_max < 1:
            raise StructuralError("n-max must be at least 1")
        if self.epsilon <= 0:
            raise StructuralError("epsilon must be positive")


class _Parser(argparse.ArgumentParser):
    # usage problems are structural errors, not verdict failures
    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="coventropy", description="entropy experiments on finite cell models")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config; explicit flags override its fields")
        p.add_argument("--out", help="directory for series.csv / summary.json artefacts")
        p.add_argument("--format", choices=["csv", "json"], help="series artefact format (default csv)")
        p.add_argument("--seed", type=int, help="seed for randomized subroutines (default 0)")
        p.add_argument("--exact-threshold", type=int, dest="exact_threshold",
                       help="largest instance handed to exact branch and bound (default 24)")

    def with_source(p, n_help):
        common(p)
        p.add_argument("--matrix", help="transfer matrix: file (.json/.csv) or builtin name "
                                        "(full2..full9, golden)")
        p.add_argument("--model", help="cell model JSON file")
        p.add_argument("--n-max", "--n", type=int, dest="n_max", help=n_help)

    p = sub.add_parser("sft", help="growth series of a subshift in any counting mode")
    with_source(p, "deepest join (default 8)")
    p.add_argument("--mode", choices=["plain", "coloured", "cpc", "qd"], help="counting mode (default coloured)")
    p.add_argument("--epsilon", type=float, help="audit tolerance for qd mode (default 0.5)")
    p.add_argument("--method", choices=["tail_max", "regression"], help="slope estimator (default tail_max)")

    for name, help_text in [
        ("cover", "minimal subcover growth (plain counts)"),
        ("coloured", "minimal coloured refinement growth"),
        ("cpc", "partition-of-unity rank growth"),
        ("qd", "audited order-unit approximant rank growth"),
    ]:
        p = sub.add_parser(name, help=help_text)
        with_source(p, "deepest join (default 8)")
        p.add_argument("--epsilon", type=float, help="audit tolerance (default 0.5)")
        p.add_argument("--method", choices=["tail_max", "regression"], help="slope estimator (default tail_max)")
        if name == "qd":
            p.add_argument("--matrix-shift", type=int, dest="matrix_shift",
                           help="audit the k-letter matrix-shift truncations instead of a cover model")

    p = sub.add_parser("l1", help="l1-equivalence constant of a vector family")
    common(p)
    p.add_argument("--family", choices=["rademacher"], help="builtin family (default rademacher)")
    p.add_argument("--m", type=int, help="family size per time step (default 3)")
    p.add_argument("--depth", type=int, help="number of shifted copies (default 2)")

    p = sub.add_parser("sandwich", help="check N <= N_c <= (d+1)N depth by depth")
    with_source(p, "deepest join to check (default 6)")

    p = sub.add_parser("permanence", help="power-law, direct-sum and conjugacy checks")
    common(p)

    return parser


def _merge_config(args: argparse.Namespace) -> ExperimentConfig:
    merged = dict(_HARD_DEFAULTS)
    if args.command == "sandwich":
        merged["n_max"] = 6
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            doc = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise StructuralError(f"{config_path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
        except OSError as exc:
            raise StructuralError(f"cannot read config: {exc}") from None
        if not isinstance(doc, dict):
            raise StructuralError(f"{config_path}: config must be a JSON object")
        for key, value in doc.items():
            field = key.replace("-", "_")
            if field not in _CONFIG_KEYS:
                raise StructuralError(f"{config_path}: unknown config field {key!r}")
            merged[field] = value
    for field in _CONFIG_KEYS:
        flag_value = getattr(args, field, None)
        if flag_value is not None:
            merged[field] = flag_value
    return ExperimentConfig(command=args.command, **merged)


_BUILTIN_MATRICES = {"golden": golden_mean_shift}
for _k in range(2, 10):
    _BUILTIN_MATRICES[f"full{_k}"] = (lambda k: lambda: full_shift(k))(_k)


def _resolve_matrix(name: str) -> TransferMatrix:
    if name in _BUILTIN_MATRICES:
        return _BUILTIN_MATRICES[name]()
    return load_matrix(name)


def _load_target(config: ExperimentConfig):
    if config.matrix and config.model:
        raise StructuralError("give either --matrix or --model, not both")
    if config.matrix:
        return _resolve_matrix(config.matrix), config.matrix if config.matrix in _BUILTIN_MATRICES else Path(config.matrix).stem
    if config.model:
        return load_model(config.model), Path(config.model).stem
    raise StructuralError("no input: give --matrix or --model")


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.12g}"


def _write_series_csv(path: Path, series_list) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["label", "n", "count", "exact", "mode"])
        for series in series_list:
            for label, mode, n, count, exact in series_rows(series):
                writer.writerow([label, n, count, str(exact).lower(), mode])


def _write_series_json(path: Path, series_list) -> None:
    doc = [
        {
            "label": s.label,
            "mode": s.mode,
            "route": s.route,
            "exact": s.exact,
            "truncated_at": s.truncated_at,
            "points": [{"n": n, "count": c} for n, c in zip(s.ns, s.counts)],
        }
        for s in series_list
    ]
    _write_json(path, doc)


def _write_json(path: Path, doc) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _emit(config: ExperimentConfig, series_list, summary: dict) -> None:
    if not config.out:
        return
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    if series_list is not None:
        if config.format == "csv":
            _write_series_csv(out / "series.csv", series_list)
        else:
            _write_series_json(out / "series.json", series_list)
    _write_json(out / "summary.json", summary)


def _series_summary(series: GrowthSeries, estimate) -> dict:
    return {
        "label": series.label,
        "mode": series.mode,
        "route": series.route,
        "exact": series.exact,
        "truncated_at": series.truncated_at,
        "slope": float(f"{estimate.slope:.12g}"),
        "method": estimate.method,
        "residual": float(f"{estimate.residual:.12g}"),
        "upper_bound_only": estimate.upper_bound_only,
    }


def _run_growth(config: ExperimentConfig, mode: str) -> int:
    target, label = _load_target(config)
    series = entropy_experiment(
        target,
        mode=mode,
        n_max=config.n_max,
        exact_threshold=config.exact_threshold,
        epsilon=config.epsilon,
        label=label,
    )
    estimate = growth_rate(series, config.method)
    summary = {"experiments": [_series_summary(series, estimate)], "seed": config.seed}
    _emit(config, [series], summary)
    flags = " upper-bound-only" if estimate.upper_bound_only else ""
    trunc = f" truncated_at={series.truncated_at}" if series.truncated_at else ""
    print(f"{series.label} {mode} n_max={config.n_max} slope={_fmt(estimate.slope)} "
          f"exact={str(series.exact).lower()} route={series.route}{flags}{trunc}")
    return 0


def _run_matrix_shift(config: ExperimentConfig) -> int:
    reports = matrix_shift_series(config.matrix_shift, config.n_max, seed=config.seed)
    rows = audit_csv_rows(reports)
    worst_mult = max(r.mult_defect for r in reports)
    worst_trace = max(r.trace_defect for r in reports)
    summary = {
        "matrix_shift": {
            "alphabet": config.matrix_shift,
            "n_max": config.n_max,
            "ranks": [r.rank for r in reports],
            "worst_mult_defect": worst_mult,
            "worst_trace_defect": worst_trace,
        },
        "seed": config.seed,
    }
    if config.out:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "audit.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["truncation", "rank", "approx_error", "mult_defect", "trace_defect"])
            for row in rows:
                writer.writerow([row[0], row[1], _fmt(row[2]), _fmt(row[3]), _fmt(row[4])])
        _write_json(out / "summary.json", summary)
    print(f"matrix-shift k={config.matrix_shift} n_max={config.n_max} "
          f"rank_top={reports[-1].rank} mult_defect={_fmt(worst_mult)} trace_defect={_fmt(worst_trace)}")
    return 0


def _run_l1(config: ExperimentConfig) -> int:
    if config.family != "rademacher":
        raise StructuralError(f"unknown family {config.family!r}")
    family = kerr_witness(config.m, config.depth)
    report = l1_equivalence_constant(family, seed=config.seed)
    summary = {"l1": report_to_json(report), "family": config.family,
               "m": config.m, "depth": config.depth, "seed": config.seed}
    _emit(config, None, summary)
    print(f"{config.family} m={config.m} depth={config.depth} K={_fmt(report.K)} "
          f"exact={str(report.exact).lower()} bound_factor={_fmt(report.kerr_bound_factor)}")
    return 0


def _run_sandwich(config: ExperimentConfig) -> int:
    target, label = _load_target(config)
    report = sandwich_verdict(target, n_max=config.n_max, exact_threshold=config.exact_threshold)
    summary = {
        "sandwich": {
            "label": label,
            "status": report.status,
            "colours": report.colours,
            "detail": report.detail,
            "rows": [
                {"n": r.n, "N": r.plain, "Nc": r.coloured, "bound": r.bound} for r in report.rows
            ],
        },
        "seed": config.seed,
    }
    _emit(config, None, summary)
    for r in report.rows:
        verdict = "OK" if r.plain <= r.coloured <= r.bound else "VIOLATED"
        print(f"{label} n={r.n} N={r.plain} Nc={r.coloured} bound={r.bound} {verdict}")
    if report.status == "withheld":
        print(f"{label} verdict withheld: {report.detail}")
        return 0
    if report.status == "violated":
        print(f"{label} sandwich VIOLATED: {report.detail}")
        return 2
    return 0


def _run_permanence(config: ExperimentConfig) -> int:
    checks = permanence_suite(seed=config.seed)
    summary = {
        "permanence": [
            {"name": c.name, "passed": c.passed, "deviation": float(f"{c.deviation:.12g}"),
             "detail": c.detail}
            for c in checks
        ],
        "seed": config.seed,
    }
    _emit(config, None, summary)
    failed = False
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{c.name} {status} deviation={_fmt(c.deviation)}")
        failed = failed or not c.passed
    return 2 if failed else 0


def run(config: ExperimentConfig) -> int:
    if config.command == "sft":
        return _run_growth(config, config.mode)
    if config.command in ("cover", "coloured", "cpc", "qd"):
        if config.command == "qd" and config.matrix_shift is not None:
            return _run_matrix_shift(config)
        mode = {"cover": "plain", "coloured": "coloured", "cpc": "cpc", "qd": "qd"}[config.command]
        return _run_growth(config, mode)
    if config.command == "l1":
        return _run_l1(config)
    if config.command == "sandwich":
        return _run_sandwich(config)
    if config.command == "permanence":
        return _run_permanence(config)
    raise StructuralError(f"unknown command {config.command!r}")


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _merge_config(args)
        return run(config)
    except StructuralError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
