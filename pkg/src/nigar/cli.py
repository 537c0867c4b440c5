"""Command-line front end: ``nigar {fit,simulate,diagnose,replicate}``.

Exit codes: 0 success, 2 the EM fit hit its iteration cap, 1 usage or
input errors.  ``NIGAR_LOG`` (error, warning, info, debug) sets the log
level on stderr.
"""

import argparse
import csv
import io as _io
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .diagnostics import (
    acf,
    histogram,
    jarque_bera,
    ks_2sample,
    ks_normality,
    pacf,
    qq_points,
    replication_study,
)
from .distributions import NigParams, RngStream, nig_sample
from .errors import NigarError
from .estimation import Criterion, EmConfig, Mode, StopReason, cls_rho, em_fit
from .io import format_float, ingest_csv_report, write_series_csv
from .model import NigArModel, residuals, simulate_path

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_ERROR", "EXIT_NOT_CONVERGED"]

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2

MIN_FIT_LENGTH = 10
REFERENCE_DRAWS = 100_000
# stream ids under --seed; replicates use 0..reps-1 of their own seed
_SIMULATE_STREAM = 0
_REFERENCE_STREAM = 1

logger = logging.getLogger("nigar")

_DEFAULT_TRUTH = {"alpha": 2.24, "beta": 1.0, "mu": 1.0, "delta": 2.0, "rho": 0.5}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _add_em_flags(p):
    p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.JOINT.value)
    p.add_argument(
        "--criterion", choices=[c.value for c in Criterion], default=Criterion.LOGLIK.value
    )
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--max-iter", type=int, default=2000)


def _add_param_flags(p, defaults):
    d = defaults or {}
    p.add_argument("--rho", type=float, default=d.get("rho"))
    scale = p.add_mutually_exclusive_group()
    scale.add_argument("--alpha", type=float)
    scale.add_argument("--gamma", type=float, help="give gamma instead of alpha")
    p.add_argument("--beta", type=float, default=d.get("beta"))
    p.add_argument("--mu", type=float, default=d.get("mu"))
    p.add_argument("--delta", type=float, default=d.get("delta"))
    p.set_defaults(_default_alpha=d.get("alpha"))


def _add_common(p, formats=("json", "csv")):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o", help="output path (default: stdout)")
    p.add_argument("--format", choices=formats, default=formats[0])


def _add_input(p):
    p.add_argument("--input", "-i", required=True, help="CSV file with a header row")
    p.add_argument("--column", default="Close", help="value column (default Close)")


def build_parser():
    parser = _Parser(prog="nigar", description="NIG autoregression toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    fit = sub.add_parser("fit", help="fit the model to a price column")
    _add_input(fit)
    _add_em_flags(fit)
    _add_common(fit)

    sim = sub.add_parser("simulate", help="simulate a path")
    _add_param_flags(sim, _DEFAULT_TRUTH)
    sim.add_argument("--n", type=int, default=1000)
    _add_common(sim, formats=("csv", "json"))

    diag = sub.add_parser("diagnose", help="correlograms, histogram, QQ data and KS checks")
    _add_input(diag)
    _add_param_flags(diag, None)
    _add_em_flags(diag)
    diag.add_argument("--max-lag", type=int, default=30)
    diag.add_argument("--bins", type=int, default=50)
    _add_common(diag)

    rep = sub.add_parser("replicate", help="simulate-and-fit replication study")
    _add_param_flags(rep, _DEFAULT_TRUTH)
    _add_em_flags(rep)
    rep.add_argument("--n", type=int, default=10_000)
    rep.add_argument("--reps", type=int, default=100)
    rep.add_argument("--workers", type=int, default=1)
    _add_common(rep)
    return parser


def _em_config(args):
    return EmConfig(
        max_iterations=args.max_iter,
        tolerance=args.tol,
        criterion=Criterion(args.criterion),
        mode=Mode(args.mode),
    )


def _model_from_args(args):
    """The model named on the command line, or None when no parameter was given."""
    if args.alpha is None and args.gamma is None:
        args.alpha = args._default_alpha
    names = ("rho", "alpha", "gamma", "beta", "mu", "delta")
    given = {k: getattr(args, k) for k in names if getattr(args, k) is not None}
    if not given:
        return None
    missing = [k for k in ("rho", "beta", "mu", "delta") if k not in given]
    if "alpha" not in given and "gamma" not in given:
        missing.append("alpha or gamma")
    if missing:
        raise UsageError(f"missing model parameter(s): {', '.join(missing)}")
    if "gamma" in given:
        innov = NigParams.from_gamma(given["gamma"], given["beta"], given["mu"], given["delta"])
    else:
        innov = NigParams(given["alpha"], given["beta"], given["mu"], given["delta"])
    return NigArModel(given["rho"], innov)


def _config_echo(args):
    return {k: v for k, v in sorted(vars(args).items()) if not k.startswith("_") and k != "command"}


def _envelope(args, result):
    return {
        "command": args.command,
        "config_echo": _config_echo(args),
        "seed": args.seed,
        "result": result,
    }


def _dump_json(obj):
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"


def _emit_text(text, output):
    if output:
        Path(output).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)


def _csv_text(header, rows):
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def _sidecar(output, suffix):
    path = Path(output)
    return path.with_name(path.name + suffix)


def _load(args):
    report = ingest_csv_report(args.input, args.column)
    for msg in report.warnings:
        print(f"warning: {msg}", file=sys.stderr)
    return report


def _ingest_summary(report):
    s = report.series
    return {
        "column": report.column,
        "length": len(s),
        "dropped_rows": report.dropped,
        "duplicate_dates": report.duplicates,
        "first_label": s.labels[0] if s.labels else None,
        "last_label": s.labels[-1] if s.labels else None,
    }


def _residual_checks(eps, innov, seed):
    reference = nig_sample(innov, RngStream(seed, _REFERENCE_STREAM), REFERENCE_DRAWS)
    return reference, {
        "ks_normality": ks_normality(eps).as_dict(),
        "jarque_bera": jarque_bera(eps).as_dict(),
        "ks_2sample_vs_fitted": ks_2sample(eps, reference).as_dict(),
    }


def _fit(series, args):
    if len(series) < MIN_FIT_LENGTH:
        raise UsageError(f"fitting needs at least {MIN_FIT_LENGTH} observations, got {len(series)}")
    return em_fit(series, _em_config(args))


def cmd_fit(args):
    ingest = _load(args)
    report = _fit(ingest.series, args)
    eps = residuals(ingest.series, report.params.rho)
    _, checks = _residual_checks(eps, report.params.innov, args.seed)
    report.diagnostics = checks
    result = report.to_dict()
    result["ingest"] = _ingest_summary(ingest)
    if args.format == "json":
        _emit_text(_dump_json(_envelope(args, result)), args.output)
    else:
        header = ["iteration", "loglik", "rho", "alpha", "beta", "mu", "delta", "gamma"]
        rows = [[row[k] for k in header] for row in result["trace"]]
        _emit_text(_csv_text(header, rows), args.output)
        if args.output:
            summary = dict(result)
            summary.pop("trace")
            _sidecar(args.output, ".meta.json").write_text(
                _dump_json(_envelope(args, summary)), encoding="utf-8"
            )
    if report.stop_reason is StopReason.MAX_ITERATIONS:
        print("warning: EM stopped at the iteration cap without converging", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_simulate(args):
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    model = _model_from_args(args)
    series = simulate_path(model, args.n, RngStream(args.seed, _SIMULATE_STREAM))
    meta = {"model": model.as_dict(), "n": args.n, "stream_id": _SIMULATE_STREAM}
    if args.format == "json":
        result = {**meta, "values": series.values.tolist()}
        _emit_text(_dump_json(_envelope(args, result)), args.output)
        return EXIT_OK
    if args.output:
        write_series_csv(args.output, series.values)
        _sidecar(args.output, ".meta.json").write_text(
            _dump_json(_envelope(args, meta)), encoding="utf-8"
        )
    else:
        write_series_csv(sys.stdout, series.values)
    return EXIT_OK


def cmd_diagnose(args):
    ingest = _load(args)
    series = ingest.series
    model = _model_from_args(args)
    fitted = None
    if model is None:
        fit = _fit(series, args)
        model = fit.params
        fitted = {"stop_reason": fit.stop_reason.value, "iterations": fit.iterations}
    eps = residuals(series, model.rho)
    reference, checks = _residual_checks(eps, model.innov, args.seed)
    counts, edges = histogram(eps, bins=args.bins)
    acf_pts = acf(series, args.max_lag)
    pacf_pts = pacf(series, args.max_lag)
    qq = qq_points(eps, reference)
    result = {
        "ingest": _ingest_summary(ingest),
        "model": model.as_dict(),
        "fit": fitted,
        "rho_cls": cls_rho(series),
        "acf": [p.as_dict() for p in acf_pts],
        "pacf": [p.as_dict() for p in pacf_pts],
        "residual_histogram": {"counts": counts.tolist(), "edges": edges.tolist()},
        "qq": {"residual": qq[:, 0].tolist(), "fitted": qq[:, 1].tolist()},
        **checks,
    }
    if args.format == "json":
        _emit_text(_dump_json(_envelope(args, result)), args.output)
    else:
        rows = [
            [a.lag, a.value, p.value, a.conf_band] for a, p in zip(acf_pts, pacf_pts)
        ]
        _emit_text(_csv_text(["lag", "acf", "pacf", "band"], rows), args.output)
        if args.output:
            rest = {k: v for k, v in result.items() if k not in ("acf", "pacf")}
            _sidecar(args.output, ".meta.json").write_text(
                _dump_json(_envelope(args, rest)), encoding="utf-8"
            )
    return EXIT_OK


def cmd_replicate(args):
    truth = _model_from_args(args)
    if args.n < MIN_FIT_LENGTH:
        raise UsageError(f"--n must be at least {MIN_FIT_LENGTH}")
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")
    study = replication_study(
        truth, args.n, args.reps, _em_config(args), RngStream(args.seed), workers=args.workers
    )
    summary = study.as_dict()
    header = ["replicate"] + list(study.estimates)
    ok = [r for r in range(study.reps) if r not in {f for f, _ in study.failures}]
    rows = [[r] + [float(study.estimates[k][i]) for k in study.estimates] for i, r in enumerate(ok)]
    if args.format == "json":
        result = {**summary, "estimates": [dict(zip(header, row)) for row in rows]}
        _emit_text(_dump_json(_envelope(args, result)), args.output)
    else:
        _emit_text(_csv_text(header, rows), args.output)
        if args.output:
            _sidecar(args.output, ".summary.json").write_text(
                _dump_json(_envelope(args, summary)), encoding="utf-8"
            )
    return EXIT_OK


COMMANDS = {
    "fit": cmd_fit,
    "simulate": cmd_simulate,
    "diagnose": cmd_diagnose,
    "replicate": cmd_replicate,
}


def _configure_logging():
    level = os.environ.get("NIGAR_LOG", "warning").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv=None):
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, NigarError, ArithmeticError, OSError) as exc:
        print(f"nigar {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
