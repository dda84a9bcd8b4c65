"""Command-line driver.

Exit codes: 0 success with every check passing, 1 runtime failure, 2 usage
error, 3 ran fine but an unbiasedness or identity check failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

from . import oracle
from .dist import class_number, entropy, parse_dist_spec
from .errors import CapExceeded, PreconditionViolated, ValidationError
from .estimators import ESTIMATOR_IDS, WINDOWED_IDS, evaluate, m4_from_counts_exact
from .mc import DEFAULT_Z_THRESHOLD, ExperimentConfig, compare, default_workers, run_replications
from .sampler import DEFAULT_MAX_DRAWS, GENERATOR, SampleStream

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, EXIT_CHECK = 0, 1, 2, 3

REPORT_KEYS = ("estimator", "dist", "n", "reps", "failures", "mean", "stddev", "stderr",
               "truth", "bias", "z", "mean_draws", "seed", "generator")
SERIES_POINTS = (-0.9, -0.7, -0.5, -0.3, -0.1, 0.1, 0.3, 0.5, 0.7, 0.9)
SERIES_TERMS = 2000
SERIES_TOL = 1e-8


def _dist_arg(text):
    try:
        return parse_dist_spec(text)
    except ValidationError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _u64(text):
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"{text} is not an unsigned 64-bit integer")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqentropy", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", default=None, help="output path (default: stdout)")

    sampling = argparse.ArgumentParser(add_help=False)
    sampling.add_argument("--seed", type=_u64, default=0)
    sampling.add_argument("--max-draws", type=_positive_int, default=DEFAULT_MAX_DRAWS)
    sampling.add_argument("--n", type=_positive_int, default=None)

    est = sub.add_parser("estimate", parents=[common, sampling], help="one estimator evaluation")
    est.add_argument("--dist", type=_dist_arg, required=True)
    est.add_argument("--estimator", choices=ESTIMATOR_IDS, required=True)

    mc = sub.add_parser("mc", parents=[common, sampling], help="Monte Carlo bias run")
    mc.add_argument("--dist", type=_dist_arg, required=True)
    mc.add_argument("--estimator", choices=ESTIMATOR_IDS, required=True)
    mc.add_argument("--reps", type=_positive_int, required=True)
    mc.add_argument("--z-threshold", type=_positive_float, default=DEFAULT_Z_THRESHOLD)
    mc.add_argument("--workers", type=_positive_int, default=None)

    ver = sub.add_parser("verify", parents=[common], help="analytic and combinatorial oracles")
    ver.add_argument("--dist", type=_dist_arg, required=True)
    ver.add_argument("--tol", type=_positive_float, default=1e-9)

    cmp_ = sub.add_parser("compare", parents=[common, sampling], help="run a grid of experiments")
    cmp_.add_argument("--config", required=True, help="JSON Lines file, one experiment per line")
    cmp_.add_argument("--reps", type=_positive_int, default=1000,
                      help="replications for grid lines that do not set reps")
    cmp_.add_argument("--z-threshold", type=_positive_float, default=DEFAULT_Z_THRESHOLD)
    cmp_.add_argument("--workers", type=_positive_int, default=None)
    return parser


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.subcommand in ("estimate", "mc") and args.estimator in WINDOWED_IDS and args.n is None:
        parser.error(f"--n is required for estimator {args.estimator}")
    if args.subcommand == "mc" and args.reps < 2:
        parser.error("--reps must be at least 2")
    if getattr(args, "workers", 1) is None:
        args.workers = default_workers()
    return args


# -- serialization --------------------------------------------------------------

def _scalar(v):
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.17g}"
    return v


def _json_value(v):
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        s = _scalar(v)
        return json.dumps(s) if not math.isfinite(v) else s
    if isinstance(v, int):
        return str(v)
    return json.dumps(v)


def _json_object(row: dict) -> str:
    return "{" + ", ".join(f"{json.dumps(k)}: {_json_value(v)}" for k, v in row.items()) + "}"


def emit_rows(rows, fmt: str, as_list: bool) -> str:
    """Serialize dict rows; floats carry 17 significant digits, non-finite ones become strings."""
    rows = list(rows)
    if fmt == "json":
        if as_list:
            return "[\n" + ",\n".join("  " + _json_object(r) for r in rows) + "\n]\n"
        return _json_object(rows[0]) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(rows[0]))
    for r in rows:
        writer.writerow(["" if v is None else _scalar(v) for v in r.values()])
    return buf.getvalue()


def emit_report(reports, fmt: str = "json") -> str:
    """Serialize one ``MonteCarloReport`` (JSON object) or a list of them (JSON array)."""
    if isinstance(reports, (list, tuple)):
        return emit_rows([r.row() for r in reports], fmt, as_list=True)
    return emit_rows([reports.row()], fmt, as_list=False)


def _write(text, path):
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# -- subcommands ------------------------------------------------------------------

def run_estimate(args):
    stream = SampleStream(args.dist, args.seed, args.max_draws)
    rec = evaluate(args.estimator, stream, n=args.n)
    row = {"estimator": rec.estimator_id, "dist": args.dist.describe(), "n": args.n,
           "value": rec.value, "draws": rec.draws_consumed, "seed": args.seed,
           "generator": GENERATOR}
    return emit_rows([row], args.format, as_list=False), EXIT_OK


def _passes(report):
    return not report.claims_unbiased or report.certified


def run_mc(args):
    config = ExperimentConfig(args.dist, args.estimator, n=args.n, replications=args.reps,
                              seed=args.seed, max_draws=args.max_draws,
                              z_threshold=args.z_threshold)
    report = run_replications(config, workers=args.workers)
    return emit_report(report, args.format), EXIT_OK if _passes(report) else EXIT_CHECK


def verification_rows(dist, tol):
    """Oracle checks for one distribution: expectation series, power series, rearrangement sweep."""
    H, M = entropy(dist), float(class_number(dist))
    rows = []
    for name, fn, truth in (("expected_h1", oracle.expected_h1, H),
                            ("expected_h2", oracle.expected_h2, H),
                            ("expected_m1", oracle.expected_m1, M)):
        res = fn(dist, tol)
        error = abs(res.value - truth)
        rows.append({"check": name, "dist": dist.describe(), "value": res.value,
                     "truth": truth, "error": error, "bound": res.tail_bound,
                     "terms": res.terms_used,
                     "passed": res.tail_bound <= tol and error <= res.tail_bound})
    for x in SERIES_POINTS:
        gap = oracle.series_identity_check(x, SERIES_TERMS)
        rows.append({"check": f"series x={x:g}", "dist": None, "value": gap, "truth": 0.0,
                     "error": gap, "bound": SERIES_TOL, "terms": SERIES_TERMS,
                     "passed": gap <= SERIES_TOL})
    configs = list(oracle.count_configurations())
    mismatches = sum(
        1 for n, r, m, s in configs
        if oracle.m4_permutation_oracle(n, r, m, s) != m4_from_counts_exact(n, r, m, s)
    )
    rows.append({"check": "m4 rearrangement", "dist": None, "value": float(mismatches),
                 "truth": 0.0, "error": float(mismatches), "bound": 0.0,
                 "terms": len(configs), "passed": mismatches == 0})
    return rows


def run_verify(args):
    rows = verification_rows(args.dist, args.tol)
    ok = all(r["passed"] for r in rows)
    return emit_rows(rows, args.format, as_list=True), EXIT_OK if ok else EXIT_CHECK


def load_grid(path, defaults):
    """Read experiments from a JSON Lines file; missing keys fall back to ``defaults``."""
    configs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            spec = {**defaults, **json.loads(line)}
            try:
                configs.append(ExperimentConfig(
                    parse_dist_spec(spec["dist"]), spec["estimator"], n=spec.get("n"),
                    replications=spec["reps"], seed=spec["seed"],
                    max_draws=spec["max_draws"], z_threshold=spec["z_threshold"],
                ))
            except (KeyError, ValidationError) as exc:
                raise ValidationError(f"{path}:{lineno}: bad experiment: {exc}") from exc
    return configs


def run_compare(args):
    defaults = {"reps": args.reps, "seed": args.seed, "max_draws": args.max_draws,
                "z_threshold": args.z_threshold}
    if args.n is not None:
        defaults["n"] = args.n
    configs = load_grid(args.config, defaults)
    reports = compare(configs, workers=args.workers)
    ok = all(_passes(r) for r in reports)
    return emit_report(reports, args.format), EXIT_OK if ok else EXIT_CHECK


COMMANDS = {"estimate": run_estimate, "mc": run_mc, "verify": run_verify, "compare": run_compare}


def main(argv=None) -> int:
    args = parse_args(sys.argv[1:] if argv is None else argv)
    try:
        text, code = COMMANDS[args.subcommand](args)
    except (ValidationError, PreconditionViolated) as exc:
        print(f"seqentropy: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CapExceeded, OSError, ValueError) as exc:
        print(f"seqentropy: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    try:
        _write(text, args.out)
    except OSError as exc:
        print(f"seqentropy: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return code


if __name__ == "__main__":
    sys.exit(main())
