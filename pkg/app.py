"""
qpz: zeta values of real quadratic fields and period polynomials of the
cusp forms built from binary quadratic forms.
"""
import argparse
import logging
import os
import sys
from typing import Any, Callable, Dict, List, Optional, TextIO

from components.dedekind_report import build_dedekind_record
from components.forms_report import build_forms_record, forms_table_text
from components.output import emit, to_json
from components.period_report import build_period_record
from components.verify_suite import SUITES, run_suite
from components.zeta_diff_report import build_zeta_diff_record
from components.zeta_report import build_zeta_record
from utils.config import ConfigError, RunConfig, load_config
from utils.errors import QpzError
from utils.gap_metrics import build_report_frame, format_report_table, get_gap_metrics
from utils.result_cache import ResultCache, cache_key

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DOMAIN_ERROR = 1
EXIT_USAGE = 2
EXIT_VERIFY_FAILED = 3

TEMPLATES = {
    "dedekind": "dedekind.txt.j2",
    "zeta-diff": "zeta_diff.txt.j2",
    "period": "period.txt.j2",
    "forms": "forms.txt.j2",
    "zeta": "zeta.txt.j2",
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--prec", type=int, help="working precision in bits (default 192)")
    parser.add_argument("--json", action="store_true", help="write the JSON record")
    parser.add_argument("--cache", help="append-only result cache file")
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")


def _add_family(parser: argparse.ArgumentParser, rho: bool = True, k_default: Optional[int] = None) -> None:
    parser.add_argument("--k", type=int, required=k_default is None, default=k_default,
                        help="weight parameter (forms have weight 2k)")
    parser.add_argument("--N", type=int, required=True, help="level")
    parser.add_argument("--D", type=int, required=True, help="discriminant")
    if rho:
        parser.add_argument("--rho", type=int, required=True, help="residue with rho^2 = D mod 4N")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qpz",
        description="Zeta values of real quadratic fields from period polynomials.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    dedekind = sub.add_parser("dedekind", help="zeta_K(k) of Q(sqrt(D)) as a divisor sum")
    _add_family(dedekind, rho=False)
    dedekind.add_argument("--assume-plus-space-vanishes", action="store_true",
                          help="accept levels whose plus-space vanishing is not tabulated")
    _add_common(dedekind)

    zeta_diff = sub.add_parser("zeta-diff", help="zeta_{N,D,rho}(k) - zeta_{N,D,-rho}(k) for odd k")
    _add_family(zeta_diff)
    zeta_diff.add_argument("--cmax", type=int, help="truncation bound of the direct sums")
    _add_common(zeta_diff)

    period = sub.add_parser("period", help="identity component of the period polynomial")
    _add_family(period)
    period.add_argument("--cmax", type=int, help="truncation bound of the reported direct zeta sums")
    period.add_argument("--bbound", type=int, help="initial |b| truncation of the definition-level series")
    period.add_argument("--abound", type=int, help="initial |a| truncation of the completed series")
    period.add_argument("--tol", type=float, help="quadrature tolerance (series tolerance is a tenth of it)")
    period.add_argument("--strict-series", action="store_true",
                        help="fail instead of warning when the form series does not settle")
    _add_common(period)

    forms = sub.add_parser("forms", help="enumerate the forms with ac < 0")
    _add_family(forms, k_default=2)
    _add_common(forms)

    zeta = sub.add_parser("zeta", help="truncated family zeta zeta_{N,D,rho}(k)")
    _add_family(zeta)
    zeta.add_argument("--cmax", type=int, help="truncation bound")
    _add_common(zeta)

    verify = sub.add_parser("verify", help="run the verification suite")
    verify.add_argument("--suite", choices=SUITES, default="fast")
    verify.add_argument("--cmax", type=int, help="truncation bound for the decomposition check")
    verify.add_argument("--bbound", type=int, help="initial |b| truncation of the definition-level series")
    verify.add_argument("--abound", type=int, help="initial |a| truncation of the completed series")
    verify.add_argument("--tol", type=float, help="quadrature tolerance")
    verify.add_argument("--strict-series", action="store_true")
    _add_common(verify)
    return parser


def configure_logging(verbose: bool) -> None:
    level_name = os.getenv("QPZ_LOG_LEVEL", "WARNING").upper()
    level = logging.INFO if verbose else getattr(logging, level_name, logging.WARNING)
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    logging.getLogger().setLevel(level)


def _config_flags(args: argparse.Namespace) -> Dict[str, Any]:
    tol = getattr(args, "tol", None)
    return {
        "precision_bits": args.prec,
        "c_max": getattr(args, "cmax", None),
        "b_bound_initial": getattr(args, "bbound", None),
        "a_bound_initial": getattr(args, "abound", None),
        "quadrature_tol": tol,
        "series_tol": tol / 10 if tol is not None else None,
        "cache_path": args.cache,
        "output_format": "json" if args.json else None,
        "strict_series": True if getattr(args, "strict_series", False) else None,
    }


def _record_builder(args: argparse.Namespace, config: RunConfig) -> Callable[[], Dict[str, Any]]:
    command = args.command
    if command == "dedekind":
        return lambda: build_dedekind_record(args.k, args.N, args.D, args.assume_plus_space_vanishes, config)
    if command == "zeta-diff":
        return lambda: build_zeta_diff_record(args.k, args.N, args.D, args.rho, args.cmax, config)
    if command == "period":
        return lambda: build_period_record(args.k, args.N, args.D, args.rho, config)
    if command == "forms":
        return lambda: build_forms_record(args.k, args.N, args.D, args.rho)
    return lambda: build_zeta_record(args.k, args.N, args.D, args.rho, args.cmax, config)


def _params(args: argparse.Namespace) -> Dict[str, Any]:
    skip = {"command", "json", "cache", "config", "verbose", "prec", "cmax", "bbound", "abound", "tol", "strict_series"}
    return {name: value for name, value in sorted(vars(args).items()) if name not in skip}


def compute_record(args: argparse.Namespace, config: RunConfig) -> Dict[str, Any]:
    """Build the record of a subcommand, through the result cache when one is configured."""
    build = _record_builder(args, config)
    if not config.cache_path:
        return build()
    cache = ResultCache(config.cache_path)
    key = cache_key(args.command, _params(args), config.cache_key_fields())
    record = cache.get(key)
    if record is None:
        record = build()
        cache.put(key, record)
    return record


def run_verify(args: argparse.Namespace, config: RunConfig, stdout: TextIO) -> int:
    rows = run_suite(args.suite, config)
    df = build_report_frame(rows)
    metrics = get_gap_metrics(df)
    if config.output_format == "json":
        record = {
            "subcommand": "verify",
            "suite": args.suite,
            "rows": [
                {
                    "criterion": row["criterion"],
                    "description": row["description"],
                    "gap": f"{row['gap']:.6e}",
                    "tolerance": f"{row['tolerance']:.6e}",
                    "passed": row["passed"],
                    "seconds": f"{row['seconds']:.3f}",
                }
                for row in rows
            ],
            "passed": metrics["failed"] == 0,
            "failed_criteria": metrics["failed_criteria"],
            "precision_bits": config.precision_bits,
        }
        stdout.write(to_json(record) + "\n")
    else:
        emit({}, "verify.txt.j2", "text", stdout,
             suite=args.suite, table=format_report_table(df), metrics=metrics)
    return EXIT_OK if metrics["failed"] == 0 else EXIT_VERIFY_FAILED


def run(argv: Optional[List[str]] = None, stdout: Optional[TextIO] = None,
        stderr: Optional[TextIO] = None) -> int:
    """
    Run one qpz command.

    Returns:
        int: 0 on success, 1 on a domain error, 2 on a usage error,
        3 when the verification suite fails
    """
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    configure_logging(args.verbose)
    try:
        config = load_config(_config_flags(args), args.config)
    except ConfigError as e:
        parser.print_usage(stderr)
        stderr.write(f"usage error: {e}\n")
        return EXIT_USAGE

    try:
        if args.command == "verify":
            return run_verify(args, config, stdout)
        record = compute_record(args, config)
        extra = {"table": forms_table_text(record)} if args.command == "forms" else {}
        emit(record, TEMPLATES[args.command], config.output_format, stdout, **extra)
    except QpzError as e:
        stderr.write(f"error: {type(e).__name__}: {e}\n")
        return EXIT_DOMAIN_ERROR
    return EXIT_OK


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
