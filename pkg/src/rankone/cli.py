"""Command-line driver: `verify <suite>`, `ledger <space>`, `emit <report>`.

Exit codes: 0 when every check passes, 1 when a check fails, 2 on a bad
configuration or a missing input.
"""

import argparse
import sys
from pathlib import Path

from . import campaign as cp
from . import report as rp
from .spaces import SUPPORTED

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    # raise instead of exiting so main() owns the exit code
    def error(self, message):
        self.print_usage(sys.stderr)
        raise cp.ConfigError(message)


def _campaign_flags(p):
    p.add_argument("--space", choices=SUPPORTED)
    p.add_argument("--n-samples", type=int, dest="n_samples")
    p.add_argument("--seed", type=int)
    p.add_argument("--R", type=float, dest="R", help="sup-norm radius of the field ball")
    p.add_argument("--sigma", type=float)
    p.add_argument("--radius", type=float, help="radius of random points around the base point")
    p.add_argument("--tol-structure", type=float, dest="tol_structure")
    p.add_argument("--phi", help="random:K")
    p.add_argument("--points", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--jobs", type=int)


def build_parser():
    parser = _Parser(prog="rankone", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    verify = sub.add_parser("verify", help="run a verification suite")
    verify.add_argument("suite", choices=sorted(cp.SUITES))
    _campaign_flags(verify)
    verify.add_argument("--config", help="JSON file with the same keys as the flags; flags win")
    verify.add_argument("--out", help="directory for report.json and the CSV tables")
    verify.add_argument("--verbose", "-v", action="store_true", help="print every check")

    ledger = sub.add_parser("ledger", help="print the constants ledger of a space")
    ledger.add_argument("space", choices=SUPPORTED)
    ledger.add_argument("--R", type=float, default=2.0, dest="R")
    ledger.add_argument("--sigma", type=float, default=0.1)
    ledger.add_argument("--n-samples", type=int, dest="n_samples")
    ledger.add_argument("--seed", type=int, default=0)
    ledger.add_argument("--out", help="file for the ledger JSON (stdout otherwise)")

    emit = sub.add_parser("emit", help="write CSV tables from a report")
    emit.add_argument("report")
    emit.add_argument("--out", help="directory for the CSVs (defaults to the report's directory)")
    return parser


def _verify(args):
    flags = {k: getattr(args, k) for k in
             ("space", "n_samples", "seed", "R", "sigma", "radius", "tol_structure",
              "phi", "points", "trials", "jobs", "out")}
    cfg = cp.build_config(args.suite, flags, args.config)
    report = cp.run_suite(cfg)
    for c in report["checks"]:
        if args.verbose or not c["pass"]:
            status = "pass" if c["pass"] else "FAIL"
            print(f"{status}  {c['case']}  {c['name']}  residual={c['residual']:.3e}  tol={c['tolerance']:.1e}")
    s = report["summary"]
    print(f"{report['suite']}: {s['checks'] - s['failed']}/{s['checks']} checks pass")
    if cfg.out is not None:
        out = Path(cfg.out)
        rp.write_report(report, out / "report.json")
        rp.emit_tables(report, out)
        print(f"report written to {out / 'report.json'}")
    return EXIT_OK if s["pass"] else EXIT_FAILED


def _ledger(args):
    if args.n_samples is not None and (args.n_samples < 2 or args.n_samples % 2):
        raise cp.ConfigError("--n-samples must be even and at least 2")
    if not (args.R > 0 and args.sigma > 0):
        raise cp.ConfigError("R and sigma must be positive")
    text = rp.dumps(cp.ledger_report(args.space, args.R, args.sigma, args.n_samples, args.seed))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _emit(args):
    try:
        report = rp.load_report(args.report)
    except (OSError, ValueError) as exc:
        raise cp.ConfigError(str(exc)) from exc
    out = Path(args.out) if args.out else Path(args.report).parent
    for path in rp.emit_tables(report, out):
        print(path)
    return EXIT_OK


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return {"verify": _verify, "ledger": _ledger, "emit": _emit}[args.command](args)
    except cp.ConfigError as exc:
        print(f"rankone: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
