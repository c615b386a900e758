"""Command line: ``swduality run`` and ``swduality diff``.

Exit codes: 0 all checks PASS (or SKIPPED), 1 some check FAILed,
2 usage, config, resource or parse errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .config import SUITES, load
from .errors import ConfigError, ResourceError, ValidationError
from .report import FAIL, ReportError, compare_reports, load_report

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser():
    p = _Parser(prog="swduality", description="Finite checks for Smale-space duality.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    r = sub.add_parser("run", help="run one verification suite")
    r.add_argument("--config", required=True, help="experiment config (JSON)")
    r.add_argument("--suite", required=True, choices=SUITES)
    r.add_argument("--out", required=True, help="where to write the JSON report")
    r.add_argument("-q", "--quiet", action="store_true", help="no per-check summary")
    d = sub.add_parser("diff", help="compare two reports, ignoring timings")
    d.add_argument("r1")
    d.add_argument("r2")
    return p


def _run(args):
    from .suites import run
    try:
        cfg = load(args.config)
        rep = run(cfg, args.suite)
    except (ConfigError, ResourceError, ValidationError) as e:
        kind = type(e).__name__.replace("Error", " error").lower()
        print(f"swduality: {kind}: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        rep.write(args.out)
    except OSError as e:
        print(f"swduality: cannot write {args.out}: {e.strerror}", file=sys.stderr)
        return EXIT_USAGE
    if not args.quiet:
        for c in rep.checks:
            extra = f"  ({c['reason']})" if c.get("reason") else ""
            print(f"{c['status']:8s} {args.suite}/{c['name']}{extra}")
        print(f"{rep.status} {args.suite}: report written to {args.out}")
    return EXIT_FAIL if rep.status == FAIL else EXIT_OK


def _diff(args):
    try:
        diffs = compare_reports(load_report(args.r1), load_report(args.r2))
    except ReportError as e:
        print(f"swduality: {e}", file=sys.stderr)
        return EXIT_USAGE
    if not diffs:
        print("no differences (timings ignored)")
        return EXIT_OK
    for d in diffs:
        print(f"{d['path']}: {json.dumps(d['left'])} -> {json.dumps(d['right'])}")
    return EXIT_FAIL


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.cmd == "run":
        return _run(args)
    return _diff(args)


if __name__ == "__main__":
    sys.exit(main())
