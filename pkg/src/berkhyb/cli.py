"""Command-line entry point.

    berkhyb <kind> --manifest <path> [--out <dir>] [--seed <u64>] [--threads <n>]

Exit status: 0 when every check passes, 1 on check failures (the report
is still written), 2 on manifest/parse errors (no outputs are written).
The default output directory is ``berkhyb-out/<kind>`` under the current
directory, or $BERKHYB_OUT when set.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .harness import KINDS, ExperimentManifest, ManifestError, run, write_report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="berkhyb",
        description="valuation / tropical-metric / hybrid-limit experiments",
    )
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} manifest")
        p.add_argument("--manifest", required=True, help="manifest JSON path")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the manifest seed")
        p.add_argument("--threads", type=int, default=1,
                       help="worker hint for grid sweeps (numpy runs vectorized)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        manifest = ExperimentManifest.load(args.manifest)
        if manifest.kind != args.kind:
            raise ManifestError(
                f"manifest kind {manifest.kind!r} does not match "
                f"subcommand {args.kind!r}"
            )
        if args.seed is not None:
            manifest.seed = args.seed
            manifest.raw["seed"] = args.seed
    except ManifestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out_dir = args.out or os.environ.get("BERKHYB_OUT") or \
        str(Path("berkhyb-out") / args.kind)
    report = run(manifest)
    write_report(report, Path(out_dir))
    for check in report.checks:
        status = "PASS" if check.passed else "FAIL"
        line = f"[{status}] {check.name}"
        if check.details:
            line += f": {check.details}"
        print(line)
    print(f"report: {Path(out_dir) / 'report.json'}")
    return 0 if report.passed() else 1


if __name__ == "__main__":
    sys.exit(main())
