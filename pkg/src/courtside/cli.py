"""Command-line entry point.

    courtside make-fixture four_factors --n 200 --out data/four_factors.csv
    courtside run four_factors.cfg --out-dir out
    courtside --config salary.cfg fit

Exit codes: 0 success, 2 usage or config error, 3 data error,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .errors import CourtsideError, UsageError
from .fixtures import KINDS, make_fixture
from .pipeline import STAGES, StageError, load_config, run, run_stage

DEFAULT_OUT = "out"


def _globals(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, default=default, help="override the config seed")
    parser.add_argument("--out-dir", default=default, help="output directory")
    parser.add_argument("--config", default=default, help="config file or bundled config name")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="courtside", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"courtside {__version__}")
    _globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    fx = sub.add_parser("make-fixture", help="write a synthetic fixture CSV and its truth sidecar")
    _globals(fx, suppress=True)
    fx.add_argument("kind", choices=KINDS)
    fx.add_argument("--n", type=int, default=None, help="rows (default: bundled size)")
    fx.add_argument("--out", default=None, help="CSV path (default: <out-dir>/<kind>.csv)")

    for stage in (*STAGES, "run"):
        help_ = "run every stage" if stage == "run" else f"run the {stage} stage"
        sp = sub.add_parser(stage, help=help_)
        _globals(sp, suppress=True)
        sp.add_argument("config_path", nargs="?", metavar="CONFIG", help="config file or bundled name")
    return parser


BUNDLED_ROWS = {"four_factors": 200, "salary": 2000, "roles": 1000}


def _main(args: argparse.Namespace) -> int:
    if args.command == "make-fixture":
        n = args.n if args.n is not None else BUNDLED_ROWS[args.kind]
        out = Path(args.out) if args.out else Path(args.out_dir or ".") / f"{args.kind}.csv"
        path = make_fixture(args.kind, n, args.seed if args.seed is not None else 0, out)
        print(path)
        return 0

    cfg_name = args.config_path or args.config
    if cfg_name is None:
        raise UsageError(f"{args.command} needs a config (positional or --config)")
    cfg = load_config(cfg_name, args.seed)
    out = Path(args.out_dir or cfg.values.get("out_dir") or DEFAULT_OUT)
    if args.command == "run":
        run(cfg, out)
        print(out / "report.json")
    else:
        run_stage(args.command, cfg, out)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _main(args)
    except StageError as exc:
        print(f"courtside: {exc.stage} stage failed: {exc.cause}", file=sys.stderr)
        return exc.exit_code
    except CourtsideError as exc:
        print(f"courtside: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"courtside: error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
