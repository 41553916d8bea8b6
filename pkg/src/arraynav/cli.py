"""Command line entry point.

Exit codes: 0 success, 1 configuration error, 2 data or parse error,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from arraynav import experiments
from arraynav.errors import ArrayNavError, ConfigError, DataError, NumericError, ParseError

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("arraynav")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _common(p):
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--seed", type=int, help="master random seed")
    p.add_argument("--out-dir", help="directory for CSV output")
    p.add_argument("--almanac", help="YUMA almanac (default: bundled)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = _Parser(prog="arraynav", description="GNSS array multipath detection experiments")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    sb = sub.add_parser("static-bench", help="Monte-Carlo detection benchmark")
    _common(sb)
    sb.add_argument("--trials", type=int)
    sb.add_argument("--sigma-phase-mm", help="comma list of carrier-phase noise levels (mm)")
    sb.add_argument("--n-mp", help="comma list of contaminated-satellite counts")
    sb.add_argument("--detector", choices=["ransac", "dbscan", "none", "both"])
    sb.add_argument("--canyon", choices=["suburban", "urban", "open", "custom"])
    sb.add_argument("--eps-inlier", type=float)

    ds = sub.add_parser("drive-sim", help="moving-vehicle GNSS/IMU simulation")
    _common(ds)
    ds.add_argument("--trajectory", help="'builtin', a KITTI drive/oxts directory or a CSV file")
    ds.add_argument("--canyon", choices=["suburban", "urban", "open", "custom"])
    ds.add_argument("--detector", choices=["ransac", "dbscan", "none"])
    ds.add_argument("--duration", type=float, help="length of the builtin trajectory (s)")

    ia = sub.add_parser("inspect-almanac", help="print a YUMA almanac as a table")
    ia.add_argument("path", nargs="?", help="almanac file (default: bundled)")
    return parser


_KEYS = ("seed", "out_dir", "almanac", "trials", "sigma_phase_mm", "n_mp", "detector", "canyon",
         "eps_inlier", "trajectory", "duration")


def load_config(args, scenario):
    text = ""
    if getattr(args, "config", None):
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    overrides = {k: getattr(args, k, None) for k in _KEYS}
    overrides["scenario"] = scenario
    return experiments.RunConfig.from_text(text, **overrides)


def _run(args, out):
    if args.command == "inspect-almanac":
        out.write(experiments.inspect_almanac(args.path))
        return EXIT_OK
    cfg = load_config(args, args.command)
    out_dir = Path(cfg.out_dir)
    if args.command == "static-bench":
        text, _ = experiments.run_static_bench(cfg, out_dir / "static_bench.csv")
        out.write(text)
    else:
        _, summary, _ = experiments.run_drive_sim(cfg, out_dir)
        out.write(summary)
    return EXIT_OK


def main(argv=None, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING)
        return _run(args, out)
    except ConfigError as exc:
        err.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except ParseError as exc:
        err.write(f"parse error: {exc}\n")
        return EXIT_DATA
    except (DataError, OSError) as exc:
        err.write(f"data error: {exc}\n")
        return EXIT_DATA
    except (NumericError, ArrayNavError) as exc:
        err.write(f"numeric failure: {exc}\n")
        return EXIT_NUMERIC
    except (FloatingPointError, ArithmeticError, ValueError) as exc:
        err.write(f"numeric failure: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
