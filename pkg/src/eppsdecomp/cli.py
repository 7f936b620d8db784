"""Command-line front end.

    eppsdecomp simulate  --lambda 0.0166667 --steps 1000000 --seed 7 --out sim/
    eppsdecomp epps      sim/SIM_A.csv sim/SIM_B.csv --out out/
    eppsdecomp decompose sim/SIM_A.csv sim/SIM_B.csv --dt0 120 --out out/
    eppsdecomp scale     out/epps_SIM_A_SIM_B.csv --out out/

Exit status: 0 on success, 1 for usage errors, 2 for data errors.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from eppsdecomp import correlator, decomposition, simulator, tickstore

logger = logging.getLogger("eppsdecomp")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not (value > 0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _grid(text):
    try:
        return correlator.parse_grid(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _window(args):
    lo, hi = args.asymptotic_window
    if hi < lo:
        raise UsageError("--asymptotic-window: LO must not exceed HI")
    return (lo, hi)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(path):
    if not Path(path).is_file():
        raise FileNotFoundError(f"no such tick file: {path}")
    return tickstore.load_ticks(path)


def _summary(curve, window):
    summary = {}
    try:
        summary["asymptotic"] = correlator.asymptotic_value(curve, window)
        summary["characteristic_time"] = correlator.characteristic_time(curve)
    except correlator.EstimationError as exc:
        logger.warning("%s", exc)
        summary.setdefault("asymptotic", math.nan)
        summary["characteristic_time"] = math.nan
    return summary


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(args):
    cfg = simulator.SimConfig(args.steps, args.lam, args.seed, args.w0, args.day_length)
    if args.response_rate is None:
        a, b = simulator.simulate_pair(cfg)
    else:
        a, b = simulator.simulate_delayed_response_pair(cfg, args.response_rate)
    out = _out_dir(args)
    for series in (a, b):
        path = out / f"{series.symbol}.csv"
        tickstore.write_ticks(series, path)
        print(f"{path}: {series.n_ticks} ticks in {len(series.days)} days")
    return EXIT_OK


def cmd_epps(args):
    a, b = _load(args.file_a), _load(args.file_b)
    window = _window(args)
    curve = correlator.epps_curve(a, b, args.grid, base=args.dt0)
    summary = _summary(curve, window)
    out = _out_dir(args)
    path = out / f"epps_{a.symbol}_{b.symbol}.csv"
    correlator.write_curve_csv(curve, path, summary)
    print(f"{path}: " + ", ".join(f"{k}={v:.6g}" for k, v in summary.items()))
    if args.lagged is not None:
        dt = int(curve.grid[0])
        base = args.dt0 or int(np.gcd.reduce(curve.grid))
        ra = correlator.return_days(tickstore.build_grids(a, base), dt)
        rb = correlator.return_days(tickstore.build_grids(b, base), dt)
        taus = np.arange(-args.lagged, args.lagged + 1, dt)
        values = [correlator.lagged_cross_correlation(ra, rb, int(t)) for t in taus]
        lag_path = out / f"lagged_{a.symbol}_{b.symbol}.csv"
        correlator.write_lagged_csv(taus, values, lag_path)
        peak, value = correlator.pick_peak(taus.tolist(), values)
        print(f"{lag_path}: peak at tau={peak} (value {value:.6g})")
    return EXIT_OK


def cmd_decompose(args):
    a, b = _load(args.file_a), _load(args.file_b)
    dt0 = args.dt0 or decomposition.DEFAULT_DT0
    grid = args.grid if args.grid is not None else np.arange(dt0, 9000 + 1, dt0)
    window = _window(args)
    res = decomposition.decompose_pair(a, b, grid, dt0, args.max_lag)
    out = _out_dir(args)
    sa, sb = a.symbol, b.symbol
    f = res.inputs
    decomposition.write_decay_csv(f.fAA, out / f"decay_{sa}_{sa}.csv")
    decomposition.write_decay_csv(f.fBB, out / f"decay_{sb}_{sb}.csv")
    decomposition.write_decay_csv(f.fAB, out / f"decay_{sa}_{sb}.csv")
    correlator.write_curve_csv(res.measured, out / f"measured_{sa}_{sb}.csv", _summary(res.measured, window))
    correlator.write_curve_csv(res.predicted, out / f"predicted_{sa}_{sb}.csv")
    decomposition.write_goodness_csv(res.stats, out / f"goodness_{sa}_{sb}.csv")
    s = res.stats
    print(
        f"{out}: rho0={f.rho0:.6g} cut AB=({f.fAB.cut_neg},{f.fAB.cut_pos}) "
        f"goodness max={s.max:.4g}% mean={s.mean:.4g}% median={s.median:.4g}%"
    )
    return EXIT_OK


def cmd_scale(args):
    window = _window(args)
    out = _out_dir(args)
    for path in args.curves:
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"no such curve file: {path}")
        curve = correlator.read_curve_csv(path)
        correlator.asymptotic_value(curve, window)
        scaled = correlator.scale_curve(curve)
        target = out / f"{path.stem}_scaled.csv"
        correlator.write_curve_csv(scaled, target, {"asymptotic": curve.asymptotic})
        print(f"{target}: asymptotic={curve.asymptotic:.6g}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eppsdecomp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, dt0_default=None):
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--dt0", type=_positive_int, default=dt0_default)

    def windowed(p):
        p.add_argument(
            "--asymptotic-window", nargs=2, type=float, metavar=("LO", "HI"),
            default=correlator.DEFAULT_WINDOW,
        )

    p = sub.add_parser("simulate", help="write a simulated tick-file pair")
    p.add_argument("--lambda", dest="lam", type=_positive_float, default=1 / 60)
    p.add_argument("--steps", type=_positive_int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--w0", type=_positive_int, default=None)
    p.add_argument("--day-length", type=_positive_int, default=simulator.DAY_LENGTH)
    p.add_argument("--response-rate", type=_positive_float, default=None,
                   help="use the delayed common-shock model with this response rate")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("epps", help="measure the Epps curve of two tick files")
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.add_argument("--grid", type=_grid, default=correlator.parse_grid(correlator.DEFAULT_GRID))
    p.add_argument("--lagged", type=_positive_int, default=None, metavar="TAU_MAX",
                   help="also write the lagged correlation at the smallest scale")
    common(p)
    windowed(p)
    p.set_defaults(func=cmd_epps)

    p = sub.add_parser("decompose", help="predict the Epps curve from base-scale decays")
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.add_argument("--grid", type=_grid, default=None, help="default dt0:9000:dt0")
    p.add_argument("--max-lag", type=_positive_int, default=None,
                   help="lags recorded in the decay functions (default 1000 s / dt0)")
    common(p, decomposition.DEFAULT_DT0)
    windowed(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("scale", help="divide curves by their asymptotic value")
    p.add_argument("curves", nargs="+")
    p.add_argument("--out", default=".")
    windowed(p)
    p.set_defaults(func=cmd_scale)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "grid", None) is not None and getattr(args, "dt0", None):
            if np.any(args.grid % args.dt0):
                raise UsageError(f"--grid values must be multiples of --dt0 {args.dt0}")
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"eppsdecomp: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"eppsdecomp: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
