"""Command-line front end: ``alphatest {test,simulate,rolling,select-knots}``.

Exit codes: 0 success, 2 usage or input errors, 3 numerical failures.
Every flag can also be given in a ``--config`` file of ``key = value``
lines; flags on the command line win.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .alpha_tests import run_all
from .data_io import PanelSource, load_panel, rolling_test
from .errors import INPUT_ERRORS, AlphaTestError, InvalidArgumentError
from .knots import select_knots
from .simulate import PRESETS, SimConfig, preset_configs, run_grid

DEFAULT_SEED = 20240601
SEED_ENV = "ALPHATEST_SEED"

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3

log = logging.getLogger("alphatest")


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise InvalidArgumentError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _level(text: str) -> float:
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError("level must lie in (0, 1)")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="file of key = value lines mirroring the flags")
    p.add_argument("--seed", type=int, default=None,
                   help=f"random seed (default ${SEED_ENV} or {DEFAULT_SEED})")
    p.add_argument("--level", type=_level, default=0.05, help="nominal test level")
    p.add_argument("--order", type=_positive, default=3, help="B-spline order")
    p.add_argument("--knots", type=_positive, default=None,
                   help="fix the number of interior knots instead of BIC selection")
    p.add_argument("--threads", type=_positive, default=None,
                   help="worker processes (default: available cores)")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_data(p: argparse.ArgumentParser) -> None:
    p.add_argument("--returns", type=Path, required=True, help="CSV of asset returns")
    p.add_argument("--factors", type=Path, required=True, help="CSV of factors (mkt, smb, hml)")
    p.add_argument("--rf", default="0",
                   help="constant risk-free rate, or the name of a factor-file column")
    p.add_argument("--percent", action="store_true", help="input returns are in percent")
    p.add_argument("--missing", choices=("columns", "rows"), default="columns",
                   help="drop assets (columns) or dates (rows) with missing returns")
    p.add_argument("--date-column", default=None)
    p.add_argument("--market-is-excess", action="store_true",
                   help="mkt column is already in excess of the risk-free rate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="alphatest", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="max, sum and adaptive alpha tests on one panel")
    _add_common(p)
    _add_data(p)
    p.add_argument("--out", type=Path, required=True,
                   help="output prefix; writes PREFIX.json and PREFIX.csv")
    p.add_argument("--knot-trace", type=Path, default=None, help="write the BIC trace CSV here")
    p.add_argument("--dof-correction", action="store_true", help=argparse.SUPPRESS)

    p = sub.add_parser("simulate", help="Monte Carlo size and power experiments")
    _add_common(p)
    p.add_argument("--preset", choices=PRESETS, default=None)
    p.add_argument("--scale", type=float, default=1.0,
                   help="multiply the preset's 1000 replications by this factor")
    p.add_argument("--example", type=int, choices=(1, 2), default=1)
    p.add_argument("--n", type=_positive, default=200)
    p.add_argument("--t", type=_positive, default=500)
    p.add_argument("--dist", choices=("normal", "exponential"), default="normal")
    p.add_argument("--s", type=int, default=0, help="number of nonzero alphas")
    p.add_argument("--c", type=float, default=0.0, help="signal strength")
    p.add_argument("--reps", type=_positive, default=1000)
    p.add_argument("--burn-in", type=int, default=25)
    p.add_argument("--own-lag", action="store_true",
                   help="Example 2: SMB/HML variance recursions use their own lagged variance")
    p.add_argument("--out", type=Path, required=True, help="power table CSV")
    p.add_argument("--keep-replications", action="store_true",
                   help="also write per-replication p-values to OUT with suffix .replications.csv")

    p = sub.add_parser("rolling", help="rolling-window tests on one panel")
    _add_common(p)
    _add_data(p)
    p.add_argument("--h", type=_positive, default=100, help="window length")
    p.add_argument("--out", type=Path, required=True,
                   help="output prefix; writes PREFIX.csv and PREFIX.json")
    p.add_argument("--knot-trace", type=Path, default=None,
                   help="write per-window BIC traces here")

    p = sub.add_parser("select-knots", help="BIC choice of the interior-knot count")
    _add_common(p)
    _add_data(p)
    p.add_argument("--p-min", type=_positive, default=None)
    p.add_argument("--p-max", type=_positive, default=None)
    p.add_argument("--out", type=Path, default=None, help="trace CSV (p, L, bic)")
    return parser


def read_config(path: Path) -> list[str]:
    """Turn ``key = value`` lines into command-line tokens."""
    tokens = []
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise InvalidArgumentError(f"cannot read config file {path}: {exc}") from exc
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidArgumentError(f"{path}:{n}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        if value.lower() in ("true", "yes", "on"):
            tokens.append(flag)
        elif value.lower() in ("false", "no", "off"):
            continue
        else:
            tokens.extend([flag, value.strip("\"'")])
    return tokens


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path)
    config = pre.parse_known_args(argv[1:])[0].config if argv else None
    if config is not None:
        # config tokens go first so repeated command-line flags override them
        argv = [argv[0], *read_config(config), *argv[1:]]
    args = parser.parse_args(argv)
    if args.seed is None:
        args.seed = default_seed()
    if args.threads is None:
        args.threads = os.cpu_count() or 1
    return args


def _source(args) -> PanelSource:
    try:
        rf = float(args.rf)
    except ValueError:
        rf = args.rf
    return PanelSource(args.returns, args.factors, risk_free=rf, date_column=args.date_column,
                       missing=args.missing, percent=args.percent,
                       market_is_excess=args.market_is_excess)


def _p_range(args):
    if args.knots is not None:
        return None
    if getattr(args, "p_min", None) is None and getattr(args, "p_max", None) is None:
        return None
    lo = args.p_min or 1
    hi = args.p_max or lo
    if hi < lo:
        raise InvalidArgumentError(f"--p-max {hi} is below --p-min {lo}")
    return range(lo, hi + 1)


def _verdict(p: float, level: float) -> str:
    return "reject" if p < level else "accept"


def cmd_test(args) -> int:
    panel, factors = load_panel(_source(args))
    spec = None
    if args.knots is not None:
        from .splines import make_knots
        spec = make_knots(panel.T, args.knots, args.order)
    elif args.knot_trace is not None:
        trace = select_knots(panel, factors, order=args.order)
        args.knot_trace.write_text(trace.to_csv())
        spec = trace.spec
    report = run_all(panel, factors, spec, seed=args.seed, order=args.order,
                     dof_correction=args.dof_correction)
    Path(f"{args.out}.json").write_text(report.to_json())
    Path(f"{args.out}.csv").write_text(report.to_csv())
    for name in ("max", "sum", "adp"):
        p = getattr(report, f"p_{name}")
        print(f"p_{name} = {p:.6g}  ({_verdict(p, args.level)} H0 at level {args.level})")
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.preset is not None:
        if args.scale <= 0:
            raise InvalidArgumentError("--scale must be positive")
        configs = preset_configs(args.preset, args.scale, args.seed, burn_in=args.burn_in,
                                 knots=args.knots, level=args.level, order=args.order,
                                 own_lag=args.own_lag)
    else:
        configs = [SimConfig(example=args.example, n=args.n, t=args.t, error_dist=args.dist,
                             s=args.s, c=args.c, replications=args.reps, seed=args.seed,
                             burn_in=args.burn_in, knots=args.knots, level=args.level,
                             order=args.order, own_lag=args.own_lag)]
    table = run_grid(configs, jobs=args.threads, progress=True)
    args.out.write_text(table.to_csv())
    if args.keep_replications:
        Path(f"{args.out}.replications.csv").write_text(table.replications_to_csv())
    print(f"wrote {len(table.rows)} rows to {args.out}")
    return EXIT_OK


def cmd_rolling(args) -> int:
    panel, factors = load_panel(_source(args))
    if args.h >= panel.T:
        raise InvalidArgumentError(f"--h {args.h} must be smaller than T={panel.T}")
    result = rolling_test(panel, factors, args.h, order=args.order, knots=args.knots,
                          jobs=args.threads)
    Path(f"{args.out}.csv").write_text(result.to_csv())
    Path(f"{args.out}.json").write_text(result.summary_json())
    if args.knot_trace is not None:
        args.knot_trace.write_text(result.knot_trace_csv())
    print(f"{len(result.records)} windows, {len(result.failures)} failures")
    return EXIT_OK


def cmd_select_knots(args) -> int:
    panel, factors = load_panel(_source(args))
    trace = select_knots(panel, factors, _p_range(args), order=args.order)
    if args.out is not None:
        args.out.write_text(trace.to_csv())
    print(f"chosen p = {trace.chosen_p} (L = {trace.chosen_p + args.order})")
    return EXIT_OK


COMMANDS = {
    "test": cmd_test,
    "simulate": cmd_simulate,
    "rolling": cmd_rolling,
    "select-knots": cmd_select_knots,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except AlphaTestError as exc:
        print(f"alphatest: error [{exc.module}]: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except INPUT_ERRORS as exc:
        module = getattr(exc, "module", "data_io")
        print(f"alphatest: error [{module}]: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AlphaTestError as exc:
        print(f"alphatest: numerical failure [{exc.module}]: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
