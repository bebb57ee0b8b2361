"""Loading real return panels and the rolling-window analysis."""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .alpha_tests import report_from_fit
from .errors import AlphaTestError, DataLoadError, InvalidArgumentError
from .knots import default_p_range, select_knots
from .panel import FactorSeries, ReturnPanel, as_factors, as_panel
from .regression import fit_null_model
from .splines import DEFAULT_ORDER, build_design, make_knots

log = logging.getLogger(__name__)

FACTOR_COLUMNS = ("mkt", "smb", "hml")
CHINA_RISK_FREE = 0.000041
ROLLING_COLUMNS = ("tau", "start_date", "end_date", "p_max", "p_sum", "p_adp", "knots_p")


@dataclass(frozen=True)
class PanelSource:
    """Where a panel comes from and how to turn it into excess returns.

    ``risk_free`` is either a constant per-period rate or the name of a
    column in the factor file. ``missing`` is ``"columns"`` (drop assets
    with any gap) or ``"rows"`` (drop dates with any gap).
    """

    returns_path: str | Path
    factors_path: str | Path
    risk_free: float | str = 0.0
    date_column: str | None = None
    missing: str = "columns"
    percent: bool = False
    market_is_excess: bool = False


def _read_table(path, date_column, what):
    path = Path(path)
    if not path.exists():
        raise DataLoadError(f"{what} file not found: {path}")
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DataLoadError(f"cannot parse {what} file {path}: {exc}") from exc
    if df.shape[1] < 2:
        raise DataLoadError(f"{what} file {path} needs a date column and at least one data column")
    col = date_column or df.columns[0]
    if col not in df.columns:
        raise DataLoadError(f"{what} file {path} has no date column {col!r}")
    dates = df.pop(col)
    if dates.duplicated().any():
        raise DataLoadError(f"{what} file {path} has duplicate dates")
    # opaque ordered index, but it must at least look like ISO dates
    parsed = pd.to_datetime(dates, format="ISO8601", errors="coerce")
    if parsed.isna().any():
        bad = dates[parsed.isna()].iloc[0]
        raise DataLoadError(f"{what} file {path}: {bad!r} is not an ISO-8601 date")

    values = {}
    for name in df.columns:
        raw = df[name].str.strip()
        missing = raw.isin(["", "NA", "NaN", "nan", "null"])
        col_values = np.full(len(raw), np.nan)
        for row, (cell, gap) in enumerate(zip(raw, missing)):
            if gap:
                continue
            try:
                col_values[row] = float(cell)
            except ValueError:
                raise DataLoadError(
                    f"{what} file {path}: non-numeric value {cell!r} in column {name!r}"
                ) from None
        values[name] = col_values
    out = pd.DataFrame(values, index=pd.Index(dates.to_numpy(), name="date"))
    return out


def load_panel(source: PanelSource) -> tuple[ReturnPanel, FactorSeries]:
    """Read, align and convert a return panel and its factors to excess returns."""
    if source.missing not in ("columns", "rows"):
        raise InvalidArgumentError(f"missing-data policy must be 'columns' or 'rows', got {source.missing!r}")
    returns = _read_table(source.returns_path, source.date_column, "returns")
    factors = _read_table(source.factors_path, source.date_column, "factor")

    rf_column = source.risk_free if isinstance(source.risk_free, str) else None
    if rf_column is not None and rf_column not in factors.columns:
        raise DataLoadError(f"risk-free column {rf_column!r} not in factor file {source.factors_path}")
    names = [c for c in factors.columns if c != rf_column]
    unknown = [c for c in names if c.lower() not in FACTOR_COLUMNS]
    if unknown:
        raise DataLoadError(
            f"factor file {source.factors_path}: unexpected columns {unknown}; "
            f"expected a subset of {FACTOR_COLUMNS}"
        )

    common = returns.index.intersection(factors.index, sort=False)
    if common.empty:
        raise DataLoadError("returns and factor files share no dates")
    returns = returns.loc[common]
    factors = factors.loc[common]
    if source.percent:
        returns = returns / 100.0
        factors = factors / 100.0

    if factors.isna().any(axis=None):
        keep = ~factors.isna().any(axis=1)
        log.warning("dropping %d dates with missing factor values", int((~keep).sum()))
        returns, factors = returns[keep], factors[keep]

    dropped_rows, dropped_assets = 0, ()
    gaps = returns.isna()
    if gaps.any(axis=None):
        if source.missing == "rows":
            keep = ~gaps.any(axis=1)
            dropped_rows = int((~keep).sum())
            returns, factors = returns[keep], factors[keep]
            log.warning("dropped %d dates with missing returns", dropped_rows)
        else:
            bad = gaps.any(axis=0)
            dropped_assets = tuple(returns.columns[bad])
            returns = returns.loc[:, ~bad]
            log.warning("dropped %d assets with missing returns", len(dropped_assets))
    if returns.shape[1] == 0 or returns.shape[0] < 2:
        raise DataLoadError("no complete data left after removing missing values")

    if rf_column is not None:
        rf = factors[rf_column].to_numpy()
    else:
        # a constant rate is always a decimal, even with percent files
        rf = np.full(len(factors), float(source.risk_free))
    excess = returns.to_numpy() - rf[:, None]
    fvals = factors[names].to_numpy().copy()
    for j, name in enumerate(names):
        if name.lower() == "mkt" and not source.market_is_excess:
            fvals[:, j] -= rf

    dates = tuple(str(d) for d in returns.index)
    panel = ReturnPanel(excess, tuple(str(c) for c in returns.columns), dates,
                        dropped_rows=dropped_rows, dropped_assets=dropped_assets)
    return panel, FactorSeries(fvals, tuple(names))


def write_panel(panel: ReturnPanel, path, factors: FactorSeries | None = None, factors_path=None) -> None:
    """Write a panel (and optionally its factors) in the format ``load_panel`` reads."""
    panel = as_panel(panel)
    dates = panel.dates or default_dates(panel.T)
    assets = panel.assets or tuple(f"asset{i}" for i in range(panel.N))
    _write_matrix(path, dates, assets, panel.values)
    if factors is not None and factors_path is not None:
        names = factors.names or FACTOR_COLUMNS[:factors.d]
        _write_matrix(factors_path, dates, names, factors.values)


def default_dates(T: int) -> tuple[str, ...]:
    """Consecutive ISO dates used when a panel carries no date labels."""
    return tuple(str(d.date()) for d in pd.date_range("2000-01-01", periods=T, freq="D"))


def _write_matrix(path, dates, columns, values):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *columns])
        for d, row in zip(dates, values):
            w.writerow([d, *(repr(float(v)) for v in row)])


@dataclass(frozen=True)
class WindowRecord:
    tau: int
    start: int
    end: int
    start_date: str
    end_date: str
    p_max: float
    p_sum: float
    p_adp: float
    knots_p: int


@dataclass
class RollingResult:
    h: int
    records: list[WindowRecord] = field(default_factory=list)
    failures: list[tuple[int, str]] = field(default_factory=list)
    knot_traces: dict[int, tuple] = field(default_factory=dict)

    def series(self, test: str) -> np.ndarray:
        return np.array([getattr(r, f"p_{test}") for r in self.records])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(ROLLING_COLUMNS)
        for r in self.records:
            w.writerow([r.tau, r.start_date, r.end_date, repr(r.p_max), repr(r.p_sum),
                        repr(r.p_adp), r.knots_p])
        return buf.getvalue()

    def knot_trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau", "p", "L", "bic"])
        for tau, rows in sorted(self.knot_traces.items()):
            for p, L, bic in rows:
                w.writerow([tau, p, L, repr(bic)])
        return buf.getvalue()

    def summary(self) -> dict:
        out = {"h": self.h, "windows": len(self.records), "failures": len(self.failures)}
        for test in ("max", "sum", "adp"):
            s = self.series(test)
            out[f"p_{test}"] = {
                "min": float(s.min()) if s.size else None,
                "median": float(np.median(s)) if s.size else None,
            }
        return out

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2) + "\n"


def _window_task(args):
    tau, R, f, p_range, order, knots = args
    try:
        if knots is None:
            trace = select_knots(R, f, p_range, order=order)
            spec, rows = trace.spec, trace.candidates
        else:
            spec, rows = make_knots(R.shape[0], knots, order), ()
        report = report_from_fit(fit_null_model(R, build_design(f, spec)), spec.interior_knots)
    except AlphaTestError as exc:
        return tau, f"{type(exc).__name__}: {exc}", ()
    return tau, report, rows


def rolling_test(panel, factors=None, h: int = 100, *, p_range=None, order: int = DEFAULT_ORDER,
                 knots: int | None = None, jobs: int = 1) -> RollingResult:
    """Test every window ``tau .. tau + h - 1`` for ``tau = 1 .. T - h``.

    Knots are re-selected by BIC in each window unless ``knots`` fixes them.
    Output is ordered by ``tau`` whatever the scheduling.
    """
    panel = as_panel(panel)
    factors = as_factors(factors, panel.T)
    T, d = panel.T, factors.d
    if factors.T != T:
        raise InvalidArgumentError(f"panel has {T} periods but factors have {factors.T}")
    if not 0 < h < T:
        raise InvalidArgumentError(f"window length must satisfy 0 < h < T={T}, got h={h}")
    if knots is None:
        candidates = list(default_p_range(h, d, order) if p_range is None else p_range)
        l_max = max(candidates, default=0) + order
    else:
        candidates, l_max = None, knots + order
    if not h > (1 + d) * l_max + 1:
        raise InvalidArgumentError(f"window length h={h} too short for (1+d)L={(1 + d) * l_max}")

    dates = panel.dates or default_dates(T)
    tasks = [
        (tau, panel.values[tau - 1:tau - 1 + h], factors.values[tau - 1:tau - 1 + h],
         candidates, order, knots)
        for tau in range(1, T - h + 1)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_window_task, tasks, chunksize=4))
    else:
        outcomes = [_window_task(t) for t in tasks]

    result = RollingResult(h=h)
    for tau, outcome, rows in outcomes:
        if isinstance(outcome, str):
            log.warning("window tau=%d failed: %s", tau, outcome)
            result.failures.append((tau, outcome))
            continue
        start, end = tau - 1, tau + h - 2
        result.records.append(WindowRecord(
            tau, start, end, dates[start], dates[end],
            outcome.p_max, outcome.p_sum, outcome.p_adp, outcome.knots_p,
        ))
        if rows:
            result.knot_traces[tau] = rows
    return result
