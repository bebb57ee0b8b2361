"""Choice of the interior-knot count by a pooled-residual BIC."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .panel import as_factors, as_panel
from .regression import residual_sum_of_squares
from .splines import DEFAULT_ORDER, SplineSpec, build_design, make_knots

log = logging.getLogger(__name__)

TIE_TOL = 1e-12
# keep this many spare observations beyond the regressor count by default
DEFAULT_SLACK = 10


@dataclass(frozen=True)
class BicTrace:
    candidates: tuple[tuple[int, int, float], ...]
    chosen_p: int
    order: int = DEFAULT_ORDER
    T: int = 0

    @property
    def spec(self) -> SplineSpec:
        return make_knots(max(self.T, 2), self.chosen_p, self.order)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["p", "L", "bic"])
        for p, L, bic in self.candidates:
            w.writerow([p, L, repr(bic)])
        return buf.getvalue()


def default_p_range(T: int, d: int, order: int = DEFAULT_ORDER) -> range:
    """``1 .. ceil(T^(1/3))``, trimmed so that ``T > (1+d)L + 10``."""
    upper = math.ceil(round(T ** (1.0 / 3.0), 9))
    while upper >= 1 and not T > (1 + d) * (upper + order) + DEFAULT_SLACK:
        upper -= 1
    return range(1, upper + 1)


def bic_value(rss: float, N: int, T: int, d: int, L: int) -> float:
    return math.log(rss / (N * T)) + (1 + d) * L * math.log(T) / T


def select_knots(panel, factors=None, p_range=None, order: int = DEFAULT_ORDER) -> BicTrace:
    panel = as_panel(panel)
    factors = as_factors(factors, panel.T)
    T, N, d = panel.T, panel.N, factors.d
    candidates = default_p_range(T, d, order) if p_range is None else p_range
    feasible = [int(p) for p in candidates if p >= 1 and T > (1 + d) * (p + order) + 1]
    if not feasible:
        raise InvalidArgumentError(
            f"no feasible knot count in {list(candidates)} for T={T}, d={d}, order={order}"
        )

    rows = []
    for p in feasible:
        spec = make_knots(T, p, order)
        rss = residual_sum_of_squares(panel, build_design(factors, spec))
        rows.append((p, spec.L, bic_value(max(rss, np.finfo(float).tiny), N, T, d, spec.L)))

    best = min(b for _, _, b in rows)
    chosen = min(p for p, _, b in rows if b <= best + TIE_TOL)
    L = chosen + order
    if L ** 3 > T:
        log.warning("chosen L=%d has L^3 > T=%d; asymptotic approximations may be poor", L, T)
    return BicTrace(candidates=tuple(rows), chosen_p=chosen, order=order, T=T)
