"""Containers for return panels and factor series."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class ReturnPanel:
    """``T x N`` excess returns, one column per asset."""

    values: np.ndarray
    assets: tuple[str, ...] | None = None
    dates: tuple[str, ...] | None = None
    dropped_rows: int = 0
    dropped_assets: tuple[str, ...] = field(default=())

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise InvalidArgumentError("return panel must be a T x N matrix")
        if v.shape[0] < 2 or v.shape[1] < 1:
            raise InvalidArgumentError(f"need T >= 2 and N >= 1, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidArgumentError("return panel has missing or non-finite entries")
        object.__setattr__(self, "values", v)
        if self.assets is not None and len(self.assets) != v.shape[1]:
            raise InvalidArgumentError("asset labels do not match panel width")
        if self.dates is not None and len(self.dates) != v.shape[0]:
            raise InvalidArgumentError("date labels do not match panel length")

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def N(self) -> int:
        return self.values.shape[1]

    def window(self, start: int, stop: int) -> "ReturnPanel":
        dates = None if self.dates is None else self.dates[start:stop]
        return ReturnPanel(self.values[start:stop], self.assets, dates)


@dataclass(frozen=True)
class FactorSeries:
    """``T x d`` observed factor realizations (``d`` may be zero)."""

    values: np.ndarray
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise InvalidArgumentError("factors must be a T x d matrix")
        if not np.all(np.isfinite(v)):
            raise InvalidArgumentError("factor series has missing or non-finite entries")
        object.__setattr__(self, "values", v)
        if self.names is not None and len(self.names) != v.shape[1]:
            raise InvalidArgumentError("factor names do not match column count")

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def window(self, start: int, stop: int) -> "FactorSeries":
        return FactorSeries(self.values[start:stop], self.names)


def as_panel(panel) -> ReturnPanel:
    return panel if isinstance(panel, ReturnPanel) else ReturnPanel(panel)


def as_factors(factors, T: int | None = None) -> FactorSeries:
    if factors is None:
        if T is None:
            raise InvalidArgumentError("need T to build an empty factor series")
        return FactorSeries(np.empty((T, 0)))
    return factors if isinstance(factors, FactorSeries) else FactorSeries(factors)
