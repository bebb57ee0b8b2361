"""Max-type, sum-type and adaptive tests for alphas in conditional factor models."""

__version__ = "0.1.0"

from .alpha_tests import (
    TestReport,
    gumbel_type_cdf,
    max_statistic,
    p_adaptive,
    p_max,
    p_sum,
    run_all,
    sum_statistic,
)
from .data_io import PanelSource, load_panel, rolling_test
from .knots import BicTrace, select_knots
from .panel import FactorSeries, ReturnPanel
from .regression import NullFit, compute_trace_estimator, fit_null_model
from .simulate import SimConfig, run_experiment
from .splines import SplineSpec, build_design, eval_basis, make_knots

__all__ = [
    "BicTrace", "FactorSeries", "NullFit", "PanelSource", "ReturnPanel", "SimConfig",
    "SplineSpec", "TestReport", "build_design", "compute_trace_estimator", "eval_basis",
    "fit_null_model", "gumbel_type_cdf", "load_panel", "make_knots", "max_statistic",
    "p_adaptive", "p_max", "p_sum", "rolling_test", "run_all", "run_experiment",
    "select_knots", "sum_statistic",
]
