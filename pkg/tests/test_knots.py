import math

import numpy as np
import pytest

import alphatest.knots as knots
from alphatest.errors import InvalidArgumentError
from alphatest.knots import bic_value, default_p_range, select_knots
from alphatest.simulate import replication_rng, simulate_panel


def test_linear_trend_picks_smallest(rng):
    T, N = 300, 20
    t = np.arange(1, T + 1) / T
    R = 0.3 + 2.0 * t[:, None] * rng.uniform(0.5, 1.5, N) + 0.1 * rng.standard_normal((T, N))
    trace = select_knots(R, None, range(2, 7))
    assert trace.chosen_p == 2
    assert [p for p, _, _ in trace.candidates] == [2, 3, 4, 5, 6]


def test_ties_go_to_smaller_p(rng, monkeypatch):
    monkeypatch.setattr(knots, "bic_value", lambda *a: 1.0)
    assert select_knots(rng.standard_normal((100, 5)), None, [3, 1, 2]).chosen_p == 1


def test_bic_penalty_monotone():
    vals = [bic_value(10.0, 5, 200, 1, p + 3) for p in range(1, 8)]
    assert np.all(np.diff(vals) > 0)


def test_empty_range_rejected(rng):
    with pytest.raises(InvalidArgumentError):
        select_knots(rng.standard_normal((30, 4)), rng.standard_normal((30, 3)), range(5, 9))


def test_default_range():
    r = default_p_range(500, 1)
    assert r.start == 1 and r.stop - 1 == math.ceil(500 ** (1 / 3))
    r = default_p_range(100, 3)
    assert all(100 > 4 * (p + 3) + 10 for p in r)


def test_bic_is_stable_on_example_one():
    chosen = []
    for rep in range(100):
        R, f, _ = simulate_panel(1, 50, 500, "normal", 0, 0.0, replication_rng(77, rep))
        trace = select_knots(R, f)
        assert all(np.isfinite(b) for _, _, b in trace.candidates)
        chosen.append(trace.chosen_p)
    values, counts = np.unique(chosen, return_counts=True)
    assert counts.max() >= 90


def test_trace_csv(rng):
    trace = select_knots(rng.standard_normal((120, 6)), None, range(1, 4))
    lines = trace.to_csv().splitlines()
    assert lines[0] == "p,L,bic" and len(lines) == 4
    assert lines[1].startswith("1,4,")


@pytest.mark.slow
def test_size_sensitivity_to_knot_count(capsys):
    from alphatest.simulate import SimConfig, run_experiment

    lines = []
    for p in (1, 2, 3, 4):
        table = run_experiment(SimConfig(n=200, t=500, replications=200, knots=p))
        sizes = {t: table.rate(t) for t in ("max", "sum", "adp")}
        lines.append(f"p={p}: " + " ".join(f"{t} {v:.3f}" for t, v in sizes.items()))
        assert all(0 <= v <= 0.25 for v in sizes.values())
    with capsys.disabled():
        print("\nsize by fixed knot count (Example 1, N=200, T=500, 200 reps)")
        print("\n".join(lines))
