"""Synthetic conditional factor panels and seeded size/power experiments.

Two data generating processes are provided: a conditional CAPM with one
AR(1)-GARCH(1,1) market factor (``example=1``) and a three-factor version
mimicking a conditional Fama-French model (``example=2``). Loadings move
with a shared AR(1)-ARCH(1) state variable; errors are cross-sectionally
correlated with covariance ``0.5 ** |i - j|``.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .alpha_tests import report_from_fit
from .errors import AlphaTestError, CellFailureError, InvalidArgumentError
from .knots import select_knots
from .regression import fit_null_model
from .splines import build_design, make_knots

log = logging.getLogger(__name__)

TESTS = ("max", "sum", "adp")
ERROR_DISTS = ("normal", "exponential")
TOEPLITZ_RHO = 0.5
MAX_FAILURE_RATE = 0.01


@dataclass(frozen=True)
class ArGarchParams:
    """``f_t = mean + ar (f_{t-1} - mean) + sqrt(h_t) zeta_t`` with
    ``h_t = omega + beta h_{t-1} + alpha h_{t-1} zeta_{t-1}^2``."""

    mean: float
    ar: float
    omega: float
    beta: float
    alpha: float

    def __post_init__(self):
        if self.omega <= 0:
            raise InvalidArgumentError("GARCH constant must be positive")
        if self.beta < 0 or self.alpha < 0:
            raise InvalidArgumentError("GARCH coefficients must be non-negative")


MARKET_EX1 = ArGarchParams(0.34, 0.05, 0.23, 0.67, 0.13)
MARKET_EX2 = ArGarchParams(0.34, 0.05, 0.32, 0.67, 0.13)
SMB_EX2 = ArGarchParams(0.04, 0.07, 0.33, 0.51, 0.03)
HML_EX2 = ArGarchParams(0.06, 0.04, 0.26, 0.72, 0.05)

# loading = a + b * state, one (a, b) pair per factor
LOADINGS = {1: ((1.0, 0.5),), 2: ((1.0, 0.5), (0.1, 0.5), (0.2, 0.4))}


def _simulate_garch(params, vol_source, n_steps, rng) -> np.ndarray:
    """Joint AR(1)-GARCH(1,1) recursion for several factors.

    ``vol_source[j]`` is the factor whose lagged variance enters the
    persistence term of factor ``j``. Starts from ``f = 0``, ``h = 1``,
    ``zeta = 0``.
    """
    d = len(params)
    mean = np.array([p.mean for p in params])
    ar = np.array([p.ar for p in params])
    omega = np.array([p.omega for p in params])
    beta = np.array([p.beta for p in params])
    alpha = np.array([p.alpha for p in params])
    src = np.asarray(vol_source)

    zeta = rng.standard_normal((n_steps, d))
    f_prev = np.zeros(d)
    h_prev = np.ones(d)
    z_prev = np.zeros(d)
    out = np.empty((n_steps, d))
    for s in range(n_steps):
        h = omega + beta * h_prev[src] + alpha * h_prev * z_prev ** 2
        f = mean + ar * (f_prev - mean) + np.sqrt(h) * zeta[s]
        out[s] = f
        f_prev, h_prev, z_prev = f, h, zeta[s]
    return out


def gen_ar_garch(params: ArGarchParams, T: int, burn_in: int, rng) -> np.ndarray:
    """Length-``T`` AR(1)-GARCH(1,1) path after discarding ``burn_in`` steps."""
    if burn_in < 0:
        raise InvalidArgumentError("burn_in must be non-negative")
    return _simulate_garch([params], [0], burn_in + T, rng)[burn_in:, 0]


def gen_factors(example: int, T: int, burn_in: int, rng, own_lag: bool = False) -> np.ndarray:
    """``T x d`` factor matrix for the chosen example.

    Example 2's SMB and HML variance recursions use the market factor's
    lagged variance unless ``own_lag`` is set.
    """
    if example == 1:
        params, src = [MARKET_EX1], [0]
    elif example == 2:
        params = [MARKET_EX2, SMB_EX2, HML_EX2]
        src = [0, 1, 2] if own_lag else [0, 0, 0]
    else:
        raise InvalidArgumentError(f"unknown example {example}")
    return _simulate_garch(params, src, burn_in + T, rng)[burn_in:]


def gen_state(T: int, burn_in: int, rng) -> np.ndarray:
    """AR(1)-ARCH(1) state ``xi_t = 0.8 xi_{t-1} + v_t eps_t``, ``v_t^2 = 0.1 + 0.6 v_{t-1}^2``."""
    n = burn_in + T
    eps = rng.standard_normal(n)
    xi = np.empty(n)
    x, v2 = 0.0, 1.0
    for s in range(n):
        v2 = 0.1 + 0.6 * v2
        x = 0.8 * x + math.sqrt(v2) * eps[s]
        xi[s] = x
    return xi[burn_in:]


def loading_paths(example: int, state: np.ndarray) -> np.ndarray:
    """``d x T`` loadings common to all assets."""
    if example not in LOADINGS:
        raise InvalidArgumentError(f"unknown example {example}")
    state = np.asarray(state, dtype=float)
    return np.array([a + b * state for a, b in LOADINGS[example]])


def gen_loadings(example: int, N: int, T: int, burn_in: int, rng, state=None) -> np.ndarray:
    """``N x d x T`` loadings; every asset gets the same path.

    ``state`` overrides the simulated state variable (for testing).
    """
    if state is None:
        state = gen_state(T, burn_in, rng)
    paths = loading_paths(example, state)
    return np.broadcast_to(paths, (N,) + paths.shape).copy()


@lru_cache(maxsize=8)
def toeplitz_cholesky(N: int, rho: float = TOEPLITZ_RHO) -> np.ndarray:
    """Lower Cholesky factor of ``rho ** |i - j|``."""
    idx = np.arange(N)
    sigma = rho ** np.abs(idx[:, None] - idx[None, :])
    chol = np.linalg.cholesky(sigma)
    chol.setflags(write=False)
    return chol


def gen_error_panel(N: int, T: int, dist: str, rng, rho: float = TOEPLITZ_RHO) -> np.ndarray:
    """``T x N`` errors ``e_t = Sigma^{1/2} z_t`` with standardized ``z``.

    ``rho = 0`` gives uncorrelated errors.
    """
    if N < 1 or T < 1:
        raise InvalidArgumentError("need N, T >= 1")
    if dist == "normal":
        z = rng.standard_normal((T, N))
    elif dist == "exponential":
        z = rng.standard_exponential((T, N)) - 1.0
    else:
        raise InvalidArgumentError(f"unknown error distribution {dist!r}")
    if rho == 0.0:
        return z
    return z @ toeplitz_cholesky(N, rho).T


def alpha_bound(N: int, T: int, s: int, c: float) -> float:
    return c * math.sqrt(math.log(N) / (T * s))


def gen_alphas(N: int, T: int, s: int, c: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """``N x T`` alphas ``alpha_i t / T`` on a random support of size ``s``."""
    if not 0 <= s <= N:
        raise InvalidArgumentError(f"sparsity must lie in [0, N], got s={s}")
    alphas = np.zeros((N, T))
    if s == 0:
        return alphas, np.array([], dtype=int)
    support = np.sort(rng.choice(N, size=s, replace=False))
    amp = rng.uniform(0.0, alpha_bound(N, T, s, c), size=s)
    alphas[support] = amp[:, None] * (np.arange(1, T + 1) / T)[None, :]
    return alphas, support


def simulate_panel(example: int, N: int, T: int, error_dist: str, s: int, c: float,
                   rng, burn_in: int = 25, own_lag: bool = False,
                   rho: float = TOEPLITZ_RHO, with_factors: bool = True):
    """One synthetic panel: returns ``(R, factors, support)`` with ``R`` of shape ``T x N``.

    ``with_factors=False`` drops the factor component entirely and returns
    a ``T x 0`` factor matrix (pure alpha plus noise).
    """
    if with_factors:
        f = gen_factors(example, T, burn_in, rng, own_lag=own_lag)
        beta = loading_paths(example, gen_state(T, burn_in, rng))
        common = np.sum(beta.T * f, axis=1)
    else:
        f = np.empty((T, 0))
        common = None
    alphas, support = gen_alphas(N, T, s, c, rng)
    R = gen_error_panel(N, T, error_dist, rng, rho)
    if common is not None:
        R += common[:, None]
    if support.size:
        R += alphas.T
    return R, f, support


@dataclass(frozen=True)
class SimConfig:
    example: int = 1
    n: int = 200
    t: int = 500
    error_dist: str = "normal"
    s: int = 0
    c: float = 0.0
    replications: int = 1000
    seed: int = 20240601
    burn_in: int = 25
    knots: int | None = None
    level: float = 0.05
    order: int = 3
    own_lag: bool = False
    rho: float = TOEPLITZ_RHO
    with_factors: bool = True

    def __post_init__(self):
        if self.example not in (1, 2):
            raise InvalidArgumentError(f"example must be 1 or 2, got {self.example}")
        if self.error_dist not in ERROR_DISTS:
            raise InvalidArgumentError(f"error_dist must be one of {ERROR_DISTS}")
        if not 0 <= self.s <= self.n:
            raise InvalidArgumentError(f"sparsity must lie in [0, N], got s={self.s}")
        if self.c < 0 or self.burn_in < 0 or self.replications < 1:
            raise InvalidArgumentError("c, burn_in must be >= 0 and replications >= 1")
        if not 0 < self.level < 1:
            raise InvalidArgumentError("level must lie in (0, 1)")


@dataclass(frozen=True)
class ReplicationRecord:
    rep: int
    p_max: float
    p_sum: float
    p_adp: float
    m_centered: float
    z: float
    knots_p: int


@dataclass(frozen=True)
class PowerRow:
    example: int
    error_dist: str
    n: int
    t: int
    s: int
    c: float
    test: str
    rejections: int
    reps: int
    rate: float
    se: float


POWER_COLUMNS = tuple(PowerRow.__dataclass_fields__)
REPLICATION_COLUMNS = ("example", "error_dist", "n", "t", "s", "c", "rep", "test", "p_value", "knots_p")


@dataclass
class PowerTable:
    rows: list[PowerRow] = field(default_factory=list)
    replications: dict[SimConfig, list[ReplicationRecord]] = field(default_factory=dict)
    failures: dict[SimConfig, list[tuple[int, str]]] = field(default_factory=dict)

    def extend(self, other: "PowerTable") -> None:
        self.rows.extend(other.rows)
        self.replications.update(other.replications)
        self.failures.update(other.failures)

    def rate(self, test: str, **match) -> float:
        for row in self.rows:
            if row.test == test and all(getattr(row, k) == v for k, v in match.items()):
                return row.rate
        raise KeyError((test, match))

    def row(self, test: str, **match) -> PowerRow:
        for row in self.rows:
            if row.test == test and all(getattr(row, k) == v for k, v in match.items()):
                return row
        raise KeyError((test, match))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(POWER_COLUMNS)
        for r in self.rows:
            se = "" if math.isnan(r.se) else repr(r.se)
            w.writerow([r.example, r.error_dist, r.n, r.t, r.s, repr(r.c), r.test,
                        r.rejections, r.reps, repr(r.rate), se])
        return buf.getvalue()

    def replications_to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPLICATION_COLUMNS)
        for cfg, records in self.replications.items():
            for rec in records:
                for test in TESTS:
                    w.writerow([cfg.example, cfg.error_dist, cfg.n, cfg.t, cfg.s, repr(cfg.c),
                                rec.rep, test, repr(getattr(rec, f"p_{test}")), rec.knots_p])
        return buf.getvalue()


def replication_rng(seed: int, rep: int) -> np.random.Generator:
    """Independent stream for replication ``rep`` of an experiment seeded with ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(rep,)))


def run_replication(config: SimConfig, rep: int) -> ReplicationRecord:
    rng = replication_rng(config.seed, rep)
    R, f, _ = simulate_panel(config.example, config.n, config.t, config.error_dist,
                             config.s, config.c, rng, config.burn_in, config.own_lag,
                             config.rho, config.with_factors)
    if config.knots is None:
        spec = select_knots(R, f, order=config.order).spec
    else:
        spec = make_knots(config.t, config.knots, config.order)
    fit = fit_null_model(R, build_design(f, spec))
    report = report_from_fit(fit, spec.interior_knots, config.seed)
    return ReplicationRecord(rep, report.p_max, report.p_sum, report.p_adp,
                             report.m_centered, report.z, spec.interior_knots)


def _guarded_replication(args):
    config, rep = args
    try:
        return run_replication(config, rep)
    except AlphaTestError as exc:
        return (rep, f"{type(exc).__name__}: {exc}")


def _standard_error(rate: float, reps: int) -> float:
    if reps < 2:
        return float("nan")
    return math.sqrt(rate * (1.0 - rate) / reps)


def run_experiment(config: SimConfig, jobs: int = 1, progress: bool = False) -> PowerTable:
    """Run every replication of one cell and tabulate rejection rates.

    Results do not depend on ``jobs``: replication ``r`` always draws from
    the stream derived from ``(seed, r)``.
    """
    tasks = [(config, r) for r in range(config.replications)]
    results = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for i, res in enumerate(pool.map(_guarded_replication, tasks, chunksize=8)):
                results.append(res)
                if progress:
                    print(f"\rreplication {i + 1}/{len(tasks)}", end="", file=sys.stderr)
    else:
        for i, task in enumerate(tasks):
            results.append(_guarded_replication(task))
            if progress:
                print(f"\rreplication {i + 1}/{len(tasks)}", end="", file=sys.stderr)
    if progress:
        print(file=sys.stderr)

    records = [r for r in results if isinstance(r, ReplicationRecord)]
    failures = [r for r in results if not isinstance(r, ReplicationRecord)]
    for rep, msg in failures:
        log.warning("replication %d failed: %s", rep, msg)
    if len(failures) > MAX_FAILURE_RATE * config.replications:
        raise CellFailureError(
            f"{len(failures)} of {config.replications} replications failed for {config}",
            failures,
        )

    table = PowerTable(replications={config: records}, failures={config: failures})
    n_ok = len(records)
    for test in TESTS:
        rejections = sum(getattr(r, f"p_{test}") < config.level for r in records)
        rate = rejections / n_ok if n_ok else float("nan")
        table.rows.append(PowerRow(config.example, config.error_dist, config.n, config.t,
                                   config.s, config.c, test, rejections, n_ok, rate,
                                   _standard_error(rate, n_ok)))
    return table


def run_grid(configs, jobs: int = 1, progress: bool = False) -> PowerTable:
    table = PowerTable()
    for cfg in configs:
        table.extend(run_experiment(cfg, jobs=jobs, progress=progress))
    return table


SPARSITY_REGIMES = (((4, 8, 12, 16), 4.0), ((18, 21, 24, 27), 7.0), ((30, 60, 90, 120), 10.0))
SWEEP_SPARSITY = (2, 16, 100)
SWEEP_SIGNALS = tuple(0.5 * k for k in range(21))
PRESETS = ("table1", "figure1", "figure2")


def scaled_reps(replications: int, scale: float) -> int:
    return max(1, int(round(replications * scale)))


def preset_configs(name: str, scale: float = 1.0, seed: int = SimConfig.seed,
                   **overrides) -> list[SimConfig]:
    """Simulation grids behind the size table and the two power figures."""
    reps = scaled_reps(1000, scale)
    base = dict(replications=reps, seed=seed, **overrides)
    if name == "table1":
        return [SimConfig(example=ex, n=n, t=500, error_dist=dist, **base)
                for ex in (1, 2) for dist in ERROR_DISTS for n in (200, 500, 1000)]
    if name == "figure1":
        return [SimConfig(example=1, n=500, t=500, error_dist=dist, s=s, c=c, **base)
                for dist in ERROR_DISTS for group, c in SPARSITY_REGIMES for s in group]
    if name == "figure2":
        return [SimConfig(example=2, n=500, t=500, error_dist=dist, s=s, c=c, **base)
                for dist in ERROR_DISTS for s in SWEEP_SPARSITY for c in SWEEP_SIGNALS]
    raise InvalidArgumentError(f"unknown preset {name!r}; choose from {PRESETS}")
