"""B-spline sieve basis and the null-model design matrix.

The basis is the usual normalized B-spline basis (partition of unity) of
order ``q`` (degree ``q - 1``) on a clamped knot vector over ``[0, 1]``,
so there are ``L = p + q`` functions for ``p`` interior knots.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidArgumentError, RankDeficiencyError

DEFAULT_ORDER = 3


@dataclass(frozen=True)
class SplineSpec:
    order: int
    interior_knots: int
    knots: tuple[float, ...]

    def __post_init__(self):
        if self.order < 1:
            raise InvalidArgumentError(f"spline order must be positive, got {self.order}")
        if self.interior_knots < 0:
            raise InvalidArgumentError("interior knot count must be non-negative")
        k = np.asarray(self.knots, dtype=float)
        if k.size != self.interior_knots + 2:
            raise InvalidArgumentError(
                f"expected {self.interior_knots + 2} knots, got {k.size}"
            )
        if k[0] != 0.0 or k[-1] != 1.0 or np.any(np.diff(k) <= 0):
            raise InvalidArgumentError("knots must increase strictly from 0 to 1")

    @property
    def L(self) -> int:
        return self.interior_knots + self.order

    @property
    def degree(self) -> int:
        return self.order - 1

    @property
    def mesh_ratio(self) -> float:
        """max gap / min gap of the knot sequence (1 for equal spacing)."""
        gaps = np.diff(self.knots)
        return float(gaps.max() / gaps.min())

    def clamped_knots(self) -> np.ndarray:
        """Full knot vector with both endpoints repeated ``order`` times."""
        inner = np.asarray(self.knots[1:-1], dtype=float)
        return np.concatenate([np.zeros(self.order), inner, np.ones(self.order)])


def make_knots(T: int, p: int, order: int = DEFAULT_ORDER) -> SplineSpec:
    """Equally spaced interior knots ``i / (p + 1)``."""
    if p < 1:
        raise InvalidArgumentError(f"need at least one interior knot, got p={p}")
    if T < 2:
        raise InvalidArgumentError(f"need T >= 2, got T={T}")
    knots = tuple(float(i) / (p + 1) for i in range(p + 2))
    # guard against 1.0 being produced as 0.9999...
    knots = knots[:-1] + (1.0,)
    return SplineSpec(order=order, interior_knots=p, knots=knots)


def basis_matrix(spec: SplineSpec, u) -> np.ndarray:
    """Evaluate all ``L`` basis functions at each point of ``u``.

    Returns an array of shape ``(len(u), L)``. Uses the triangular
    Cox-de Boor scheme on the clamped knot vector, so only the ``order``
    functions that are nonzero on the containing knot span get computed.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.ndim != 1:
        raise InvalidArgumentError("evaluation points must be one-dimensional")
    if np.any(~np.isfinite(u)) or np.any(u < 0.0) or np.any(u > 1.0):
        bad = u[~((u >= 0.0) & (u <= 1.0))]
        raise DomainError(f"basis is defined on [0, 1]; got {bad[:3].tolist()}")

    t = spec.clamped_knots()
    k = spec.degree
    L = spec.L
    # span index i with t[i] <= u < t[i+1]; u = 1 belongs to the last span
    span = np.searchsorted(t, u, side="right") - 1
    span = np.clip(span, k, L - 1)

    n = u.size
    vals = np.zeros((n, k + 1))
    vals[:, 0] = 1.0
    left = np.empty((n, k + 1))
    right = np.empty((n, k + 1))
    for j in range(1, k + 1):
        left[:, j] = u - t[span + 1 - j]
        right[:, j] = t[span + j] - u
        saved = np.zeros(n)
        for r in range(j):
            denom = right[:, r + 1] + left[:, j - r]
            temp = vals[:, r] / denom
            vals[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        vals[:, j] = saved

    out = np.zeros((n, L))
    cols = span[:, None] - k + np.arange(k + 1)[None, :]
    np.put_along_axis(out, cols, vals, axis=1)
    return out


def eval_basis(spec: SplineSpec, u: float) -> np.ndarray:
    """Basis values ``B_1(u), ..., B_L(u)`` at a single point."""
    return basis_matrix(spec, [u])[0]


@dataclass(frozen=True)
class DesignMatrix:
    """Regressors of the null model, one row per period.

    Column block 0 holds the time-centered basis, block ``j`` the
    uncentered basis scaled by factor ``j``.
    """

    Z: np.ndarray
    T: int
    d: int
    L: int
    spec: SplineSpec = field(repr=False)

    @property
    def n_params(self) -> int:
        return (1 + self.d) * self.L

    def block(self, j: int) -> np.ndarray:
        return self.Z[:, j * self.L:(j + 1) * self.L]


def time_grid(T: int) -> np.ndarray:
    """Rescaled time points ``t / T`` for ``t = 1..T``."""
    return np.arange(1, T + 1, dtype=float) / T


def build_design(factors, spec: SplineSpec) -> DesignMatrix:
    """Stack the centered basis and factor-scaled basis blocks into ``Z``.

    ``factors`` is a ``T x d`` array (``d`` may be zero) or anything with a
    ``values`` attribute holding one.
    """
    f = np.asarray(getattr(factors, "values", factors), dtype=float)
    if f.ndim == 1:
        f = f[:, None]
    if f.ndim != 2:
        raise InvalidArgumentError("factors must be a T x d matrix")
    T, d = f.shape
    L = spec.L
    # the centered block sums to zero, so rank(Z) = (1+d)L - 1 at most
    if T < (1 + d) * L:
        raise RankDeficiencyError(
            f"T={T} periods cannot support (1+d)L={(1 + d) * L} regressors"
        )
    B = basis_matrix(spec, time_grid(T))
    blocks = [B - B.mean(axis=0)]
    blocks.extend(f[:, [j]] * B for j in range(d))
    return DesignMatrix(Z=np.hstack(blocks), T=T, d=d, L=L, spec=spec)
