"""Least-squares fit of the null model and the residual-based moments.

All assets share one design ``Z``, so the fit is a single orthogonal
decomposition of ``Z`` followed by one matrix product for the whole panel.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DegreesOfFreedomError, InvalidArgumentError, SingularDesignError
from .panel import as_panel
from .splines import DesignMatrix

log = logging.getLogger(__name__)

# singular values below this fraction of the largest are treated as zero
RANK_TOL = 1e-10
DEGENERATE_TOL = 1e-12
EXACT_FIT_TOL = 1e-20


def column_space_basis(Z: np.ndarray) -> np.ndarray:
    """Orthonormal basis ``Q`` of the column space of ``Z`` (via SVD).

    The centered spline block always sums to the zero vector, so ``Z``
    has exactly one structural null direction. Any further loss of rank
    means the factors themselves are collinear with the basis.
    """
    U, s, _ = np.linalg.svd(Z, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        raise SingularDesignError("design matrix is identically zero")
    rank = int(np.sum(s > RANK_TOL * s[0]))
    expected = Z.shape[1] - 1
    if rank < expected:
        cond = float(s[0] / s[expected - 1]) if s[expected - 1] > 0 else float("inf")
        raise SingularDesignError(
            f"design has rank {rank} < {expected}; condition number {cond:.3g}",
            condition_number=cond,
        )
    return U[:, :rank]


@dataclass(frozen=True)
class NullFit:
    residuals: np.ndarray
    h: np.ndarray
    sigma_diag: np.ndarray
    trace_sigma_sq_hat: float
    d: int
    L: int
    degenerate: np.ndarray
    basis: np.ndarray = field(repr=False)

    @property
    def T(self) -> int:
        return self.residuals.shape[0]

    @property
    def N(self) -> int:
        return self.residuals.shape[1]

    @property
    def n_params(self) -> int:
        return (1 + self.d) * self.L

    @property
    def rss(self) -> float:
        return float(np.sum(self.residuals ** 2))

    def annihilate(self, x: np.ndarray) -> np.ndarray:
        """Apply ``M_Z = I - Z (Z'Z)^- Z'`` to a vector or the columns of a matrix."""
        Q = self.basis
        return x - Q @ (Q.T @ x)


def compute_trace_estimator(residuals: np.ndarray, d: int, L: int) -> float:
    """Bias-corrected estimate of ``Tr(Sigma^2)`` from a ``T x N`` residual matrix.

    ``Tr(S)`` and ``Tr(S^2)`` of the sample covariance ``S`` are taken from
    the ``T x T`` Gram matrix of the time-demeaned residuals, so nothing of
    size ``N x N`` is ever formed.
    """
    E = np.asarray(residuals, dtype=float)
    if E.ndim != 2:
        raise InvalidArgumentError("residuals must be a T x N matrix")
    T = E.shape[0]
    k = (1 + d) * L
    if T <= k:
        raise DegreesOfFreedomError(f"need T > (1+d)L, got T={T}, (1+d)L={k}")
    C = E - E.mean(axis=0)
    G = (C @ C.T) / T
    tr1 = float(np.trace(G))
    tr2 = float(np.sum(G * G))
    return T ** 2 / ((T + k - 1) * (T - k)) * (tr2 - tr1 ** 2 / (T - k))


def fit_null_model(panel, design: DesignMatrix, *, dof_correction: bool = False) -> NullFit:
    """Regress every asset on ``Z`` and collect the residual statistics.

    ``sigma_diag`` divides the residual sum of squares by ``T - d - 1``;
    ``dof_correction=True`` switches to ``T - (1+d)L``.
    """
    R = as_panel(panel).values
    T = design.T
    if R.shape[0] != T:
        raise InvalidArgumentError(f"panel has {R.shape[0]} periods, design has {T}")
    Q = column_space_basis(design.Z)

    E = R - Q @ (Q.T @ R)
    h = 1.0 - Q @ Q.sum(axis=0)

    divisor = T - design.n_params if dof_correction else T - design.d - 1
    if divisor <= 0:
        raise DegreesOfFreedomError(f"non-positive variance divisor {divisor}")
    rss = np.einsum("ti,ti->i", E, E)
    sigma = rss / divisor
    # degenerate: tiny next to the panel average, or fitted exactly up to rounding
    degenerate = (sigma <= DEGENERATE_TOL * sigma.mean()) | (
        rss <= EXACT_FIT_TOL * np.einsum("ti,ti->i", R, R)
    )
    if degenerate.any():
        log.warning(
            "%d of %d assets have (near) zero residual variance: %s",
            degenerate.sum(), sigma.size, np.flatnonzero(degenerate)[:10].tolist(),
        )

    trace = compute_trace_estimator(E, design.d, design.L)
    return NullFit(
        residuals=E,
        h=h,
        sigma_diag=sigma,
        trace_sigma_sq_hat=trace,
        d=design.d,
        L=design.L,
        degenerate=degenerate,
        basis=Q,
    )


def residual_sum_of_squares(panel, design: DesignMatrix) -> float:
    """Pooled RSS of the null fit, without forming the residual matrix."""
    R = as_panel(panel).values
    Q = column_space_basis(design.Z)
    proj = Q.T @ R
    return float(max(np.sum(R * R) - np.sum(proj * proj), 0.0))
