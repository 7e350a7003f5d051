"""One two-grid cycle with damped-Jacobi smoothing and an exact Galerkin coarse solve.

With ``S = I - omega D^{-1} A`` the error propagation is

    C = S^{s2} (I - P (RAP)^{-1} R A) S^{s1}

so applying ``C`` to ``y`` is one cycle started from ``y`` with ``f = 0``.
All routines accept a single vector or an ``(n, m)`` block of columns.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.linalg

from .errors import CoarseSingularityError, ConfigurationError, SingularSmootherError
from .problems import TridiagonalMatrix
from .transfer import TransferPair, galerkin_project, prolong_band, restrict_band

__all__ = [
    "TwoGridConfig",
    "TwoGridContext",
    "SolveResult",
    "jacobi_smooth",
    "two_grid_step",
    "apply_iteration_matrix",
    "solve",
]

PIVOT_RTOL = 1e-13


@dataclass(frozen=True)
class TwoGridConfig:
    """Pre- and post-smoothing sweep counts.

    Two sweeps on each side reproduce the linear-interpolation convergence
    factor 5/81 = 0.061728 for the Poisson problem.
    """

    s1: int = 2
    s2: int = 2

    def __post_init__(self):
        for name in ("s1", "s2"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 0:
                raise ConfigurationError(f"{name} must be a nonnegative integer, got {v!r}")


def _inverse_diagonal(A: TridiagonalMatrix) -> np.ndarray:
    zero = np.flatnonzero(A.diag == 0.0)
    if zero.size:
        raise SingularSmootherError(int(zero[0]))
    return 1.0 / A.diag


class TwoGridContext:
    """Fine matrix, transfer parameters and the LU factors of ``R A P``.

    The factorization is computed once at construction; a new parameter set
    needs a new context (see :meth:`with_params`).
    """

    def __init__(self, A: TridiagonalMatrix, params: TransferPair, config: Optional[TwoGridConfig] = None):
        if A.n != params.n:
            raise ConfigurationError(f"matrix size {A.n} does not match operators built for n={params.n}")
        self.A = A
        self.params = params
        self.config = config or TwoGridConfig()
        self.dinv = _inverse_diagonal(A)
        self.A_c = galerkin_project(params.R, A, params.P)
        self.lu = _factor(self.A_c)

    def with_params(self, params: TransferPair) -> "TwoGridContext":
        return TwoGridContext(self.A, params, self.config)

    def with_matrix(self, A: TridiagonalMatrix) -> "TwoGridContext":
        return TwoGridContext(A, self.params, self.config)

    @property
    def n(self) -> int:
        return self.A.n

    def restrict(self, r: np.ndarray) -> np.ndarray:
        return restrict_band(self.params.R.rows, r)

    def prolong(self, uc: np.ndarray) -> np.ndarray:
        return prolong_band(self.params.P.cols, uc)

    def coarse_solve(self, rc: np.ndarray, trans: int = 0) -> np.ndarray:
        return scipy.linalg.lu_solve(self.lu, rc, trans=trans, check_finite=False)


def _factor(A_c: np.ndarray):
    if not np.all(np.isfinite(A_c)):
        raise CoarseSingularityError(float("nan"), 0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A_c, check_finite=False)
    pivots = np.abs(np.diag(lu))
    tol = PIVOT_RTOL * max(pivots.max(), np.abs(A_c).max())
    if pivots.min() <= tol:
        raise CoarseSingularityError(float(pivots.min()), float(tol))
    return lu, piv


def jacobi_smooth(A: TridiagonalMatrix, u, f, omega: float, steps: int, dinv=None) -> np.ndarray:
    """``steps`` sweeps of ``u <- u - omega D^{-1} (A u - f)``; ``f=None`` means zero."""
    if dinv is None:
        dinv = _inverse_diagonal(A)
    u = np.array(u, dtype=float)
    if u.ndim == 2:
        dinv = dinv[:, None]
    for _ in range(steps):
        r = A.matvec(u)
        if f is not None:
            r -= f
        u -= omega * dinv * r
    return u


def _check_vector(ctx: TwoGridContext, u, name: str) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.ndim not in (1, 2) or u.shape[0] != ctx.n:
        raise ValueError(f"{name} must have leading dimension {ctx.n}, got shape {u.shape}")
    return u


def two_grid_step(ctx: TwoGridContext, u, f=None) -> np.ndarray:
    """One cycle: smooth, subtract the prolongated coarse correction, smooth."""
    u = _check_vector(ctx, u, "u")
    if f is not None:
        f = _check_vector(ctx, f, "f")
    A, omega, cfg = ctx.A, ctx.params.omega, ctx.config
    u = jacobi_smooth(A, u, f, omega, cfg.s1, ctx.dinv)
    r = A.matvec(u)
    if f is not None:
        r = r - f
    uc = ctx.coarse_solve(ctx.restrict(r))
    u = u - ctx.prolong(uc)
    return jacobi_smooth(A, u, f, omega, cfg.s2, ctx.dinv)


def apply_iteration_matrix(ctx: TwoGridContext, y) -> np.ndarray:
    """``C @ y``."""
    return two_grid_step(ctx, y, None)


@dataclass
class SolveResult:
    u: np.ndarray
    residuals: List[float] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.residuals) - 1

    def contraction_factors(self) -> np.ndarray:
        r = np.asarray(self.residuals)
        return r[1:] / r[:-1]


def solve(ctx: TwoGridContext, f, u0=None, tol: float = 1e-8, max_iters: int = 100) -> SolveResult:
    """Iterate cycles until ``||A u - f|| <= tol ||f||``.

    ``residuals`` holds the relative residual before the first cycle and after
    each one. Running out of iterations is reported through ``converged``.
    """
    if not tol > 0:
        raise ConfigurationError(f"tolerance must be positive, got {tol}")
    f = _check_vector(ctx, f, "f")
    u = np.zeros_like(f) if u0 is None else np.array(_check_vector(ctx, u0, "u0"), dtype=float)
    fnorm = np.linalg.norm(f)
    scale = fnorm if fnorm > 0 else 1.0

    def rel_res(v):
        return float(np.linalg.norm(ctx.A.matvec(v) - f) / scale)

    history = [rel_res(u)]
    if history[0] <= tol:
        return SolveResult(u, history, True)
    for _ in range(max_iters):
        u = two_grid_step(ctx, u, f)
        history.append(rel_res(u))
        if history[-1] <= tol:
            return SolveResult(u, history, True)
    return SolveResult(u, history, False)
