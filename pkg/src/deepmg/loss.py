"""Stochastic Frobenius-norm surrogate for the spectral radius of ``C``.

For Rademacher probes ``z``, ``E ||C^K z||^2 = ||C^K||_F^2`` and
``||C^K||_F^(1/K) >= rho(C)``, so the batch mean

    F_K = (1/N) sum_i ||C^K z_i||^2

is an unbiased estimate of an upper bound on ``rho(C)^(2K)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import ConfigurationError
from .twogrid import TwoGridContext, apply_iteration_matrix

__all__ = [
    "LossConfig",
    "RademacherSampler",
    "sample_rademacher",
    "estimate_loss",
    "surrogate_radius",
    "exact_frobenius_power",
    "estimator_variance",
]


OBJECTIVES = ("log", "raw")


@dataclass(frozen=True)
class LossConfig:
    """Power ``K``, batch size ``N`` and probe seed.

    ``objective`` selects what the optimizer descends: ``"raw"`` is ``F_K``
    itself, ``"log"`` is ``log F_K``. Both have the same minimizers, but
    ``F_K`` is of order ``rho^(2K)`` (about 1e-24 for a good two-grid method
    at ``K = 10``), far below Adam's ``eps``, which freezes raw training.
    """

    K: int = 10
    N: int = 10
    seed: int = 0
    objective: str = "log"

    def __post_init__(self):
        if self.K < 1 or self.N < 1:
            raise ConfigurationError(f"K and N must be >= 1, got K={self.K}, N={self.N}")
        if self.objective not in OBJECTIVES:
            raise ConfigurationError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}")
        if self.seed < 0:
            raise ConfigurationError(f"seed must be nonnegative, got {self.seed}")


class RademacherSampler:
    """Seeded source of +-1 probe vectors.

    Probe ``i`` of the batch labelled ``key`` comes from its own substream
    ``(seed, *key, i)``, so a batch does not depend on what was drawn before it.
    """

    def __init__(self, seed: int = 0):
        self.seed = int(seed)

    def _rng(self, key: Tuple[int, ...]) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=key)))

    def vector(self, n: int, key: Tuple[int, ...] = (0,)) -> np.ndarray:
        if n < 1:
            raise ConfigurationError(f"probe length must be >= 1, got {n}")
        bits = self._rng(tuple(key)).integers(0, 2, size=n)
        return 2.0 * bits - 1.0

    def batch(self, n: int, N: int, key: Tuple[int, ...] = (0,)) -> np.ndarray:
        """``(n, N)`` array whose columns are independent probes."""
        key = tuple(key)
        return np.column_stack([self.vector(n, key + (i,)) for i in range(N)])


def sample_rademacher(sampler: RademacherSampler, n: int, key: Tuple[int, ...] = (0,)) -> np.ndarray:
    return sampler.vector(n, key)


def _power_apply(apply, Z, K):
    Y = Z
    for _ in range(K):
        Y = apply(Y)
    return Y


def estimate_loss(ctx: Optional[TwoGridContext], cfg: LossConfig, key: Tuple[int, ...] = (0,),
                  apply=None, n: Optional[int] = None) -> float:
    """``F_K`` for the batch ``key``.

    ``apply`` and ``n`` replace ``y -> C y`` and the vector length when ``ctx`` is None.
    """
    if ctx is not None:
        n = ctx.n
        if apply is None:
            def apply(y):
                return apply_iteration_matrix(ctx, y)
    elif apply is None or n is None:
        raise ConfigurationError("without a context both apply and n are required")
    Z = RademacherSampler(cfg.seed).batch(n, cfg.N, key)
    Y = _power_apply(apply, Z, cfg.K)
    return float(np.sum(Y * Y)) / cfg.N


def surrogate_radius(ctx: Optional[TwoGridContext], cfg: LossConfig, key: Tuple[int, ...] = (0,),
                     apply=None, n: Optional[int] = None) -> float:
    """``F_K ** (1 / (2K))``, the stochastic stand-in for ``||C^K||_F^(1/K)``."""
    return estimate_loss(ctx, cfg, key, apply, n) ** (1.0 / (2 * cfg.K))


def exact_frobenius_power(C: np.ndarray, K: int) -> float:
    """``||C^K||_F^2`` by repeated dense multiplication."""
    C = np.asarray(C, dtype=float)
    M = C
    for _ in range(K - 1):
        M = M @ C
    return float(np.sum(M * M))


def estimator_variance(C: np.ndarray, K: int, N: int = 1) -> float:
    """Variance of ``F_K`` for batch size ``N``: ``(2/N)(||B||_F^2 - sum_i B_ii^2)``, ``B = (C^K)^T C^K``."""
    M = np.linalg.matrix_power(np.asarray(C, dtype=float), K)
    B = M.T @ M
    return 2.0 / N * (float(np.sum(B * B)) - float(np.sum(np.diag(B) ** 2)))
