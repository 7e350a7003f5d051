"""Reverse-mode gradients of ``||C^K z||^2`` with respect to ``R``, ``P`` and ``omega``.

The cycle is a fixed chain of layers (smoothing sweeps, residual,
restriction, coarse solve, prolongation and update), so the forward pass
records every layer input on a flat tape and ``backward`` walks it in
reverse applying each layer's adjoint. The coarse solve ``u_c = A_c^{-1} r_c``
with ``A_c = R A P`` contributes through both its right-hand side and its
matrix; the matrix adjoint ``-w u_c^T`` (``w = A_c^{-T} u_c_bar``) is never
formed, only its banded projections onto ``R`` and ``P``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

import numpy as np

from .errors import ConfigurationError
from .transfer import band_outer, prolong_band, restrict_band
from .twogrid import TwoGridContext

__all__ = ["ParamGradient", "Tape", "CycleRecord", "forward_with_tape", "backward", "grad_loss"]


@dataclass
class ParamGradient:
    dR: np.ndarray
    dP: np.ndarray
    dOmega: float

    @classmethod
    def zeros(cls, n_c: int) -> "ParamGradient":
        return cls(np.zeros((n_c, 3)), np.zeros((n_c, 3)), 0.0)

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.dR.ravel(), self.dP.ravel(), [self.dOmega]])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.dR)) and np.all(np.isfinite(self.dP)) and np.isfinite(self.dOmega))

    def __add__(self, other: "ParamGradient") -> "ParamGradient":
        return ParamGradient(self.dR + other.dR, self.dP + other.dP, self.dOmega + other.dOmega)

    def __mul__(self, c: float) -> "ParamGradient":
        return ParamGradient(c * self.dR, c * self.dP, c * self.dOmega)

    __rmul__ = __mul__


@dataclass
class CycleRecord:
    pre: List[np.ndarray]    # input of each pre-smoothing sweep
    u_pre: np.ndarray
    r: np.ndarray            # A u_pre
    uc: np.ndarray           # coarse solution
    correction: np.ndarray   # P uc
    post: List[np.ndarray]   # input of each post-smoothing sweep


@dataclass
class Tape:
    ctx: TwoGridContext
    z: np.ndarray
    cycles: List[CycleRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.cycles)

    def replay(self) -> np.ndarray:
        y = self.z
        for _ in self.cycles:
            y, _ = _cycle(self.ctx, y)
        return y


def _sweep(ctx: TwoGridContext, u: np.ndarray) -> np.ndarray:
    dinv = ctx.dinv if u.ndim == 1 else ctx.dinv[:, None]
    return u - ctx.params.omega * dinv * ctx.A.matvec(u)


def _cycle(ctx: TwoGridContext, u: np.ndarray):
    p, cfg = ctx.params, ctx.config
    pre = []
    for _ in range(cfg.s1):
        pre.append(u)
        u = _sweep(ctx, u)
    u_pre = u
    r = ctx.A.matvec(u_pre)
    uc = ctx.coarse_solve(restrict_band(p.R.rows, r))
    correction = prolong_band(p.P.cols, uc)
    u = u_pre - correction
    post = []
    for _ in range(cfg.s2):
        post.append(u)
        u = _sweep(ctx, u)
    return u, CycleRecord(pre, u_pre, r, uc, correction, post)


def forward_with_tape(ctx: TwoGridContext, z, K: int):
    """``C^K z`` and the tape needed to differentiate it."""
    if K < 1:
        raise ConfigurationError(f"K must be >= 1, got {K}")
    z = np.asarray(z, dtype=float)
    if z.shape[0] != ctx.n or z.ndim not in (1, 2):
        raise ValueError(f"z must have leading dimension {ctx.n}, got shape {z.shape}")
    tape = Tape(ctx, z)
    y = z
    for _ in range(K):
        y, rec = _cycle(ctx, y)
        tape.cycles.append(rec)
    return y, tape


def _sweep_adjoint(ctx: TwoGridContext, u: np.ndarray, ybar: np.ndarray):
    """Adjoint of ``y = u - omega D^{-1} A u``: returns (u_bar, omega_bar)."""
    dinv = ctx.dinv if u.ndim == 1 else ctx.dinv[:, None]
    s = dinv * ybar
    dw = -float(np.sum(s * ctx.A.matvec(u)))
    return ybar - ctx.params.omega * ctx.A.rmatvec(s), dw


def backward(tape: Tape, cotangent):
    """Gradient of ``<cotangent, C^K z>``; returns ``(ParamGradient, z_bar)``."""
    ctx = tape.ctx
    ybar = np.asarray(cotangent, dtype=float)
    if ybar.shape != tape.z.shape:
        raise ValueError(f"cotangent shape {ybar.shape} does not match the taped input {tape.z.shape}")
    p, A = ctx.params, ctx.A
    dR = np.zeros_like(p.R.rows)
    dP = np.zeros_like(p.P.cols)
    dw = 0.0
    for rec in reversed(tape.cycles):
        for u in reversed(rec.post):
            ybar, g = _sweep_adjoint(ctx, u, ybar)
            dw += g
        # u_hat = u_pre - P uc
        ucbar = -restrict_band(p.P.cols, ybar)
        dP -= band_outer(rec.uc, ybar)
        # uc = A_c^{-1} R r, A_c = R A P
        w = ctx.coarse_solve(ucbar, trans=1)
        dR -= band_outer(w, A.matvec(rec.correction))
        dP -= band_outer(rec.uc, A.rmatvec(prolong_band(p.R.rows, w)))
        dR += band_outer(w, rec.r)
        # r = A u_pre, and u_pre also feeds the update directly
        ybar = ybar + A.rmatvec(prolong_band(p.R.rows, w))
        for u in reversed(rec.pre):
            ybar, g = _sweep_adjoint(ctx, u, ybar)
            dw += g
    return ParamGradient(dR, dP, dw), ybar


def grad_loss(ctx: TwoGridContext, Z, K: int):
    """``(1/N) sum_i ||C^K z_i||^2`` over the columns of ``Z`` and its exact gradient."""
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    N = Z.shape[1]
    if N < 1:
        raise ConfigurationError("empty batch")
    Y, tape = forward_with_tape(ctx, Z, K)
    loss = float(np.sum(Y * Y)) / N
    g, _ = backward(tape, (2.0 / N) * Y)
    return loss, g
