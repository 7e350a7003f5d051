"""Adam minimization of the stochastic surrogate over ``(R, P, omega)``, plain or by homotopy."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .errors import CoarseSingularityError, ConfigurationError, NonFiniteGradientError
from .grad import ParamGradient, grad_loss
from .loss import LossConfig, RademacherSampler, surrogate_radius
from .problems import TridiagonalMatrix, blend
from .spectral import DENSE_CAP, spectral_radius
from .transfer import TransferPair
from .twogrid import TwoGridConfig, TwoGridContext

__all__ = [
    "AdamConfig",
    "AdamState",
    "HomotopyConfig",
    "StageRecord",
    "TrainReport",
    "TrainingFailure",
    "adam_step",
    "train",
    "homotopy_train",
]

logger = logging.getLogger(__name__)

MAX_CONSECUTIVE_FAILURES = 5


class TrainingFailure(CoarseSingularityError):
    """Training could not find a nonsingular step after repeated retries."""

    def __init__(self, iteration, last_error):
        self.iteration = iteration
        self.last_error = last_error
        Exception.__init__(
            self, f"iteration {iteration}: {MAX_CONSECUTIVE_FAILURES} consecutive singular coarse matrices ({last_error})"
        )


@dataclass(frozen=True)
class AdamConfig:
    step: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    T: int = 1000

    def __post_init__(self):
        if not self.step > 0:
            raise ConfigurationError(f"step size must be positive, got {self.step}")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ConfigurationError("beta1 and beta2 must lie in (0, 1)")
        if self.T < 0:
            raise ConfigurationError(f"T must be nonnegative, got {self.T}")


@dataclass
class AdamState:
    theta: np.ndarray
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def start(cls, params: TransferPair) -> "AdamState":
        theta = params.flatten()
        return cls(theta, np.zeros_like(theta), np.zeros_like(theta), 0)

    def params(self, n: int) -> TransferPair:
        return TransferPair.unflatten(self.theta, n)


def adam_step(state: AdamState, gradient: ParamGradient, cfg: AdamConfig, step: Optional[float] = None) -> AdamState:
    """Bias-corrected Adam update; returns a new state and leaves ``state`` untouched."""
    g = gradient.flatten()
    if g.shape != state.theta.shape:
        raise ValueError(f"gradient has {g.size} entries, parameters have {state.theta.size}")
    if not np.all(np.isfinite(g)):
        bad = np.flatnonzero(~np.isfinite(g))
        raise NonFiniteGradientError(f"non-finite gradient at parameter indices {bad[:10].tolist()}")
    s = cfg.step if step is None else step
    t = state.t + 1
    m = cfg.beta1 * state.m + (1 - cfg.beta1) * g
    v = cfg.beta2 * state.v + (1 - cfg.beta2) * g * g
    m_hat = m / (1 - cfg.beta1 ** t)
    v_hat = v / (1 - cfg.beta2 ** t)
    theta = state.theta - s * m_hat / (np.sqrt(v_hat) + cfg.eps)
    return AdamState(theta, m, v, t)


@dataclass
class StageRecord:
    alpha: float
    surrogate: float
    accepted: bool
    halvings: int
    rho: Optional[float] = None


@dataclass
class TrainReport:
    params: TransferPair
    losses: List[float]
    rho: Optional[float]
    rho_init: Optional[float]
    seed: int
    wall_time: float = 0.0
    retries: int = 0
    stages: List[StageRecord] = field(default_factory=list)
    converged: bool = True

    @property
    def alphas(self) -> List[float]:
        """The accepted homotopy parameters in order."""
        return [s.alpha for s in self.stages if s.accepted]


def _verified_rho(A, params, config, cap):
    if A.n > cap:
        return None
    try:
        return spectral_radius(TwoGridContext(A, params, config), cap)
    except CoarseSingularityError:
        return float("inf")


def _optimize(A, params, config, adam, loss_cfg, stream, losses, callback=None):
    """Run ``adam.T`` iterations from ``params``; batches use keys ``stream + (t, attempt)``."""
    sampler = RademacherSampler(loss_cfg.seed)
    state = AdamState.start(params)
    ctx = TwoGridContext(A, params, config)
    retries = 0
    for t in range(adam.T):
        attempt = 0
        step = adam.step
        while True:
            Z = sampler.batch(A.n, loss_cfg.N, tuple(stream) + (t, attempt))
            loss, g = grad_loss(ctx, Z, loss_cfg.K)
            if loss == 0.0:
                # C^K annihilates the batch; there is nothing to descend
                new_state, new_ctx = state, ctx
                break
            if loss_cfg.objective == "log":
                g = g * (1.0 / loss)
            new_state = adam_step(state, g, adam, step)
            try:
                new_ctx = TwoGridContext(A, new_state.params(A.n), config)
                break
            except CoarseSingularityError as err:
                attempt += 1
                retries += 1
                step *= 0.5
                logger.debug("iteration %d: singular coarse matrix, retrying with step %g", t, step)
                if attempt >= MAX_CONSECUTIVE_FAILURES:
                    raise TrainingFailure(t, err) from err
        losses.append(loss)
        if callback is not None:
            callback(t, loss)
        state, ctx = new_state, new_ctx
    return ctx.params, retries


def train(
    A: TridiagonalMatrix,
    init: TransferPair,
    adam: AdamConfig = AdamConfig(),
    loss_cfg: LossConfig = LossConfig(),
    config: TwoGridConfig = TwoGridConfig(),
    dense_cap: int = DENSE_CAP,
    callback: Optional[Callable[[int, float], None]] = None,
) -> TrainReport:
    """``adam.T`` Adam iterations on ``F_K``, each with a fresh probe batch.

    ``losses[t]`` is the batch loss evaluated at the parameters before step ``t``.
    """
    start = time.perf_counter()
    rho_init = _verified_rho(A, init, config, dense_cap)
    losses: List[float] = []
    params, retries = _optimize(A, init, config, adam, loss_cfg, (0,), losses, callback)
    rho = _verified_rho(A, params, config, dense_cap)
    return TrainReport(params, losses, rho, rho_init, loss_cfg.seed, time.perf_counter() - start, retries)


@dataclass(frozen=True)
class HomotopyConfig:
    """Continuation from ``A0`` (known good parameters) to the target ``A1``.

    A stage is accepted when the surrogate radius of the trained parameters is
    below ``tau``; otherwise the increment ``delta`` is halved, at most
    ``max_halvings`` times in a row.
    """

    A0: TridiagonalMatrix
    A1: TridiagonalMatrix
    tau: float = 0.5
    delta: float = 0.1
    max_halvings: int = 6
    train_start: bool = True

    def __post_init__(self):
        if not 0 < self.tau:
            raise ConfigurationError(f"tau must be positive, got {self.tau}")
        if not 0 < self.delta <= 1:
            raise ConfigurationError(f"delta must lie in (0, 1], got {self.delta}")
        if self.A0.n != self.A1.n:
            raise ConfigurationError(f"homotopy endpoints differ in size: {self.A0.n} vs {self.A1.n}")
        if self.max_halvings < 0:
            raise ConfigurationError("max_halvings must be nonnegative")


_ALPHA_SNAP = 1e-9


def homotopy_train(
    hcfg: HomotopyConfig,
    adam: AdamConfig,
    loss_cfg: LossConfig,
    init: TransferPair,
    config: TwoGridConfig = TwoGridConfig(),
    dense_cap: int = DENSE_CAP,
    verify_stages: bool = False,
    callback: Optional[Callable[[int, float], None]] = None,
) -> TrainReport:
    """Train along ``M = alpha A1 + (1 - alpha) A0`` from ``alpha = 0`` to ``1``.

    Every stage runs ``adam.T`` iterations with fresh Adam moments, starting
    from the last accepted parameters. The loss trace concatenates all
    stages, rejected ones included, so its length is the total budget spent.
    """
    start = time.perf_counter()
    A0, A1 = hcfg.A0, hcfg.A1
    losses: List[float] = []
    stages: List[StageRecord] = []
    retries = 0
    stage_id = 0
    rho_init = _verified_rho(A1, init, config, dense_cap)
    params = init

    def run_stage(alpha, start_params, halvings):
        nonlocal retries, stage_id
        M = blend(A0, A1, alpha)
        stage_id += 1
        try:
            cand, r = _optimize(M, start_params, config, adam, loss_cfg, (1, stage_id), losses, callback)
            retries += r
            surrogate = surrogate_radius(TwoGridContext(M, cand, config), loss_cfg, (2, stage_id))
        except CoarseSingularityError as err:
            logger.info("stage alpha=%.6g failed: %s", alpha, err)
            cand, surrogate = start_params, float("inf")
        rho = _verified_rho(M, cand, config, dense_cap) if verify_stages else None
        accepted = surrogate < hcfg.tau
        stages.append(StageRecord(alpha, surrogate, accepted, halvings, rho))
        logger.info("alpha=%.6g surrogate=%.4g %s", alpha, surrogate, "accepted" if accepted else "rejected")
        return cand, accepted

    if A0 == A1:
        # constant path: one stage on the plain training stream, identical to train()
        params, retries = _optimize(A1, init, config, adam, loss_cfg, (0,), losses, callback)
        surrogate = surrogate_radius(TwoGridContext(A1, params, config), loss_cfg, (2, 1))
        accepted = surrogate < hcfg.tau
        rho = _verified_rho(A1, params, config, dense_cap)
        stages.append(StageRecord(1.0, surrogate, accepted, 0, rho if verify_stages else None))
        return TrainReport(params, losses, rho, rho_init, loss_cfg.seed, time.perf_counter() - start, retries,
                           stages, accepted)

    alpha = 0.0
    if hcfg.train_start:
        params, _ = run_stage(0.0, params, 0)
        stages[-1].accepted = True
    converged = True
    while alpha < 1.0:
        p = 0
        while True:
            new_alpha = alpha + hcfg.delta / 2 ** p
            if new_alpha > 1.0 - _ALPHA_SNAP:
                new_alpha = 1.0
            cand, ok = run_stage(new_alpha, params, p)
            if ok:
                break
            p += 1
            if p > hcfg.max_halvings:
                converged = False
                break
        if not converged:
            break
        params, alpha = cand, new_alpha

    rho = _verified_rho(A1, params, config, dense_cap)
    return TrainReport(params, losses, rho, rho_init, loss_cfg.seed, time.perf_counter() - start, retries,
                       stages, converged)
