"""Experiment settings: flat ``key = value`` config files merged with CLI flags."""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Dict, Optional

import numpy as np

from .errors import ConfigurationError
from .loss import LossConfig
from .problems import ProblemSpec, assemble_poisson
from .train import AdamConfig, HomotopyConfig
from .twogrid import TwoGridConfig

__all__ = ["ExperimentSpec", "parse_config_text", "load_config", "point_seed"]


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass
class ExperimentSpec:
    """Everything needed to reproduce one run. Field names double as config keys."""

    problem: str = "poisson"
    n: int = 31
    k: Optional[float] = None
    kmax: Optional[float] = None
    eps: Optional[float] = None
    ksampling: str = "node"
    s1: int = 2
    s2: int = 2
    K: int = 10
    N: int = 10
    T: int = 1000
    step: float = 1e-4
    objective: str = "log"
    homotopy: bool = False
    tau: float = 0.5
    delta: float = 0.1
    max_halvings: int = 6
    seed: int = 0
    out: Optional[str] = None
    operators: Optional[str] = None
    axis: Optional[str] = None
    start: Optional[float] = None
    stop: Optional[float] = None
    num: int = 5
    jobs: int = 1

    _types = {
        "n": int, "s1": int, "s2": int, "K": int, "N": int, "T": int, "seed": int, "num": int,
        "jobs": int, "max_halvings": int,
        "k": float, "kmax": float, "eps": float, "step": float, "tau": float, "delta": float,
        "start": float, "stop": float, "homotopy": _bool,
    }

    @classmethod
    def keys(cls):
        return [f.name for f in fields(cls)]

    @classmethod
    def from_mapping(cls, values: Dict[str, object]) -> "ExperimentSpec":
        known = set(cls.keys())
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
        kwargs = {}
        for key, raw in values.items():
            if raw is None:
                continue
            conv = cls._types.get(key, str)
            try:
                kwargs[key] = conv(raw)
            except (TypeError, ValueError) as err:
                raise ConfigurationError(f"bad value for {key}: {raw!r} ({err})") from None
        spec = cls(**kwargs)
        spec.validate()
        return spec

    def validate(self):
        self.problem_spec()
        self.twogrid_config()
        self.loss_config()
        self.adam_config()
        if self.axis is not None and self.axis not in ("k", "eps"):
            raise ConfigurationError(f"sweep axis must be 'k' or 'eps', got {self.axis!r}")
        if self.num < 1 or self.jobs < 1:
            raise ConfigurationError("num and jobs must be >= 1")

    def problem_spec(self, **override) -> ProblemSpec:
        args = dict(kind=self.problem, n=self.n, k=self.k, k_max=self.kmax, eps=self.eps,
                    k_sampling=self.ksampling)
        args.update(override)
        return ProblemSpec(**args)

    def twogrid_config(self) -> TwoGridConfig:
        return TwoGridConfig(self.s1, self.s2)

    def loss_config(self, seed: Optional[int] = None) -> LossConfig:
        return LossConfig(self.K, self.N, self.seed if seed is None else seed, self.objective)

    def adam_config(self, T: Optional[int] = None) -> AdamConfig:
        return AdamConfig(step=self.step, T=self.T if T is None else T)

    def homotopy_config(self, A1, A0=None) -> HomotopyConfig:
        A0 = assemble_poisson(self.n) if A0 is None else A0
        return HomotopyConfig(A0, A1, tau=self.tau, delta=self.delta, max_halvings=self.max_halvings)

    def echo(self) -> str:
        """``key=value`` lines for every non-empty setting, in field order."""
        lines = []
        for key in self.keys():
            val = getattr(self, key)
            if val is not None:
                lines.append(f"{key}={val}")
        return "\n".join(lines)


def parse_config_text(text: str) -> Dict[str, str]:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ConfigurationError(f"config line {lineno}: expected 'key = value', got {line!r}")
        values[key.strip()] = val.strip()
    return values


def load_config(path) -> Dict[str, str]:
    try:
        with open(path) as fh:
            return parse_config_text(fh.read())
    except OSError as err:
        raise ConfigurationError(f"cannot read config file {path}: {err}") from None


def point_seed(master: int, index: int) -> int:
    """Independent per-point seed for sweeps, derived from ``(master, index)``."""
    return int(np.random.SeedSequence([master, index]).generate_state(1, np.uint64)[0] >> np.uint64(1))
