"""Agent and training hyperparameters.

Kept outside the ``rl`` package so configuration can be validated without
loading any learning code.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SacConfig:
    lr_q: float = 0.003
    lr_pi: float = 0.001
    lr_alpha: float = 0.0003
    discount: float = 0.9
    batch: int = 128
    tau: float = 0.005
    alpha0: float = 0.2
    target_entropy: float | None = None  # None -> -dim(action)
    hidden: tuple[int, ...] = (128, 128)
    warmup_steps: int = 500
    buffer_capacity: int = 10_000
    # "warmup": learn once warmup_steps transitions are stored;
    # "buffer_full": learn only once more than buffer_capacity transitions were stored
    learn_trigger: str = "warmup"
    twin_critics: bool = True
    log_std_bounds: tuple[float, float] = (-20.0, 2.0)
    exploration_noise: float = 0.1  # DDPG only
    adam_betas: tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        object.__setattr__(self, "log_std_bounds", tuple(float(v) for v in self.log_std_bounds))
        object.__setattr__(self, "adam_betas", tuple(float(v) for v in self.adam_betas))
        if min(self.lr_q, self.lr_pi, self.lr_alpha) <= 0:
            raise ValueError("learning rates must be positive")
        if not 0 < self.discount < 1:
            raise ValueError("discount must lie in (0, 1)")
        if not 0 <= self.tau <= 1:
            raise ValueError("tau must lie in [0, 1]")
        if self.batch < 1 or self.buffer_capacity < self.batch:
            raise ValueError("need 1 <= batch <= buffer_capacity")
        if self.learn_trigger not in ("warmup", "buffer_full"):
            raise ValueError(f"unknown learn trigger {self.learn_trigger!r}")
        if self.alpha0 <= 0:
            raise ValueError("alpha0 must be positive")



@dataclass(frozen=True)
class TrainConfig:
    episodes: int = 300
    # False: act with uniform random actions throughout and never update
    learn: bool = True
    # horizon ends are time limits; only mark them terminal when asked
    terminal_on_horizon: bool = False

    def __post_init__(self):
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
