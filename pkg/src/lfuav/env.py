"""Relay-position MDP: the state is the UAV's horizontal position, the reward
is the inverse of the summed user outage at the position reached."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geometry import AirGroundParams, NodeLayout, RadioConfig
from .outage import system_outage
from .quadrature import QuadratureConfig
from .ratedist import DistortionSpec

log = logging.getLogger(__name__)

OutageFn = Callable[[float, float], np.ndarray]


@dataclass(frozen=True)
class EnvConfig:
    area: tuple[float, float, float, float] = (0.0, 20000.0, 0.0, 20000.0)  # x_min, x_max, y_min, y_max
    altitude: float = 500.0
    max_step: float = 500.0
    horizon: int = 100
    mu: float = 5000.0
    eps_guard: float = 1e-12
    start: tuple[float, float] = (0.0, 0.0)  # BS horizontal position

    def __post_init__(self):
        object.__setattr__(self, "area", tuple(float(v) for v in self.area))
        x0, x1, y0, y1 = self.area
        if not (x1 > x0 and y1 > y0):
            raise ValueError(f"degenerate area {self.area}")
        if self.max_step <= 0 or self.horizon < 1 or self.mu <= 0 or self.altitude <= 0:
            raise ValueError("need max_step > 0, horizon >= 1, mu > 0, altitude > 0")
        if not self.eps_guard > 0:
            raise ValueError("eps_guard must be positive")
        object.__setattr__(self, "start", tuple(float(v) for v in self.start))

    def contains(self, n1: float, n2: float) -> bool:
        x0, x1, y0, y1 = self.area
        return x0 <= n1 <= x1 and y0 <= n2 <= y1

    def clamp(self, n1: float, n2: float) -> tuple[float, float]:
        x0, x1, y0, y1 = self.area
        return min(max(n1, x0), x1), min(max(n2, y0), y1)


@dataclass(frozen=True)
class StepResult:
    next_state: tuple[float, float]
    reward: float
    outage_sum: float
    done: bool
    outages: tuple[float, ...] = ()


def reward_from_outage(outage_sum: float, n_users: int, config: EnvConfig) -> float:
    return n_users / (config.mu * max(outage_sum, config.eps_guard))


def normalize_state(state: Sequence[float], config: EnvConfig) -> np.ndarray:
    x0, x1, y0, y1 = config.area
    s = np.asarray(state, dtype=float)
    return np.array([2.0 * (s[0] - x0) / (x1 - x0) - 1.0, 2.0 * (s[1] - y0) / (y1 - y0) - 1.0])


def denormalize_state(z: Sequence[float], config: EnvConfig) -> tuple[float, float]:
    x0, x1, y0, y1 = config.area
    return (x0 + 0.5 * (float(z[0]) + 1.0) * (x1 - x0), y0 + 0.5 * (float(z[1]) + 1.0) * (y1 - y0))


def transition(state: Sequence[float], action: Sequence[float], config: EnvConfig,
               outage_fn: OutageFn) -> tuple[tuple[float, float], float, float, np.ndarray]:
    """Apply a displacement (metres) and score the position reached.

    Returns ``(next_state, reward, outage_sum, per_user_outage)``.
    """
    a = np.asarray(action, dtype=float)
    clipped = np.clip(a, -config.max_step, config.max_step)
    if np.any(clipped != a):
        log.debug("action %s clipped to %s", a, clipped)
    nxt = config.clamp(float(state[0]) + float(clipped[0]), float(state[1]) + float(clipped[1]))
    per_user = np.asarray(outage_fn(*nxt), dtype=float)
    total = float(per_user.sum())
    return nxt, reward_from_outage(total, per_user.size, config), total, per_user


class RelayEnv:
    """Episodic wrapper around :func:`transition`."""

    def __init__(self, config: EnvConfig, outage_fn: OutageFn):
        self.config = config
        self.outage_fn = outage_fn
        self.state: tuple[float, float] | None = None
        self.t = 0

    def reset(self, start: Sequence[float] | None = None) -> tuple[float, float]:
        if start is None:
            start = self.config.start
        if not self.config.contains(float(start[0]), float(start[1])):
            raise ValueError(f"start {tuple(start)} outside area {self.config.area}")
        self.state = (float(start[0]), float(start[1]))
        self.t = 0
        return self.state

    def step(self, action: Sequence[float]) -> StepResult:
        if self.state is None:
            raise RuntimeError("call reset() first")
        nxt, reward, total, per_user = transition(self.state, action, self.config, self.outage_fn)
        self.state = nxt
        self.t += 1
        return StepResult(nxt, reward, total, self.t >= self.config.horizon, tuple(per_user))


class SystemOutageFn:
    """Summed closed-form outage of every user as a function of UAV position.

    Evaluations are memoised per position; the object holds no other mutable
    state, so it can be shared by concurrent read-only callers.
    """

    def __init__(self, layout: NodeLayout, radio: RadioConfig, a2g: AirGroundParams,
                 specs: Sequence[DistortionSpec], m: float = 2.0,
                 quad: QuadratureConfig = QuadratureConfig(), cache_size: int = 100_000):
        self.layout, self.radio, self.a2g = layout, radio, a2g
        self.specs = tuple(specs)
        self.m, self.quad = m, quad
        self._memo: dict[tuple[float, float], np.ndarray] = {}
        self._cache_size = cache_size

    def __call__(self, n1: float, n2: float) -> np.ndarray:
        key = (float(n1), float(n2))
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        out = np.array(system_outage(self.layout.with_uav(n1, n2), self.radio, self.a2g,
                                     self.specs, self.m, self.quad).values)
        if len(self._memo) < self._cache_size:
            self._memo[key] = out
        return out


class GridOutageCache:
    """Bilinear interpolation of an outage function precomputed on a lattice."""

    def __init__(self, outage_fn: OutageFn, config: EnvConfig, n: int = 201):
        x0, x1, y0, y1 = config.area
        self.xs = np.linspace(x0, x1, n)
        self.ys = np.linspace(y0, y1, n)
        self.table = np.array([[outage_fn(x, y) for y in self.ys] for x in self.xs])

    def __call__(self, n1: float, n2: float) -> np.ndarray:
        xs, ys = self.xs, self.ys
        i = int(np.clip(np.searchsorted(xs, n1) - 1, 0, xs.size - 2))
        j = int(np.clip(np.searchsorted(ys, n2) - 1, 0, ys.size - 2))
        tx = (n1 - xs[i]) / (xs[i + 1] - xs[i])
        ty = (n2 - ys[j]) / (ys[j + 1] - ys[j])
        t = self.table
        return ((1 - tx) * (1 - ty) * t[i, j] + tx * (1 - ty) * t[i + 1, j]
                + (1 - tx) * ty * t[i, j + 1] + tx * ty * t[i + 1, j + 1])
