"""Episode loop: act, step, store, and learn from replayed minibatches."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..env import RelayEnv, normalize_state
from ..hyperparams import SacConfig, TrainConfig
from .buffer import ReplayBuffer, Transition
from .ddpg import DdpgAgent
from .sac import SacAgent

AGENTS = {"sac": SacAgent, "ddpg": DdpgAgent}


@dataclass
class TrainLog:
    episode_rewards: list[float] = field(default_factory=list)
    episode_outage: list[float] = field(default_factory=list)
    positions: list[list[tuple[float, float]]] = field(default_factory=list)
    update_steps: list[int] = field(default_factory=list)
    critic_loss: list[float] = field(default_factory=list)
    policy_loss: list[float] = field(default_factory=list)
    alpha: list[float] = field(default_factory=list)

    def to_arrays(self, prefix: str = "log") -> dict[str, np.ndarray]:
        return {
            f"{prefix}/episode_rewards": np.array(self.episode_rewards, dtype=float),
            f"{prefix}/episode_outage": np.array(self.episode_outage, dtype=float),
            f"{prefix}/positions": np.array(self.positions, dtype=float).reshape(-1, 2),
            f"{prefix}/episode_lengths": np.array([len(p) for p in self.positions], dtype=int),
            f"{prefix}/update_steps": np.array(self.update_steps, dtype=int),
            f"{prefix}/critic_loss": np.array(self.critic_loss, dtype=float),
            f"{prefix}/policy_loss": np.array(self.policy_loss, dtype=float),
            f"{prefix}/alpha": np.array(self.alpha, dtype=float),
        }

    @classmethod
    def from_arrays(cls, arrays: dict, prefix: str = "log") -> "TrainLog":
        flat = arrays[f"{prefix}/positions"]
        positions, start = [], 0
        for n in arrays[f"{prefix}/episode_lengths"]:
            positions.append([tuple(p) for p in flat[start:start + n].tolist()])
            start += n
        return cls(
            list(arrays[f"{prefix}/episode_rewards"].tolist()),
            list(arrays[f"{prefix}/episode_outage"].tolist()),
            positions,
            list(arrays[f"{prefix}/update_steps"].tolist()),
            list(arrays[f"{prefix}/critic_loss"].tolist()),
            list(arrays[f"{prefix}/policy_loss"].tolist()),
            list(arrays[f"{prefix}/alpha"].tolist()),
        )


def seed_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    """Independent generators for (network init, acting, minibatch sampling)."""
    return tuple(np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3))


class Trainer:
    def __init__(self, env: RelayEnv, agent_kind: str, agent_config: SacConfig = SacConfig(),
                 train_config: TrainConfig = TrainConfig(), seed: int = 0):
        if agent_kind not in AGENTS:
            raise ValueError(f"unknown agent {agent_kind!r}; choose from {sorted(AGENTS)}")
        self.env = env
        self.agent_kind = agent_kind
        self.agent_config = agent_config
        self.train_config = train_config
        self.seed = seed
        rng_init, self.rng_act, self.rng_update = seed_streams(seed)
        self.agent = AGENTS[agent_kind](agent_config, rng_init)
        self.buffer = ReplayBuffer(agent_config.buffer_capacity)
        self.log = TrainLog()
        self.episode = 0
        self.total_steps = 0

    def _exploring(self) -> bool:
        cfg = self.agent_config
        if not self.train_config.learn:
            return True
        return cfg.learn_trigger == "warmup" and self.total_steps < cfg.warmup_steps

    def _should_learn(self) -> bool:
        cfg = self.agent_config
        if not self.train_config.learn or len(self.buffer) < cfg.batch:
            return False
        if cfg.learn_trigger == "buffer_full":
            return self.total_steps > cfg.buffer_capacity
        return self.total_steps >= cfg.warmup_steps

    def run_episode(self) -> None:
        env, agent = self.env, self.agent
        state = env.reset()
        z = normalize_state(state, env.config)
        ep_reward = 0.0
        path = []
        outage_sum = float("nan")
        for _ in range(env.config.horizon):
            if self._exploring():
                a = self.rng_act.uniform(-1.0, 1.0, agent.action_dim)
            else:
                a = agent.act(z, self.rng_act)
            res = env.step(a * env.config.max_step)
            z_next = normalize_state(res.next_state, env.config)
            terminal = res.done and self.train_config.terminal_on_horizon
            self.buffer.add(Transition(z, a, res.reward, z_next, terminal))
            self.total_steps += 1
            if self._should_learn():
                losses = agent.update(self.buffer, self.rng_update)
                self.log.update_steps.append(self.total_steps)
                self.log.critic_loss.append(losses["critic_loss"])
                self.log.policy_loss.append(losses["policy_loss"])
                self.log.alpha.append(losses.get("alpha", float("nan")))
            ep_reward += res.reward
            outage_sum = res.outage_sum
            path.append(res.next_state)
            z = z_next
            if res.done:
                break
        self.log.episode_rewards.append(ep_reward)
        self.log.episode_outage.append(outage_sum)
        self.log.positions.append(path)
        self.episode += 1

    def run(self, episodes: int | None = None, progress=None) -> TrainLog:
        target = self.train_config.episodes if episodes is None else self.episode + episodes
        while self.episode < target:
            self.run_episode()
            if progress is not None:
                progress(self)
        return self.log


def greedy_rollout(env: RelayEnv, agent) -> tuple[list[tuple[float, float]], list[float]]:
    """Follow the deterministic policy for one episode; returns visited positions and outage sums."""
    state = env.reset()
    positions, outages = [state], []
    for _ in range(env.config.horizon):
        a = agent.greedy(normalize_state(state, env.config))
        res = env.step(np.clip(a, -1.0, 1.0) * env.config.max_step)
        state = res.next_state
        positions.append(state)
        outages.append(res.outage_sum)
        if res.done:
            break
    return positions, outages


def train(env: RelayEnv, agent_kind: str, agent_config: SacConfig = SacConfig(),
          train_config: TrainConfig = TrainConfig(), seed: int = 0) -> TrainLog:
    return Trainer(env, agent_kind, agent_config, train_config, seed).run()
