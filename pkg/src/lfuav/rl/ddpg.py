"""Deterministic policy gradient baseline (tanh actor, single critic)."""
from __future__ import annotations

import numpy as np

from .buffer import Batch, ReplayBuffer
from .nets import Adam, Mlp, soft_update
from .sac import SacConfig


class DdpgAgent:
    kind = "ddpg"

    def __init__(self, config: SacConfig, rng: np.random.Generator, state_dim: int = 2, action_dim: int = 2):
        self.config = config
        self.state_dim, self.action_dim = state_dim, action_dim
        h = list(config.hidden)
        self.actor = Mlp([state_dim, *h, action_dim], rng)
        self.critic = Mlp([state_dim + action_dim, *h, 1], rng)
        self.actor_target = self.actor.copy()
        self.critic_target = self.critic.copy()
        b, e = config.adam_betas, config.adam_eps
        self.opt_actor = Adam(self.actor.params, config.lr_pi, b, e)
        self.opt_critic = Adam(self.critic.params, config.lr_q, b, e)

    def policy(self, states: np.ndarray, target: bool = False) -> np.ndarray:
        net = self.actor_target if target else self.actor
        return np.tanh(net.forward(np.atleast_2d(states)))

    def act(self, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        a = self.policy(state)[0]
        sigma = self.config.exploration_noise
        if sigma > 0:
            a = a + sigma * rng.standard_normal(a.shape)
        return np.clip(a, -1.0, 1.0)

    def greedy(self, state: np.ndarray) -> np.ndarray:
        return self.policy(state)[0]

    def update(self, buffer: ReplayBuffer, rng: np.random.Generator) -> dict[str, float]:
        cfg = self.config
        batch = buffer.sample(cfg.batch, rng)
        c_loss, c_grads = ddpg_critic_loss(self, batch)
        self.opt_critic.step(c_grads)
        a_loss, a_grads = ddpg_actor_loss(self, batch)
        self.opt_actor.step(a_grads)
        soft_update(self.critic_target, self.critic, cfg.tau)
        soft_update(self.actor_target, self.actor, cfg.tau)
        return {"critic_loss": c_loss, "policy_loss": a_loss}

    def state_arrays(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for name in ("actor", "critic", "actor_target", "critic_target"):
            for i, p in enumerate(getattr(self, name).params):
                out[f"{name}/{i}"] = p
        for name in ("opt_actor", "opt_critic"):
            out.update(getattr(self, name).state_arrays(name))
        return out

    def load_arrays(self, arrays: dict) -> None:
        for name in ("actor", "critic", "actor_target", "critic_target"):
            net = getattr(self, name)
            net.set_params([arrays[f"{name}/{i}"] for i in range(len(net.params))])
        for name in ("opt_actor", "opt_critic"):
            getattr(self, name).load_arrays(arrays, name)


def ddpg_targets(agent: DdpgAgent, batch: Batch) -> np.ndarray:
    a_next = agent.policy(batch.next_states, target=True)
    q_next = agent.critic_target.forward(np.concatenate([batch.next_states, a_next], axis=1))[:, 0]
    return batch.rewards + agent.config.discount * (1.0 - batch.dones) * q_next


def ddpg_critic_loss(agent: DdpgAgent, batch: Batch):
    y = ddpg_targets(agent, batch)
    out, inputs = agent.critic.forward(np.concatenate([batch.states, batch.actions], axis=1), keep=True)
    resid = out[:, 0] - y
    grads, _ = agent.critic.backward(inputs, (resid / y.shape[0])[:, None])
    return 0.5 * float(np.mean(resid ** 2)), grads


def ddpg_actor_loss(agent: DdpgAgent, batch: Batch):
    """-mean Q(s, pi(s)); gradients w.r.t. the actor only."""
    pre, a_inputs = agent.actor.forward(batch.states, keep=True)
    a = np.tanh(pre)
    out, c_inputs = agent.critic.forward(np.concatenate([batch.states, a], axis=1), keep=True)
    n = a.shape[0]
    _, g_in = agent.critic.backward(c_inputs, np.full((n, 1), -1.0 / n), want_params=False)
    g_pre = g_in[:, agent.state_dim:] * (1.0 - a ** 2)
    grads, _ = agent.actor.backward(a_inputs, g_pre)
    return -float(np.mean(out[:, 0])), grads
