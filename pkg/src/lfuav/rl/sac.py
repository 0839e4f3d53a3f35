"""Soft actor-critic with twin critics and learned temperature.

Losses are written out with their exact gradients; every ``*_loss``
function returns the scalar loss together with the parameter gradients so
the pieces can be checked against finite differences in isolation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..hyperparams import SacConfig
from .buffer import Batch, ReplayBuffer
from .nets import Adam, Mlp, soft_update

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG2 = math.log(2.0)


@dataclass
class PolicySample:
    actions: np.ndarray
    log_prob: np.ndarray
    pre_tanh: np.ndarray
    std: np.ndarray
    noise: np.ndarray
    in_bounds: np.ndarray
    inputs: list = field(repr=False, default_factory=list)


def _log_one_minus_tanh_sq(u):
    # log(1 - tanh(u)^2) without cancellation for large |u|
    return 2.0 * (_LOG2 - u - np.logaddexp(0.0, -2.0 * u))


def policy_forward(net: Mlp, states: np.ndarray, noise: np.ndarray,
                   log_std_bounds=(-20.0, 2.0)) -> PolicySample:
    """Reparameterised tanh-Gaussian sample for given standard-normal ``noise``."""
    out, inputs = net.forward(np.atleast_2d(states), keep=True)
    d = out.shape[1] // 2
    mean, raw_log_std = out[:, :d], out[:, d:]
    lo, hi = log_std_bounds
    log_std = np.clip(raw_log_std, lo, hi)
    std = np.exp(log_std)
    eps = np.atleast_2d(noise)
    u = mean + std * eps
    a = np.tanh(u)
    log_prob = np.sum(-0.5 * eps ** 2 - log_std - _HALF_LOG_2PI - _log_one_minus_tanh_sq(u), axis=1)
    in_bounds = (raw_log_std >= lo) & (raw_log_std <= hi)
    return PolicySample(a, log_prob, u, std, eps, in_bounds, inputs)


def policy_sample(net: Mlp, state: np.ndarray, rng: np.random.Generator,
                  log_std_bounds=(-20.0, 2.0)) -> tuple[np.ndarray, np.ndarray]:
    state = np.atleast_2d(state)
    d = net.sizes[-1] // 2
    s = policy_forward(net, state, rng.standard_normal((state.shape[0], d)), log_std_bounds)
    return s.actions, s.log_prob


def policy_mean_action(net: Mlp, state: np.ndarray) -> np.ndarray:
    out = net.forward(np.atleast_2d(state))
    return np.tanh(out[:, : out.shape[1] // 2])


class SacAgent:
    kind = "sac"

    def __init__(self, config: SacConfig, rng: np.random.Generator, state_dim: int = 2, action_dim: int = 2):
        self.config = config
        self.state_dim, self.action_dim = state_dim, action_dim
        h = list(config.hidden)
        self.policy = Mlp([state_dim, *h, 2 * action_dim], rng)
        self.q1 = Mlp([state_dim + action_dim, *h, 1], rng)
        self.q2 = Mlp([state_dim + action_dim, *h, 1], rng)
        self.q1_target = self.q1.copy()
        self.q2_target = self.q2.copy()
        self.log_alpha = np.array([math.log(config.alpha0)])
        b, e = config.adam_betas, config.adam_eps
        self.opt_q1 = Adam(self.q1.params, config.lr_q, b, e)
        self.opt_q2 = Adam(self.q2.params, config.lr_q, b, e)
        self.opt_pi = Adam(self.policy.params, config.lr_pi, b, e)
        self.opt_alpha = Adam([self.log_alpha], config.lr_alpha, b, e)

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha[0]))

    @property
    def target_entropy(self) -> float:
        t = self.config.target_entropy
        return -float(self.action_dim) if t is None else t

    def critics(self):
        return (self.q1, self.q2) if self.config.twin_critics else (self.q1,)

    def targets(self):
        return (self.q1_target, self.q2_target) if self.config.twin_critics else (self.q1_target,)

    def act(self, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        a, _ = policy_sample(self.policy, state, rng, self.config.log_std_bounds)
        return a[0]

    def greedy(self, state: np.ndarray) -> np.ndarray:
        return policy_mean_action(self.policy, state)[0]

    def update(self, buffer: ReplayBuffer, rng: np.random.Generator) -> dict[str, float]:
        cfg = self.config
        batch = buffer.sample(cfg.batch, rng)
        noise_next = rng.standard_normal((cfg.batch, self.action_dim))
        noise = rng.standard_normal((cfg.batch, self.action_dim))

        q_loss, q_grads = sac_critic_loss(self, batch, noise_next)
        for opt, g in zip((self.opt_q1, self.opt_q2), q_grads):
            opt.step(g)
        pi_loss, pi_grads, log_prob = sac_policy_loss(self, batch, noise)
        self.opt_pi.step(pi_grads)
        alpha_loss, alpha_grad = sac_temperature_loss(self, log_prob)
        self.opt_alpha.step([alpha_grad])
        for t, q in zip(self.targets(), self.critics()):
            soft_update(t, q, cfg.tau)
        return {"critic_loss": q_loss, "policy_loss": pi_loss, "alpha_loss": alpha_loss, "alpha": self.alpha}

    def state_arrays(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {"log_alpha": self.log_alpha}
        for name in ("policy", "q1", "q2", "q1_target", "q2_target"):
            for i, p in enumerate(getattr(self, name).params):
                out[f"{name}/{i}"] = p
        for name in ("opt_q1", "opt_q2", "opt_pi", "opt_alpha"):
            out.update(getattr(self, name).state_arrays(name))
        return out

    def load_arrays(self, arrays: dict) -> None:
        self.log_alpha[...] = arrays["log_alpha"]
        for name in ("policy", "q1", "q2", "q1_target", "q2_target"):
            net = getattr(self, name)
            net.set_params([arrays[f"{name}/{i}"] for i in range(len(net.params))])
        for name in ("opt_q1", "opt_q2", "opt_pi", "opt_alpha"):
            getattr(self, name).load_arrays(arrays, name)


def critic_targets(agent: SacAgent, batch: Batch, noise_next: np.ndarray) -> np.ndarray:
    """Soft Bellman targets built from the target critics only."""
    cfg = agent.config
    nxt = policy_forward(agent.policy, batch.next_states, noise_next, cfg.log_std_bounds)
    sa = np.concatenate([batch.next_states, nxt.actions], axis=1)
    q_next = np.min(np.stack([t.forward(sa)[:, 0] for t in agent.targets()]), axis=0)
    soft_value = q_next - agent.alpha * nxt.log_prob
    return batch.rewards + cfg.discount * (1.0 - batch.dones) * soft_value


def sac_critic_loss(agent: SacAgent, batch: Batch, noise_next: np.ndarray):
    """Sum over critics of mean 0.5*(Q(s,a) - y)^2; returns (loss, grads per critic)."""
    y = critic_targets(agent, batch, noise_next)
    sa = np.concatenate([batch.states, batch.actions], axis=1)
    n = y.shape[0]
    loss = 0.0
    grads = []
    for q in agent.critics():
        out, inputs = q.forward(sa, keep=True)
        resid = out[:, 0] - y
        loss += 0.5 * float(np.mean(resid ** 2))
        g, _ = q.backward(inputs, (resid / n)[:, None])
        grads.append(g)
    return loss, grads


def sac_policy_loss(agent: SacAgent, batch: Batch, noise: np.ndarray):
    """mean(alpha*log pi(a|s) - min_j Q_j(s, a)) with a reparameterised.

    Returns ``(loss, policy_grads, log_prob)``.
    """
    cfg = agent.config
    alpha = agent.alpha
    s = policy_forward(agent.policy, batch.states, noise, cfg.log_std_bounds)
    n, d = s.actions.shape
    sa = np.concatenate([batch.states, s.actions], axis=1)
    runs = [q.forward(sa, keep=True) for q in agent.critics()]
    qs = np.stack([out[:, 0] for out, _ in runs])
    pick = np.argmin(qs, axis=0)
    q_min = qs[pick, np.arange(n)]
    loss = float(np.mean(alpha * s.log_prob - q_min))

    # dQmin/da through whichever critic is smaller per sample
    dq_da = np.zeros_like(s.actions)
    for j, (q, (_, inputs)) in enumerate(zip(agent.critics(), runs)):
        rows = pick == j
        if not np.any(rows):
            continue
        _, g_in = q.backward(inputs, rows[:, None].astype(float), want_params=False)
        dq_da += g_in[:, agent.state_dim:]
    a = s.actions
    dtanh = 1.0 - a ** 2
    g_u = (alpha * 2.0 * a - dq_da * dtanh) / n
    g_mean = g_u
    g_log_std = (-alpha / n + g_u * s.std * s.noise) * s.in_bounds
    grads, _ = agent.policy.backward(s.inputs, np.concatenate([g_mean, g_log_std], axis=1))
    return loss, grads, s.log_prob


def sac_temperature_loss(agent: SacAgent, log_prob: np.ndarray):
    """mean(-alpha*(log pi + H_min)); gradient taken w.r.t. log(alpha)."""
    alpha = agent.alpha
    slack = float(np.mean(log_prob)) + agent.target_entropy
    loss = -alpha * slack
    return loss, np.array([-alpha * slack])
