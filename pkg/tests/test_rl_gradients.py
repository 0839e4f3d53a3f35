"""Finite-difference checks of every learning loss on small random nets."""
import numpy as np
import pytest

from lfuav.hyperparams import SacConfig
from lfuav.rl.buffer import Batch
from lfuav.rl.ddpg import DdpgAgent, ddpg_actor_loss, ddpg_critic_loss
from lfuav.rl.nets import Mlp, mlp_gradients
from lfuav.rl.sac import SacAgent, sac_critic_loss, sac_policy_loss, sac_temperature_loss

H = 1e-5
RTOL = 1e-4
SMALL = SacConfig(hidden=(8, 8), batch=16, buffer_capacity=64)


def fd_check(loss, params, grads, floor=1e-7):
    """Central differences for every scalar parameter; returns the worst relative error."""
    worst = 0.0
    for p, g in zip(params, grads):
        flat, gflat = p.reshape(-1), np.asarray(g).reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + H
            up = loss()
            flat[i] = old - H
            down = loss()
            flat[i] = old
            fd = (up - down) / (2 * H)
            err = abs(fd - gflat[i]) / max(abs(fd), abs(gflat[i]), floor)
            if abs(fd - gflat[i]) > 1e-9:
                worst = max(worst, err)
    return worst


def random_batch(rng, n=16, done_frac=0.25):
    return Batch(rng.uniform(-1, 1, (n, 2)), rng.uniform(-0.95, 0.95, (n, 2)), rng.uniform(0, 1, n),
                 rng.uniform(-1, 1, (n, 2)), (rng.uniform(size=n) < done_frac).astype(float))


def perturbed_sac(seed, twin=True):
    cfg = SacConfig(hidden=(8, 8), batch=16, buffer_capacity=64, twin_critics=twin)
    rng = np.random.default_rng(seed)
    agent = SacAgent(cfg, rng)
    # decouple the targets from the live critics so both paths are exercised
    for t in (agent.q1_target, agent.q2_target):
        for p in t.params:
            p += rng.normal(0, 0.1, p.shape)
    return agent, rng


def test_mlp_gradients_2_8_8_1():
    rng = np.random.default_rng(0)
    net = Mlp([2, 8, 8, 1], rng)
    x = rng.normal(size=(10, 2))
    w = rng.normal(size=(10, 1))
    loss = lambda: float(np.sum(w * net.forward(x)))  # noqa: E731
    grads = mlp_gradients(net, x, w)
    assert fd_check(loss, net.params, grads) < RTOL


def test_mlp_gradient_linearity_and_constant():
    rng = np.random.default_rng(1)
    net = Mlp([3, 5, 2], rng)
    x = rng.normal(size=(4, 3))
    g = rng.normal(size=(4, 2))
    one, two = mlp_gradients(net, x, g), mlp_gradients(net, x, 2 * g)
    for a, b in zip(one, two):
        np.testing.assert_allclose(b, 2 * a, rtol=1e-14)
    for z in mlp_gradients(net, x, np.zeros((4, 2))):
        assert not np.any(z)


def test_mlp_forward_contracts():
    assert not np.any(Mlp([3, 4, 2]).forward(np.ones((5, 3))))
    rng = np.random.default_rng(2)
    lin = Mlp([3, 2], rng)
    x = rng.normal(size=3)
    np.testing.assert_allclose(lin.forward(x), x @ lin.weights[0] + lin.biases[0])
    net = Mlp([3, 6, 2], rng)
    _, inputs = net.forward(rng.normal(size=(7, 3)), keep=True)
    assert np.all(inputs[1] >= 0)
    with pytest.raises(ValueError):
        net.forward(np.ones(4))


@pytest.mark.parametrize("twin", [True, False])
def test_sac_critic_loss_gradient(twin):
    agent, rng = perturbed_sac(3, twin)
    batch = random_batch(rng)
    noise = rng.normal(size=(16, 2))
    loss, grads = sac_critic_loss(agent, batch, noise)
    for q, g in zip(agent.critics(), grads):
        assert fd_check(lambda: sac_critic_loss(agent, batch, noise)[0], q.params, g) < RTOL


@pytest.mark.parametrize("twin", [True, False])
def test_sac_policy_loss_gradient(twin):
    agent, rng = perturbed_sac(4, twin)
    batch = random_batch(rng)
    noise = rng.normal(size=(16, 2))
    _, grads, _ = sac_policy_loss(agent, batch, noise)
    assert fd_check(lambda: sac_policy_loss(agent, batch, noise)[0], agent.policy.params, grads) < RTOL


def test_sac_policy_gradient_respects_log_std_clip():
    agent, rng = perturbed_sac(5)
    agent.policy.biases[-1][2:] = 5.0  # raw log-std far above the upper clip
    batch = random_batch(rng)
    noise = rng.normal(size=(16, 2))
    _, grads, _ = sac_policy_loss(agent, batch, noise)
    assert fd_check(lambda: sac_policy_loss(agent, batch, noise)[0], agent.policy.params, grads) < RTOL


def test_sac_temperature_loss_gradient():
    agent, rng = perturbed_sac(6)
    logp = rng.normal(size=16)
    _, g = sac_temperature_loss(agent, logp)
    assert fd_check(lambda: sac_temperature_loss(agent, logp)[0], [agent.log_alpha], [g]) < RTOL


def test_ddpg_critic_loss_gradient():
    rng = np.random.default_rng(7)
    agent = DdpgAgent(SMALL, rng)
    for p in agent.critic_target.params:
        p += rng.normal(0, 0.1, p.shape)
    batch = random_batch(rng)
    _, grads = ddpg_critic_loss(agent, batch)
    assert fd_check(lambda: ddpg_critic_loss(agent, batch)[0], agent.critic.params, grads) < RTOL


def test_ddpg_actor_loss_gradient():
    rng = np.random.default_rng(8)
    agent = DdpgAgent(SMALL, rng)
    batch = random_batch(rng)
    _, grads = ddpg_actor_loss(agent, batch)
    assert fd_check(lambda: ddpg_actor_loss(agent, batch)[0], agent.actor.params, grads) < RTOL


def test_fd_harness_detects_wrong_gradients():
    rng = np.random.default_rng(9)
    net = Mlp([2, 4, 1], rng)
    x = rng.normal(size=(6, 2))
    grads = mlp_gradients(net, x, np.ones((6, 1)))
    grads[0] = grads[0] * 1.01
    assert fd_check(lambda: float(net.forward(x).sum()), net.params, grads) > 1e-3
