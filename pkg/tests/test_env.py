import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lfuav.env import (
    EnvConfig, GridOutageCache, RelayEnv, SystemOutageFn, denormalize_state, normalize_state,
    reward_from_outage, transition,
)
from lfuav.geometry import AirGroundParams, NodeLayout, RadioConfig
from lfuav.quadrature import QuadratureConfig
from lfuav.ratedist import DistortionSpec

CFG = EnvConfig()


def bowl(n1, n2):
    """Cheap smooth stand-in for the outage surface."""
    return np.array([0.1 + ((n1 - 4000) / 2e4) ** 2, 0.2 + ((n2 - 1500) / 2e4) ** 2])


def test_reward_arithmetic():
    assert reward_from_outage(0.002, 2, CFG) == pytest.approx(0.2)
    assert math.isfinite(reward_from_outage(0.0, 2, CFG))
    assert reward_from_outage(0.0, 2, CFG) == 2 / (5000 * 1e-12)


@given(st.floats(0.0, 2.0), st.floats(1e-9, 1.0))
def test_reward_strictly_decreasing(p, dp):
    assert reward_from_outage(p + dp, 2, CFG) < reward_from_outage(p, 2, CFG)


def test_reset_defaults_and_checks():
    env = RelayEnv(CFG, bowl)
    assert env.reset() == (0.0, 0.0)
    assert env.reset((100.0, 200.0)) == (100.0, 200.0)
    with pytest.raises(ValueError):
        env.reset((-1.0, 0.0))
    with pytest.raises(RuntimeError):
        RelayEnv(CFG, bowl).step((0.0, 0.0))


def test_step_uses_next_state_and_horizon():
    env = RelayEnv(EnvConfig(horizon=3), bowl)
    env.reset((1000.0, 1000.0))
    r = env.step((300.0, -200.0))
    assert r.next_state == (1300.0, 800.0)
    assert r.outage_sum == pytest.approx(bowl(1300.0, 800.0).sum())
    assert r.reward == pytest.approx(2 / (5000 * r.outage_sum))
    assert [env.step((0.0, 0.0)).done for _ in range(2)] == [False, True]


def test_zero_action_is_a_fixed_point():
    a = transition((5000.0, 5000.0), (0.0, 0.0), CFG, bowl)
    b = transition((5000.0, 5000.0), (0.0, 0.0), CFG, bowl)
    assert a[0] == (5000.0, 5000.0)
    assert a[1] == b[1]


def test_boundary_clamp_and_action_clip():
    nxt, *_ = transition((20000.0, 0.0), (400.0, -400.0), CFG, bowl)
    assert nxt == (20000.0, 0.0)
    nxt, *_ = transition((1000.0, 1000.0), (5000.0, -5000.0), CFG, bowl)
    assert nxt == (1500.0, 500.0)


@given(st.lists(st.tuples(st.floats(-2000, 2000), st.floats(-2000, 2000)), min_size=1, max_size=40))
def test_states_never_leave_area(actions):
    env = RelayEnv(CFG, bowl)
    env.reset((19900.0, 100.0))
    for a in actions:
        s = env.step(a).next_state
        assert CFG.contains(*s)


@given(st.floats(0, 20000), st.floats(0, 20000))
def test_normalisation_round_trip(x, y):
    z = normalize_state((x, y), CFG)
    assert np.all(np.abs(z) <= 1.0)
    back = denormalize_state(z, CFG)
    assert back[0] == pytest.approx(x, abs=1e-8) and back[1] == pytest.approx(y, abs=1e-8)


def test_normalisation_landmarks():
    np.testing.assert_array_equal(normalize_state((10000.0, 10000.0), CFG), [0.0, 0.0])
    np.testing.assert_array_equal(normalize_state((0.0, 0.0), CFG), [-1.0, -1.0])


def test_config_validation():
    for bad in [dict(max_step=0.0), dict(horizon=0), dict(mu=0.0), dict(area=(0, 0, 0, 1)),
                dict(eps_guard=0.0)]:
        with pytest.raises(ValueError):
            EnvConfig(**bad)


def test_system_outage_fn_is_deterministic_and_memoised():
    fn = SystemOutageFn(NodeLayout.default(), RadioConfig(), AirGroundParams(),
                        [DistortionSpec(0.1), DistortionSpec(0.3)], quad=QuadratureConfig(1e-6, 1e-6))
    a = fn(4000.0, 1500.0)
    b = fn(4000.0, 1500.0)
    assert a is b
    fresh = SystemOutageFn(NodeLayout.default(), RadioConfig(), AirGroundParams(),
                           [DistortionSpec(0.1), DistortionSpec(0.3)], quad=QuadratureConfig(1e-6, 1e-6))
    np.testing.assert_array_equal(a, fresh(4000.0, 1500.0))
    # relaxed tolerance stays close to the full-precision value
    full = SystemOutageFn(NodeLayout.default(), RadioConfig(), AirGroundParams(),
                          [DistortionSpec(0.1), DistortionSpec(0.3)])
    np.testing.assert_allclose(a, full(4000.0, 1500.0), atol=1e-6)


def test_grid_cache_interpolates_exactly_at_nodes_and_bilinear_between():
    cfg = EnvConfig(area=(0.0, 10.0, 0.0, 10.0))
    lin = lambda x, y: np.array([2 * x + 3 * y + 1.0])  # noqa: E731
    cache = GridOutageCache(lin, cfg, n=6)
    assert cache(4.0, 6.0)[0] == pytest.approx(lin(4.0, 6.0)[0])
    assert cache(3.3, 7.7)[0] == pytest.approx(lin(3.3, 7.7)[0])
    assert cache(10.0, 10.0)[0] == pytest.approx(lin(10.0, 10.0)[0])
