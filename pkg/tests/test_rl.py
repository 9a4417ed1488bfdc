import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from depthtune.rl import (ActorCritic, PolicyNet, RLConfig, ReplayBuffer, Transition, ValueNet,
                          actor_update, apply_action, compute_reward, critic_loss_and_grads,
                          critic_update, discounted_return, push, run_episode, sample_minibatch,
                          select_action, td_error)
from depthtune.surrogate import SurrogateEnv

import gradcheck


def test_reward_examples():
    assert compute_reward(2.0, 1.0) == 0.01
    assert compute_reward(1.0, 2.0) == -0.005
    assert compute_reward(0.7, 0.7) == 0.0


@settings(max_examples=200)
@given(st.floats(1e-6, 1e9), st.floats(0, 1e9))
def test_reward_sign_and_bounds(a, b):
    r = compute_reward(a, b)
    assert -10 <= r <= 10
    assert (r > 0) == (b < a)
    assert (r == 0) == (b == a)


def test_apply_action_examples():
    assert apply_action(5, 1, 15) == 6
    assert apply_action(15, 1, 15) == 15
    assert apply_action(1, -1, 15) == 1


@given(st.integers(1, 15), st.lists(st.sampled_from([1, -1]), max_size=50))
def test_action_sequences_stay_in_bounds(start, actions):
    layer = start
    for a in actions:
        layer = apply_action(layer, a, 15)
        assert 1 <= layer <= 15


class FixedPolicy:
    def __init__(self, p):
        self.p = np.asarray(p, float)

    def greedy(self, states):
        return np.full(len(states), self.p.argmax())


def test_select_action_uniform_when_epsilon_one():
    rng = np.random.default_rng(0)
    n = 10_000
    ups = sum(select_action(FixedPolicy([0.9, 0.1]), 1.0, 1.0, rng) == 1 for _ in range(n))
    assert abs(ups - n / 2) <= 3 * np.sqrt(n * 0.25)


def test_select_action_greedy_and_tie():
    rng = np.random.default_rng(0)
    assert select_action(FixedPolicy([0.9, 0.1]), 1.0, 0.0, rng) == 1
    assert select_action(FixedPolicy([0.1, 0.9]), 1.0, 0.0, rng) == -1
    assert select_action(FixedPolicy([0.5, 0.5]), 1.0, 0.0, rng) == 1
    # fresh policy is uniform, and its tie also resolves to +1
    assert select_action(PolicyNet(seed=3), 0.4, 0.0, rng) == 1


def tr(i):
    return Transition(float(i), 1, float(i) + 1, 0.0)


def test_buffer_fifo_and_sampling():
    buf = ReplayBuffer(2)
    assert len(buf) == 0
    for i in range(3):
        push(buf, tr(i))
    assert [t.state for t in buf.records] == [1.0, 2.0]
    one = ReplayBuffer(5)
    push(one, tr(9))
    assert sample_minibatch(one, 1, np.random.default_rng(0)) == [tr(9)]
    assert sample_minibatch(one, 4, np.random.default_rng(0)) == [tr(9)] * 4
    with pytest.raises(ValueError):
        sample_minibatch(ReplayBuffer(3), 1, np.random.default_rng(0))


def test_buffer_sampling_uniform_and_replayable():
    buf = ReplayBuffer(2)
    push(buf, tr(0))
    push(buf, tr(1))
    draws = sample_minibatch(buf, 10_000, np.random.default_rng(1))
    zeros = sum(t.state == 0.0 for t in draws)
    assert abs(zeros - 5000) <= 3 * np.sqrt(2500)
    assert draws == sample_minibatch(buf, 10_000, np.random.default_rng(1))


@given(st.integers(1, 20), st.lists(st.integers(0, 100), max_size=80))
def test_buffer_never_exceeds_capacity(cap, items):
    buf = ReplayBuffer(cap)
    for i in items:
        push(buf, tr(i))
        assert len(buf) <= cap
    assert [t.state for t in buf.records] == [float(i) for i in items[-cap:]] if items else True


class TableValue:
    """Q looked up by normalized state, standing in for the critic."""

    def __init__(self, table):
        self.table = table

    def q(self, states, action_idx, cache=False):
        return np.array([self.table[float(s)] for s in np.ravel(states)])


def test_td_error_examples():
    v = TableValue({1.0: 0.4, 2.0: 0.5})
    t = Transition(1.0, 1, 2.0, 0.01)
    delta = td_error(v, t, 1, 0.9)
    assert delta == pytest.approx(0.06, abs=1e-15)
    assert 0.5 * delta ** 2 == pytest.approx(0.0018, abs=1e-15)
    v0 = TableValue({1.0: 0.3, 2.0: 7.0})
    assert td_error(v0, Transition(1.0, -1, 2.0, 0.3), 1, 0.0) == pytest.approx(0.0, abs=1e-15)


def test_critic_zero_delta_is_fixed_point():
    value, policy = ValueNet(seed=0), PolicyNet(seed=1)
    # zero-initialized output layer: Q == 0, so zero rewards and gamma give delta == 0
    batch = [Transition(1.0, 1, 0.5, 0.0), Transition(0.3, -1, 0.2, 0.0)]
    before = value.net.get_weights()
    assert critic_update(value, batch, policy, 0.0) == 0.0
    assert all(np.array_equal(a, b) for a, b in zip(before, value.net.get_weights()))


def test_critic_loss_decreases_on_single_transition():
    value, policy = ValueNet(seed=0, zero_output=False), PolicyNet(seed=1)
    batch = [Transition(1.0, 1, 0.5, 0.2)]
    losses = []
    for _ in range(11):
        loss, grads = critic_loss_and_grads(value, policy, batch, 0.0)
        losses.append(loss)
        value.net.step(grads)
    assert all(b < a for a, b in zip(losses, losses[1:]))


def test_actor_zero_delta_is_noop():
    value, policy = ValueNet(seed=0), PolicyNet(seed=1, zero_output=False)
    batch = [Transition(1.0, 1, 0.5, 0.0)]
    before = policy.net.get_weights()
    actor_update(policy, value, batch, 0.9)
    assert all(np.array_equal(a, b) for a, b in zip(before, policy.net.get_weights()))


def test_actor_positive_delta_raises_action_probability():
    value, policy = ValueNet(seed=0), PolicyNet(seed=1, lr=1e-4, zero_output=False)
    for action, idx in ((1, 0), (-1, 1)):
        t = Transition(0.8, action, 0.5, 0.5)
        before = policy.probs([0.8])[0, idx]
        actor_update(policy, value, [t], 0.0)
        assert policy.probs([0.8])[0, idx] > before


@pytest.mark.parametrize("k", range(100))
def test_critic_gradient_finite_difference(k):
    assert gradcheck.critic_grad_error(k) <= 1e-4


@pytest.mark.parametrize("k", range(100))
def test_actor_gradient_finite_difference(k):
    assert gradcheck.actor_grad_error(k) <= 1e-4


def test_discounted_return_examples():
    assert discounted_return([1, 1, 1], 0.9) == pytest.approx(2.71, abs=1e-15)
    assert discounted_return([0.3, 5, 7], 0.0) == 0.3
    assert discounted_return([], 0.5) == 0.0


@given(st.lists(st.floats(-10, 10), max_size=20), st.floats(-5, 5), st.floats(0, 0.99))
def test_discounted_return_is_linear(rewards, alpha, gamma):
    scaled = discounted_return([alpha * r for r in rewards], gamma)
    assert scaled == pytest.approx(alpha * discounted_return(rewards, gamma), abs=1e-9)


def monotone():
    return SurrogateEnv("monotone_decreasing")


def test_episode_with_no_steps():
    ep = run_episode(monotone(), ActorCritic(seed=0), 5, 0)
    assert ep.layers == [5] and ep.best_layer == 5 and ep.rewards == []


def test_frozen_episode_leaves_weights_untouched():
    ac = ActorCritic(seed=0)
    run_episode(monotone(), ac, 5, 10, learn=True)
    before = ac.policy.net.get_weights() + ac.value.net.get_weights()
    run_episode(monotone(), ac, 5, 10, learn=False)
    after = ac.policy.net.get_weights() + ac.value.net.get_weights()
    assert all(np.array_equal(a, b) for a, b in zip(before, after))


def test_episode_log_shape_and_policy_validity():
    ac = ActorCritic(RLConfig(batch_size=4), seed=2)
    ep = run_episode(monotone(), ac, 5, 12)
    assert len(ep.losses) == 13 and len(ep.rewards) == 12 and len(ac.buffer) == 12
    assert 1 <= ep.best_layer <= 15
    assert min(ep.losses) == monotone().loss(ep.best_layer)
    p = ac.policy.probs(np.linspace(0, 2, 9))
    assert np.all(p >= 0) and np.allclose(p.sum(axis=1), 1.0)


def test_trained_controller_finds_monotone_argmin():
    env, ac = monotone(), ActorCritic(seed=0)
    for m in range(30):
        run_episode(env, ac, 5, 30, nonce=m)
    ep = run_episode(env, ac, 5, 30, learn=False, epsilon=0.0)
    assert ep.best_layer == 15


def test_best_layer_ties_go_to_smaller_layer():
    class Flat:
        layer_max = 15

        def evaluate(self, layer, nonce=0):
            return (1.0, False)

    ep = run_episode(Flat(), ActorCritic(seed=0), 5, 5, learn=False, epsilon=0.0)
    assert ep.best_layer == min(ep.layers)


def test_bad_init_layer_rejected():
    with pytest.raises(ValueError):
        run_episode(monotone(), ActorCritic(seed=0), 16, 3)
