"""Actor-critic controller that nudges a layer count up or down.

The agent's state is the latest environment loss divided by a per-episode
scale (the episode's initial loss by default). Two actions exist, ``+1`` and
``-1``; everywhere an action index is used, index 0 means ``+1``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .nn import init_network
from .seeding import derive_seed

ACTIONS = (1, -1)
EPS_DEN = 1e-8
REWARD_CLIP = 10.0
PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class RLConfig:
    gamma: float = 0.9
    epsilon: float = 0.1
    buffer_capacity: int = 1000
    batch_size: int = 32
    actor_lr: float = 1e-3
    critic_lr: float = 1e-3
    hidden: int = 32
    # None: use each episode's initial loss
    state_scale: float | None = None

    def __post_init__(self):
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must lie in [0, 1)")
        if not 0 <= self.epsilon <= 1:
            raise ValueError("epsilon must lie in [0, 1]")
        if self.buffer_capacity < 1 or self.batch_size < 1 or self.hidden < 1:
            raise ValueError("buffer_capacity, batch_size and hidden must be positive")
        if self.actor_lr <= 0 or self.critic_lr <= 0:
            raise ValueError("learning rates must be positive")
        if self.state_scale is not None and self.state_scale <= 0:
            raise ValueError("state_scale must be positive")


@dataclass(frozen=True)
class Transition:
    state: float
    action: int
    next_state: float
    reward: float
    scale: float = 1.0

    def __post_init__(self):
        if self.action not in ACTIONS:
            raise ValueError(f"action must be one of {ACTIONS}, got {self.action}")
        vals = (self.state, self.next_state, self.reward, self.scale)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("transition fields must be finite")


class ReplayBuffer:
    """Fixed-capacity FIFO of transitions; the oldest record is evicted first."""

    def __init__(self, capacity):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.records = deque(maxlen=capacity)

    def __len__(self):
        return len(self.records)

    def push(self, tr):
        self.records.append(tr)

    def sample(self, batch_size, rng):
        """Uniform sampling with replacement."""
        if not self.records:
            raise ValueError("cannot sample from an empty replay buffer")
        idx = rng.integers(0, len(self.records), size=batch_size)
        return [self.records[i] for i in idx]


def push(buffer, tr):
    buffer.push(tr)


def sample_minibatch(buffer, batch_size, rng):
    return buffer.sample(batch_size, rng)


def action_index(delta):
    return ACTIONS.index(delta)


class PolicyNet:
    """Actor: normalized state -> probabilities over (+1, -1)."""

    def __init__(self, hidden=32, lr=1e-3, seed=0, zero_output=True, net=None):
        if net is not None:
            self.net = net
            return
        specs = [{"kind": "dense", "in": 1, "out": hidden, "activation": "relu"},
                 {"kind": "dense", "in": hidden, "out": hidden, "activation": "relu"},
                 {"kind": "dense", "in": hidden, "out": 2, "activation": "softmax"}]
        self.net = init_network((1,), specs, seed, lr=lr)
        if zero_output:
            # uniform initial policy; greedy ties resolve to +1
            self.net.layers[-1].weights[...] = 0.0

    def probs(self, states, cache=False):
        return self.net.forward(np.asarray(states, dtype=np.float64).reshape(-1, 1), cache=cache)

    def greedy(self, states):
        # argmax returns the first maximum, i.e. ties go to +1
        return self.probs(states).argmax(axis=1)


class ValueNet:
    """Critic: (normalized state, one-hot action) -> scalar Q."""

    def __init__(self, hidden=32, lr=1e-3, seed=0, zero_output=True, net=None):
        if net is not None:
            self.net = net
            return
        specs = [{"kind": "dense", "in": 3, "out": hidden, "activation": "relu"},
                 {"kind": "dense", "in": hidden, "out": hidden, "activation": "relu"},
                 {"kind": "dense", "in": hidden, "out": 1, "activation": "identity"}]
        self.net = init_network((3,), specs, seed, lr=lr)
        if zero_output:
            # Q starts identically 0, so early TD errors are the raw rewards
            self.net.layers[-1].weights[...] = 0.0

    @staticmethod
    def encode(states, action_idx):
        states = np.asarray(states, dtype=np.float64).reshape(-1)
        x = np.zeros((states.size, 3))
        x[:, 0] = states
        x[np.arange(states.size), 1 + np.asarray(action_idx).reshape(-1)] = 1.0
        return x

    def q(self, states, action_idx, cache=False):
        return self.net.forward(self.encode(states, action_idx), cache=cache)[:, 0]


def compute_reward(loss_t, loss_next, eps_den=EPS_DEN, clip=REWARD_CLIP):
    """Relative loss improvement, scaled by 1/100 and clipped to [-clip, clip]."""
    r = (loss_t - loss_next) / (max(loss_next, eps_den) * 100.0)
    return float(min(max(r, -clip), clip))


def apply_action(layer, delta, layer_max):
    return int(min(max(layer + delta, 1), layer_max))


def select_action(policy, state, epsilon, rng):
    """Epsilon-greedy choice returning +1 or -1."""
    if not 0 <= epsilon <= 1:
        raise ValueError("epsilon must lie in [0, 1]")
    if rng.random() < epsilon:
        return ACTIONS[int(rng.integers(0, 2))]
    return ACTIONS[int(policy.greedy([state])[0])]


def _batch_arrays(batch):
    s = np.array([tr.state / tr.scale for tr in batch])
    s2 = np.array([tr.next_state / tr.scale for tr in batch])
    a = np.array([action_index(tr.action) for tr in batch])
    r = np.array([tr.reward for tr in batch])
    return s, a, s2, r


def td_errors(value, policy, batch, gamma):
    """TD errors with the next action taken greedily from the current policy."""
    s, a, s2, r = _batch_arrays(batch)
    a2 = policy.greedy(s2)
    return r + gamma * value.q(s2, a2) - value.q(s, a)


def td_error(value, tr, a_next, gamma):
    s, a, s2, r = _batch_arrays([tr])
    a2 = np.array([action_index(a_next)])
    return float(r[0] + gamma * value.q(s2, a2)[0] - value.q(s, a)[0])


def critic_loss_and_grads(value, policy, batch, gamma):
    """Mean of 0.5 * delta**2 and its gradient; the bootstrap term is held fixed."""
    s, a, s2, r = _batch_arrays(batch)
    target = r + gamma * value.q(s2, policy.greedy(s2))
    q = value.q(s, a, cache=True)
    diff = q - target
    loss = 0.5 * float(np.mean(diff ** 2))
    grads = value.net.backward((diff / len(batch))[:, None])
    return loss, grads


def critic_update(value, batch, policy, gamma):
    """One Adam step on the critic; returns the pre-step mean loss."""
    if not batch:
        raise ValueError("empty batch")
    loss, grads = critic_loss_and_grads(value, policy, batch, gamma)
    value.net.step(grads)
    return loss


def actor_objective_and_grads(policy, value, batch, gamma):
    """Loss ``-mean(delta * log pi(a|s))`` and its gradient, delta held fixed."""
    s, a, _, _ = _batch_arrays(batch)
    delta = td_errors(value, policy, batch, gamma)
    p = policy.probs(s, cache=True)
    rows = np.arange(len(batch))
    pa = np.maximum(p[rows, a], PROB_FLOOR)
    loss = -float(np.mean(delta * np.log(pa)))
    dp = np.zeros_like(p)
    dp[rows, a] = -delta / (pa * len(batch))
    return loss, policy.net.backward(dp)


def actor_update(policy, value, batch, gamma):
    """One Adam ascent step along mean(delta * grad log pi); returns the pre-step loss."""
    if not batch:
        raise ValueError("empty batch")
    loss, grads = actor_objective_and_grads(policy, value, batch, gamma)
    policy.net.step(grads)
    return loss


def discounted_return(rewards, gamma):
    total = 0.0
    for r in reversed(list(rewards)):
        total = r + gamma * total
    return total


class ActorCritic:
    """Policy, critic, replay buffer and sampling RNG for one controller."""

    def __init__(self, cfg=None, seed=0):
        self.cfg = cfg or RLConfig()
        self.policy = PolicyNet(self.cfg.hidden, self.cfg.actor_lr, derive_seed(seed, "actor"))
        self.value = ValueNet(self.cfg.hidden, self.cfg.critic_lr, derive_seed(seed, "critic"))
        self.buffer = ReplayBuffer(self.cfg.buffer_capacity)
        self.rng = np.random.default_rng(derive_seed(seed, "controller-rng"))

    @classmethod
    def from_networks(cls, policy_net, value_net, cfg=None, seed=0):
        ac = cls(cfg, seed)
        ac.policy = PolicyNet(net=policy_net)
        ac.value = ValueNet(net=value_net)
        return ac

    def act(self, state, epsilon):
        return select_action(self.policy, state, epsilon, self.rng)

    def learn(self):
        batch = self.buffer.sample(self.cfg.batch_size, self.rng)
        actor_loss = actor_update(self.policy, self.value, batch, self.cfg.gamma)
        critic_loss = critic_update(self.value, batch, self.policy, self.cfg.gamma)
        return actor_loss, critic_loss


@dataclass
class StepRecord:
    t: int
    layer: int
    loss: float
    reward: float = 0.0
    action: int = 0
    epsilon: float = 0.0
    actor_loss: float = float("nan")
    critic_loss: float = float("nan")
    fault: bool = False


@dataclass
class EpisodeLog:
    episode: int
    init_layer: int
    records: list = field(default_factory=list)
    best_layer: int = 0
    discounted_return: float = 0.0

    @property
    def layers(self):
        return [r.layer for r in self.records]

    @property
    def losses(self):
        return [r.loss for r in self.records]

    @property
    def rewards(self):
        return [r.reward for r in self.records[1:]]

    @property
    def final_layer(self):
        return self.records[-1].layer

    @property
    def history(self):
        """Flat (loss, action, reward) triples for steps 1..T."""
        return [(r.loss, r.action, r.reward) for r in self.records[1:]]


def best_layer(records):
    # min over (loss, layer): equal losses resolve to the smaller layer
    return min((r.loss, r.layer) for r in records)[1]


def run_episode(env, controller, init_layer, steps, learn=True, epsilon=None,
                nonce=0, episode=0):
    """Run ``steps`` controller steps on ``env`` starting from ``init_layer``.

    ``env`` needs ``layer_max`` and ``evaluate(layer, nonce) -> (loss, fault)``.
    With ``learn=False`` no update touches the actor or critic, and no
    transition is stored.
    """
    cfg = controller.cfg
    eps = cfg.epsilon if epsilon is None else epsilon
    layer_max = env.layer_max
    if not 1 <= init_layer <= layer_max:
        raise ValueError(f"init layer {init_layer} outside [1, {layer_max}]")
    if steps < 0:
        raise ValueError("steps must be non-negative")

    layer = int(init_layer)
    loss, fault = env.evaluate(layer, nonce)
    scale = cfg.state_scale or (loss if loss > EPS_DEN else 1.0)
    log = EpisodeLog(episode=episode, init_layer=layer)
    log.records.append(StepRecord(0, layer, loss, epsilon=eps, fault=fault))

    for t in range(1, steps + 1):
        delta = controller.act(loss / scale, eps)
        layer = apply_action(layer, delta, layer_max)
        next_loss, fault = env.evaluate(layer, nonce)
        reward = compute_reward(loss, next_loss)
        actor_loss = critic_loss = float("nan")
        if learn:
            controller.buffer.push(Transition(loss, delta, next_loss, reward, scale))
            actor_loss, critic_loss = controller.learn()
        log.records.append(StepRecord(t, layer, next_loss, reward, delta, eps,
                                      actor_loss, critic_loss, fault))
        loss = next_loss

    log.best_layer = best_layer(log.records)
    log.discounted_return = discounted_return(log.rewards, cfg.gamma)
    return log
