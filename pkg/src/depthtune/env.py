"""Target-network environment.

The environment state is the training loss of a freshly built fully-connected
regressor with a given number of hidden layers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .nn import NonFiniteError, init_network, mse_grad, mse_loss
from .seeding import derive_seed

log = logging.getLogger(__name__)

DIVERGED_LOSS = 1e6


@dataclass(frozen=True)
class EnvConfig:
    nodes_per_layer: int = 100
    train_iters: int = 100
    lr: float = 1e-3
    layer_max: int = 15
    seed: int = 0

    def __post_init__(self):
        if self.nodes_per_layer < 1 or self.layer_max < 1:
            raise ValueError("nodes_per_layer and layer_max must be positive")
        if self.train_iters < 0:
            raise ValueError("train_iters must be non-negative")
        if self.lr <= 0:
            raise ValueError("lr must be positive")


class Evaluation(NamedTuple):
    loss: float
    fault: bool = False


def check_layer_count(layer_count, layer_max):
    if not 1 <= layer_count <= layer_max:
        raise ValueError(f"layer count {layer_count} outside [1, {layer_max}]")
    return int(layer_count)


def target_specs(layer_count, input_dim, nodes):
    specs = [{"kind": "dense", "in": input_dim, "out": nodes, "activation": "relu"}]
    specs += [{"kind": "dense", "in": nodes, "out": nodes, "activation": "relu"}
              for _ in range(layer_count - 1)]
    specs.append({"kind": "dense", "in": nodes, "out": 1, "activation": "identity"})
    return specs


def target_param_count(layer_count, input_dim, nodes):
    return (input_dim * nodes + nodes + (layer_count - 1) * (nodes * nodes + nodes)
            + nodes + 1)


def build_target(layer_count, input_dim, cfg, nonce=0):
    """Fresh ``input_dim -> [nodes, ReLU] * layer_count -> 1`` network."""
    check_layer_count(layer_count, cfg.layer_max)
    seed = derive_seed(cfg.seed, "target", layer_count, nonce)
    return init_network((input_dim,), target_specs(layer_count, input_dim, cfg.nodes_per_layer),
                        seed, lr=cfg.lr)


def train_target(layer_count, dataset, cfg, nonce=0):
    """Build and train a target network; return it with its final training MSE.

    Divergence (any NaN/Inf) yields ``Evaluation(DIVERGED_LOSS, fault=True)``.
    """
    net = build_target(layer_count, dataset.n_features, cfg, nonce)
    x = dataset.features
    y = dataset.targets[:, None]
    try:
        for _ in range(cfg.train_iters):
            pred = net.forward(x)
            net.step(net.backward(mse_grad(pred, y)))
        loss = mse_loss(net.forward(x, cache=False), y)
    except NonFiniteError:
        log.warning("target network with %d layers diverged (nonce %s)", layer_count, nonce)
        return net, Evaluation(DIVERGED_LOSS, True)
    if not np.isfinite(loss) or loss > DIVERGED_LOSS:
        return net, Evaluation(DIVERGED_LOSS, True)
    return net, Evaluation(loss, False)


def evaluate(layer_count, dataset, cfg, nonce=0):
    """Train a fresh target network full-batch and return its final training MSE."""
    return train_target(layer_count, dataset, cfg, nonce)[1]


class TargetEnv:
    """Binds a dataset and config; memoizes ``evaluate`` per (layer, nonce).

    ``evaluate`` is deterministic in its arguments, so the cache only skips
    recomputation and never changes results.
    """

    def __init__(self, dataset, cfg=None):
        self.dataset = dataset
        self.cfg = cfg or EnvConfig()
        self.layer_max = self.cfg.layer_max
        self._cache = {}

    def evaluate(self, layer_count, nonce=0):
        key = (int(layer_count), nonce)
        if key not in self._cache:
            self._cache[key] = evaluate(layer_count, self.dataset, self.cfg, nonce)
        return self._cache[key]

    def clear_cache(self):
        self._cache.clear()
