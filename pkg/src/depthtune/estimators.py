"""scikit-learn compatible wrappers around the depth search and the F model."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, validate_data

from .data import NormStats, SupervisedDataset, apply_stats, column_stats
from .env import EnvConfig, TargetEnv, train_target
from .fmodel import GRID_COLS, GRID_ROWS, EncodedDataset, FModel, encode_dataset
from .harness import train_two_stage
from .rl import ActorCritic, RLConfig
from .seeding import derive_seed


class ZScoreScaler(TransformerMixin, BaseEstimator):
    """Column-wise z-score; constant columns map to 0."""

    def __init__(self, ddof=0):
        self.ddof = ddof

    def fit(self, X, y=None):
        X = validate_data(self, X)
        stats = column_stats(X, self.ddof)
        self.mean_, self.scale_ = stats.mean, stats.std
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_")
        X = validate_data(self, X, reset=False)
        return apply_stats(X, NormStats(self.mean_, self.scale_))


def _grids(X):
    """Accept an EncodedDataset list or a ``(n, rows, cols)`` / ``(n, 1, rows, cols)`` array."""
    if isinstance(X, EncodedDataset):
        X = [X]
    if isinstance(X, (list, tuple)) and X and isinstance(X[0], EncodedDataset):
        return np.stack([e.grid for e in X])
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 3:
        arr = arr[:, None]
    if arr.ndim != 4 or arr.shape[1:] != (1, GRID_ROWS, GRID_COLS):
        raise ValueError(f"expected grids of shape (n, 1, {GRID_ROWS}, {GRID_COLS}), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("grids contain non-finite values")
    return arr


class DatasetEncoder(TransformerMixin, BaseEstimator):
    """Maps a sequence of feature tables to stacked fixed-size grids."""

    def __init__(self, normalize=True, row_fill="zero"):
        self.normalize = normalize
        self.row_fill = row_fill

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        tables = [check_array(t) for t in X]
        return np.stack([encode_dataset(t, self.normalize, row_fill=self.row_fill).grid
                         for t in tables])


class FModelRegressor(RegressorMixin, BaseEstimator):
    """Regresses a layer count from encoded dataset grids."""

    def __init__(self, epochs=300, lr=1e-3, layer_max=15, random_state=0):
        self.epochs = epochs
        self.lr = lr
        self.layer_max = layer_max
        self.random_state = random_state

    def fit(self, X, y):
        grids = _grids(X)
        y = check_array(np.asarray(y, dtype=np.float64), ensure_2d=False)
        if y.shape != (grids.shape[0],):
            raise ValueError("need one target per grid")
        self.model_ = FModel(seed=self.random_state, lr=self.lr)
        self.train_loss_ = self.model_.update(
            [EncodedDataset(g, GRID_ROWS, GRID_COLS) for g in grids], y, self.epochs)
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        return self.model_.net.forward(_grids(X), cache=False)[:, 0]

    def predict_layers(self, X):
        return np.clip(np.rint(self.predict(X)), 1, self.layer_max).astype(int)


class DepthSearchRegressor(RegressorMixin, BaseEstimator):
    """Searches the hidden-layer count of a ReLU regressor, then fits it.

    ``fit`` runs the two-stage loop (controller episodes followed by F-model
    updates) on ``(X, y)``; ``best_layer_`` is the lowest-loss layer count
    seen in the last episode and ``network_`` is trained at that depth.
    """

    def __init__(self, episodes=70, steps=30, init_layer=5, layer_max=15,
                 nodes_per_layer=100, train_iters=100, lr=1e-3, gamma=0.9, epsilon=0.1,
                 buffer_capacity=1000, batch_size=32, actor_lr=1e-3, critic_lr=1e-3,
                 fmodel_steps=50, random_state=0):
        self.episodes = episodes
        self.steps = steps
        self.init_layer = init_layer
        self.layer_max = layer_max
        self.nodes_per_layer = nodes_per_layer
        self.train_iters = train_iters
        self.lr = lr
        self.gamma = gamma
        self.epsilon = epsilon
        self.buffer_capacity = buffer_capacity
        self.batch_size = batch_size
        self.actor_lr = actor_lr
        self.critic_lr = critic_lr
        self.fmodel_steps = fmodel_steps
        self.random_state = random_state

    def fit(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True)
        seed = self.random_state
        env_cfg = EnvConfig(self.nodes_per_layer, self.train_iters, self.lr, self.layer_max,
                            derive_seed(seed, "env"))
        rl_cfg = RLConfig(self.gamma, self.epsilon, self.buffer_capacity, self.batch_size,
                          self.actor_lr, self.critic_lr)
        dataset = SupervisedDataset(X, y)
        env = TargetEnv(dataset, env_cfg)
        self.controller_ = ActorCritic(rl_cfg, derive_seed(seed, "controller"))
        self.fmodel_ = FModel(seed=derive_seed(seed, "fmodel"))
        encoded = encode_dataset(X)

        def start():
            if self.init_layer == "fmodel":
                return self.fmodel_.init_layer(encoded, self.layer_max)
            return min(max(int(self.init_layer), 1), self.layer_max)

        self.episodes_ = train_two_stage(env, self.controller_, self.fmodel_, encoded,
                                         self.episodes, self.steps, self.fmodel_steps, start)
        self.best_layer_ = self.episodes_[-1].best_layer
        self.network_, ev = train_target(self.best_layer_, dataset, env_cfg, nonce="final")
        self.train_loss_ = ev.loss
        return self

    def predict(self, X):
        check_is_fitted(self, "network_")
        X = validate_data(self, X, reset=False)
        return self.network_.forward(X, cache=False)[:, 0]
