"""Convolutional regressor from an encoded dataset to a layer-count estimate."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import SupervisedDataset, column_stats, apply_stats, split, take_top
from .nn import init_network, load_network, mse_grad, save_network
from .seeding import derive_seed

GRID_ROWS = 100
GRID_COLS = 13


@dataclass(frozen=True)
class EncodedDataset:
    grid: np.ndarray  # (1, GRID_ROWS, GRID_COLS)
    row_count: int
    col_count: int


def encode_dataset(raw, normalize=True, rows=GRID_ROWS, cols=GRID_COLS, row_fill="zero"):
    """Place the first ``rows`` x ``cols`` block of features into a zero grid.

    With ``normalize`` the kept block is z-scored column by column
    (population std; constant columns become 0). ``row_fill="tile"`` fills
    the rows below a short dataset by repeating its rows cyclically instead
    of leaving zeros; unused columns are always zero.
    """
    if row_fill not in ("zero", "tile"):
        raise ValueError(f"row_fill must be 'zero' or 'tile', got {row_fill!r}")
    feats = raw.features if isinstance(raw, SupervisedDataset) else np.asarray(raw, float)
    if feats.ndim != 2 or feats.shape[0] < 1 or feats.shape[1] < 1:
        raise ValueError("cannot encode an empty dataset")
    r, c = min(feats.shape[0], rows), min(feats.shape[1], cols)
    block = feats[:r, :c]
    if normalize:
        block = apply_stats(block, column_stats(block))
    grid = np.zeros((1, rows, cols))
    grid[0, :r, :c] = block
    if row_fill == "tile" and r < rows:
        grid[0, r:, :c] = block[np.arange(rows - r) % r]
    return EncodedDataset(grid, r, c)


def fmodel_specs(channels=(8, 16, 32), hidden=(64, 16), rows=GRID_ROWS, cols=GRID_COLS,
                 conv_activation="relu"):
    specs, in_ch, h, w = [], 1, rows, cols
    for ch in channels:
        specs.append({"kind": "conv", "in_channels": in_ch, "out_channels": ch,
                      "kernel": [3, 3], "stride": 1, "padding": 1,
                      "activation": conv_activation})
        specs.append({"kind": "maxpool", "window": [2, 2], "stride": [2, 2]})
        in_ch, h, w = ch, h // 2, w // 2
    flat = in_ch * h * w
    for width in hidden:
        specs.append({"kind": "dense", "in": flat, "out": width, "activation": "relu"})
        flat = width
    specs.append({"kind": "dense", "in": flat, "out": 1, "activation": "identity"})
    return specs


class FModel:
    """Three conv/pool stages and three dense layers ending in one real output."""

    def __init__(self, seed=0, lr=1e-3, net=None, channels=(8, 16, 32), hidden=(64, 16),
                 conv_activation="relu"):
        self.net = net if net is not None else init_network(
            (1, GRID_ROWS, GRID_COLS), fmodel_specs(channels, hidden,
                                                    conv_activation=conv_activation),
            seed, lr=lr)

    @staticmethod
    def _stack(encodings):
        if isinstance(encodings, EncodedDataset):
            encodings = [encodings]
        return np.stack([e.grid for e in encodings])

    def predict(self, encodings):
        """Unrounded layer estimate; a scalar for one encoding, else an array."""
        out = self.net.forward(self._stack(encodings), cache=False)[:, 0]
        return float(out[0]) if isinstance(encodings, EncodedDataset) else out

    def init_layer(self, encoding, layer_max):
        return int(min(max(round(self.predict(encoding)), 1), layer_max))

    def update(self, encodings, targets, steps):
        """Run ``steps`` Adam steps on the MSE to ``targets``; return the final loss.

        The returned loss is measured after the last step.
        """
        if steps < 1:
            raise ValueError("steps must be at least 1")
        x = self._stack(encodings)
        y = np.broadcast_to(np.asarray(targets, dtype=np.float64), (x.shape[0],))[:, None]
        for _ in range(steps):
            pred = self.net.forward(x)
            self.net.step(self.net.backward(mse_grad(pred, y)))
        return float(np.mean((self.net.forward(x, cache=False) - y) ** 2))

    def save(self, path):
        save_network(self.net, path)

    @classmethod
    def load(cls, path):
        return cls(net=load_network(path))


@dataclass
class PretrainRow:
    dataset: str
    target: float
    initial: float
    train: float
    test: float


@dataclass
class PretrainReport:
    rows: list = field(default_factory=list)

    def for_dataset(self, name):
        return [r for r in self.rows if r.dataset == name]


def pretrain_experiment(datasets, targets, epochs=300, *, names=None, top_k=100,
                        test_fraction=0.2, normalize=True, row_fill="tile", seed=0,
                        model=None):
    """Train one F model on each target in turn, carrying weights forward.

    Every dataset is cut to its first ``top_k`` rows and split train/test;
    each split is encoded separately. All train encodings form one batch.
    """
    targets = list(targets)
    if not targets:
        raise ValueError("at least one target is required")
    if not datasets:
        raise ValueError("at least one dataset is required")
    names = list(names) if names else [f"dataset{i}" for i in range(len(datasets))]
    model = model or FModel(seed=derive_seed(seed, "fmodel"))
    train_enc, test_enc = [], []
    for i, ds in enumerate(datasets):
        ds = take_top(ds, min(top_k, ds.n_rows))
        tr, te = split(ds, test_fraction, derive_seed(seed, "split", i))
        train_enc.append(encode_dataset(tr, normalize, row_fill=row_fill))
        test_enc.append(encode_dataset(te, normalize, row_fill=row_fill))

    report = PretrainReport()
    for target in targets:
        initial = model.predict(train_enc)
        model.update(train_enc, float(target), epochs)
        train_pred, test_pred = model.predict(train_enc), model.predict(test_enc)
        for j, name in enumerate(names):
            report.rows.append(PretrainRow(name, float(target), float(initial[j]),
                                           float(train_pred[j]), float(test_pred[j])))
    return report, model
