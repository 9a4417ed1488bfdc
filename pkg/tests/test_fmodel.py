import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from depthtune.data import load_boston, load_iris, take_top
from depthtune.fmodel import FModel, encode_dataset, pretrain_experiment


def test_boston_fills_grid():
    enc = encode_dataset(take_top(load_boston(), 100))
    assert enc.grid.shape == (1, 100, 13) and (enc.row_count, enc.col_count) == (100, 13)
    assert np.count_nonzero(enc.grid) > 0.9 * 1300


def test_iris_pads_columns():
    enc = encode_dataset(take_top(load_iris(), 100))
    assert not np.any(enc.grid[0, :, 4:])


def test_constant_column_encodes_to_zero():
    x = np.column_stack([np.arange(10.0), np.full(10, 3.0)])
    assert not np.any(encode_dataset(x).grid[0, :, 1])


def test_tile_fill_repeats_rows():
    x = np.arange(6.0).reshape(3, 2)
    grid = encode_dataset(x, normalize=False, row_fill="tile").grid[0]
    assert np.array_equal(grid[3:6, :2], x) and np.array_equal(grid[99, :2], x[99 % 3])
    zero = encode_dataset(x, normalize=False).grid[0]
    assert not np.any(zero[3:])


def test_empty_dataset_rejected():
    with pytest.raises(ValueError):
        encode_dataset(np.zeros((0, 3)))


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 120), st.integers(1, 16)),
              elements=st.floats(-1e3, 1e3, allow_nan=False)))
def test_encoding_invariants(x):
    enc = encode_dataset(x)
    r, c = enc.row_count, enc.col_count
    block = enc.grid[0, :r, :c]
    for j in range(c):
        col = x[:r, j]
        if col.std() > 1e-6 * max(1.0, np.abs(col).max()):
            assert abs(block[:, j].mean()) < 1e-9 and abs(block[:, j].std() - 1) < 1e-9
    assert not np.any(enc.grid[0, r:, :]) and not np.any(enc.grid[0, :, c:])


class Fixed(FModel):
    def __init__(self, value):
        self.value = value

    def predict(self, encodings):
        return self.value


@pytest.mark.parametrize("pred,expected", [(2.263, 2), (-4.0, 1), (107.63, 15), (7.5, 8)])
def test_init_layer_rounds_and_clamps(pred, expected):
    assert Fixed(pred).init_layer(None, 15) == expected


@settings(max_examples=50)
@given(st.floats(-1e6, 1e6))
def test_init_layer_in_bounds(pred):
    assert 1 <= Fixed(pred).init_layer(None, 15) <= 15


@pytest.fixture(scope="module")
def boston_enc():
    return encode_dataset(take_top(load_boston(), 100))


def test_predict_is_pure(boston_enc):
    model = FModel(seed=0)
    a, b = model.predict(boston_enc), model.predict(boston_enc)
    assert isinstance(a, float) and a == b


def test_update_rejects_zero_steps(boston_enc):
    with pytest.raises(ValueError):
        FModel(seed=0).update(boston_enc, 3.0, 0)


def test_first_step_descends_with_small_lr(boston_enc):
    model = FModel(seed=1, lr=1e-4)
    before = (model.predict(boston_enc) - 5.0) ** 2
    after = model.update(boston_enc, 5.0, 1)
    assert after < before


def test_update_toward_rounded_prediction_is_non_increasing(boston_enc):
    model = FModel(seed=2, lr=1e-6)
    target = float(round(model.predict(boston_enc)))
    losses = [model.update(boston_enc, target, 1) for _ in range(10)]
    assert all(b <= a for a, b in zip(losses, losses[1:]))


def test_single_pair_overfit(boston_enc):
    model = FModel(seed=3)
    for _ in range(40):
        model.update(boston_enc, 9.0, 50)
        if abs(model.predict(boston_enc) - 9.0) < 0.5:
            break
    assert abs(model.predict(boston_enc) - 9.0) < 0.5


def test_zero_target_converges():
    report, model = pretrain_experiment([take_top(load_boston(), 100)], [0], epochs=300)
    assert abs(report.rows[0].test) < 0.5


def test_pretrain_rejects_empty_targets():
    with pytest.raises(ValueError):
        pretrain_experiment([take_top(load_boston(), 100)], [])


def test_save_load_round_trip(tmp_path, boston_enc):
    model = FModel(seed=4)
    model.save(tmp_path / "f.fmdl")
    assert FModel.load(tmp_path / "f.fmdl").predict(boston_enc) == model.predict(boston_enc)
