import numpy as np
import pytest
from sklearn.pipeline import make_pipeline
from sklearn.utils.estimator_checks import check_estimator

from depthtune.data import load_boston, load_iris, take_top
from depthtune.estimators import (DatasetEncoder, DepthSearchRegressor, FModelRegressor,
                                  ZScoreScaler)

FAST = dict(episodes=1, steps=1, train_iters=300, lr=1e-2, nodes_per_layer=16, fmodel_steps=1,
            init_layer=2)


def test_scaler_passes_sklearn_checks():
    check_estimator(ZScoreScaler())


def test_depth_search_passes_sklearn_checks():
    check_estimator(DepthSearchRegressor(**FAST))


def test_depth_search_pipeline():
    ds = take_top(load_boston(), 100)
    model = make_pipeline(ZScoreScaler(), DepthSearchRegressor(
        episodes=2, steps=3, train_iters=20, nodes_per_layer=16))
    model.fit(ds.features, ds.targets)
    search = model[-1]
    assert 1 <= search.best_layer_ <= 15 and len(search.episodes_) == 2
    assert model.predict(ds.features).shape == (100,)
    params = search.get_params()
    assert params["episodes"] == 2 and params["layer_max"] == 15


def test_fmodel_regressor_on_encoded_tables():
    tables = [take_top(load_boston(), 100).features, take_top(load_iris(), 100).features]
    grids = DatasetEncoder(row_fill="tile").fit_transform(tables)
    assert grids.shape == (2, 1, 100, 13)
    reg = FModelRegressor(epochs=200).fit(grids, [3.0, 3.0])
    assert np.all(np.abs(reg.predict(grids) - 3.0) < 0.5)
    assert reg.predict_layers(grids).tolist() == [3, 3]


def test_fmodel_regressor_validates_input():
    with pytest.raises(ValueError):
        FModelRegressor(epochs=1).fit(np.zeros((2, 5, 5)), [1.0, 2.0])
    with pytest.raises(ValueError):
        FModelRegressor(epochs=1).fit(np.zeros((2, 100, 13)), [1.0])
