import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from depthtune.data import (SupervisedDataset, load_boston, load_csv, load_iris, normalize,
                            split, take_rows, take_top, write_csv)


def test_boston_shape():
    ds = load_boston()
    assert ds.features.shape == (506, 13) and ds.targets.shape == (506,)
    assert "MEDV" not in ds.column_names


def test_iris_labels_are_encoded():
    ds = load_iris()
    assert ds.features.shape == (150, 4)
    assert set(np.unique(ds.targets)) == {0.0, 1.0, 2.0}


def test_minimal_csv(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("a,b\n1,2\n")
    ds = load_csv(p, "b")
    assert ds.features.tolist() == [[1.0]] and ds.targets.tolist() == [2.0]


def test_csv_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_csv(tmp_path / "missing.csv")
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n1,2\nx,3\n")
    with pytest.raises(ValueError, match="row 3, column 1"):
        load_csv(p, "b")
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError, match="not found"):
        load_csv(p, "c")
    p.write_text("a,b\n1,\n")
    with pytest.raises(ValueError):
        load_csv(p, "a")


def test_take_top():
    ds = load_boston()
    assert take_top(ds, 100).n_rows == 100
    assert np.array_equal(take_top(ds, ds.n_rows).features, ds.features)
    assert take_top(ds, 1).n_rows == 1
    for k in (0, 507):
        with pytest.raises(ValueError):
            take_top(ds, k)
    assert np.array_equal(take_top(take_top(ds, 50), 20).features, take_top(ds, 20).features)


def test_take_rows():
    ds = load_boston()
    assert np.array_equal(take_rows(ds, 100, 200).features, ds.features[100:200])


def test_normalize_examples():
    ds = SupervisedDataset(np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]]), np.zeros(3))
    out, stats = normalize(ds)
    assert np.allclose(out.features[:, 0], [-1.224744871391589, 0, 1.224744871391589])
    assert stats.std[0] == pytest.approx(0.816496580927726)
    assert not np.any(out.features[:, 1])
    assert np.array_equal(out.targets, ds.targets)
    again, _ = normalize(out)
    assert np.allclose(again.features, out.features, atol=1e-12)


def test_split_examples():
    ds = SupervisedDataset(np.arange(20.0).reshape(10, 2), np.arange(10.0))
    tr, te = split(ds, 0.2, 3)
    assert (tr.n_rows, te.n_rows) == (8, 2)
    tr2, te2 = split(ds, 0.2, 3)
    assert np.array_equal(te.features, te2.features)
    both = np.sort(np.concatenate([tr.targets, te.targets]))
    assert np.array_equal(both, ds.targets)
    for f in (0.0, 1.0):
        with pytest.raises(ValueError):
            split(ds, f, 0)


finite = st.floats(-1e6, 1e6, allow_nan=False)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 30), st.integers(1, 5)), elements=finite))
def test_normalized_columns_are_standard(x):
    out, stats = normalize(SupervisedDataset(x, np.zeros(x.shape[0])))
    for j in range(x.shape[1]):
        col = out.features[:, j]
        if stats.std[j] > 1e-6 * max(1.0, np.abs(x[:, j]).max()):
            assert abs(col.mean()) < 1e-9 and abs(col.std() - 1) < 1e-9
        elif stats.std[j] == 0:
            assert not np.any(col)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 60), st.floats(0.05, 0.95), st.integers(0, 2**32 - 1))
def test_split_partitions(n, frac, seed):
    ds = SupervisedDataset(np.arange(n, dtype=float)[:, None], np.arange(n, dtype=float))
    if not 1 <= round(n * frac) < n:
        with pytest.raises(ValueError):
            split(ds, frac, seed)
        return
    tr, te = split(ds, frac, seed)
    assert sorted(tr.targets.tolist() + te.targets.tolist()) == list(range(n))


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 10), st.integers(1, 4)),
              elements=st.floats(-1e300, 1e300, allow_nan=False)))
def test_csv_round_trip(tmp_path_factory, x):
    path = tmp_path_factory.mktemp("rt") / "d.csv"
    ds = SupervisedDataset(x, x[:, 0] * 0.5)
    write_csv(ds, path)
    back = load_csv(path, "target")
    assert np.array_equal(back.features, ds.features) and np.array_equal(back.targets, ds.targets)
