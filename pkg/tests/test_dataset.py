import math

import numpy as np
import pytest

from ensreg.dataset import (
    Dataset,
    Standardizer,
    load_csv,
    standardize_apply,
    standardize_fit,
    synth_generate,
    train_test_split,
    write_csv,
)
from ensreg.errors import (
    DimensionMismatch,
    EmptyDataset,
    InvalidFraction,
    MissingFile,
    MissingTargetColumn,
    NonNumericCell,
    TooFewRows,
    UnknownKind,
)


def _toy(n=10, m=3, seed=0):
    rng = np.random.default_rng(seed)
    return Dataset(rng.normal(size=(n, m)), rng.normal(size=n),
                   tuple(f"f{i}" for i in range(m)), "y")


def test_dataset_validation():
    with pytest.raises(EmptyDataset):
        Dataset(np.ones((1, 2)), np.ones(1), ("a", "b"), "y")
    with pytest.raises(DimensionMismatch):
        Dataset(np.ones((3, 2)), np.ones(4), ("a", "b"), "y")
    with pytest.raises(DimensionMismatch):
        Dataset(np.ones((3, 2)), np.ones(3), ("a",), "y")
    with pytest.raises(EmptyDataset):
        Dataset(np.array([[1.0], [np.nan]]), np.ones(2), ("a",), "y")
    d = _toy()
    assert not d.features.flags.writeable
    assert not d.targets.flags.writeable


def test_load_csv_basic(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("a,b,y\n1,2,3\n4,5,6\n", encoding="utf-8")
    d = load_csv(str(path), "y")
    assert d.n == 2 and d.m == 2
    assert d.feature_names == ("a", "b")
    assert d.target_name == "y"
    np.testing.assert_allclose(d.features, [[1, 2], [4, 5]])
    np.testing.assert_allclose(d.targets, [3, 6])


def test_load_csv_target_position_irrelevant(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("y,a,b\n3,1,2\n6,4,5\n", encoding="utf-8")
    d = load_csv(str(path), "y")
    assert d.feature_names == ("a", "b")
    np.testing.assert_allclose(d.features, [[1, 2], [4, 5]])
    np.testing.assert_allclose(d.targets, [3, 6])


def test_load_csv_errors(tmp_path):
    with pytest.raises(MissingFile):
        load_csv(str(tmp_path / "absent.csv"), "y")
    p = tmp_path / "bad_target.csv"
    p.write_text("a,b\n1,2\n3,4\n", encoding="utf-8")
    with pytest.raises(MissingTargetColumn):
        load_csv(str(p), "y")
    p = tmp_path / "bad_cell.csv"
    p.write_text("a,y\n1,2\noops,4\n", encoding="utf-8")
    with pytest.raises(NonNumericCell) as exc:
        load_csv(str(p), "y")
    assert exc.value.row == 2
    assert exc.value.column == "a"
    p = tmp_path / "one_row.csv"
    p.write_text("a,y\n1,2\n", encoding="utf-8")
    with pytest.raises(EmptyDataset):
        load_csv(str(p), "y")
    p = tmp_path / "ragged.csv"
    p.write_text("a,y\n1,2\n1,2,3\n", encoding="utf-8")
    with pytest.raises(DimensionMismatch):
        load_csv(str(p), "y")


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    d = Dataset(
        rng.normal(scale=[1e-8, 1.0, 1e8], size=(20, 3)),
        rng.normal(size=20) * math.pi,
        ("a", "b", "c"),
        "y",
    )
    path = str(tmp_path / "rt.csv")
    write_csv(d, path)
    back = load_csv(path, "y")
    # 17 significant digits reproduce doubles exactly
    np.testing.assert_array_equal(back.features, d.features)
    np.testing.assert_array_equal(back.targets, d.targets)
    assert back.feature_names == d.feature_names


def test_split_sizes_and_partition():
    d = _toy(n=10)
    pair = train_test_split(d, 0.2, seed=7)
    assert pair.test.n == 2 and pair.train.n == 8
    # the two sides together are exactly the original rows
    all_rows = np.vstack([pair.train.features, pair.test.features])
    original = d.features[np.lexsort(d.features.T)]
    recombined = all_rows[np.lexsort(all_rows.T)]
    np.testing.assert_array_equal(original, recombined)

    big = _toy(n=4177, m=2, seed=1)
    pair = train_test_split(big, 0.2, seed=0)
    assert pair.test.n == math.ceil(4177 * 0.2) == 836
    assert pair.train.n == 3341


def test_split_determinism():
    d = _toy(n=50)
    a = train_test_split(d, 0.3, seed=123)
    b = train_test_split(d, 0.3, seed=123)
    np.testing.assert_array_equal(a.train.features, b.train.features)
    np.testing.assert_array_equal(a.test.targets, b.test.targets)
    c = train_test_split(d, 0.3, seed=124)
    assert not np.array_equal(a.test.features, c.test.features)


def test_split_errors():
    d = _toy(n=10)
    for frac in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(InvalidFraction):
            train_test_split(d, frac, seed=0)
    with pytest.raises(TooFewRows):
        train_test_split(_toy(n=4), 0.05, seed=0)  # test side would get 1 row
    with pytest.raises(TooFewRows):
        train_test_split(_toy(n=4), 0.9, seed=0)  # train side would get 0 rows


def test_standardizer_hand_traced():
    d = Dataset(np.array([[1.0], [2.0], [3.0]]), np.zeros(3), ("a",), "y")
    s = standardize_fit(d)
    out = standardize_apply(s, d)
    expected = np.array([-1.224744871391589, 0.0, 1.224744871391589])
    np.testing.assert_allclose(out.features[:, 0], expected, atol=1e-9)
    np.testing.assert_array_equal(out.targets, d.targets)


def test_standardizer_constant_column():
    X = np.column_stack([np.full(5, 3.0), np.arange(5.0)])
    s = Standardizer.from_features(X)
    out = s.transform(X)
    np.testing.assert_array_equal(out[:, 0], np.zeros(5))
    assert abs(out[:, 1].mean()) <= 1e-12


def test_standardizer_population_moments():
    rng = np.random.default_rng(11)
    X = rng.normal(loc=5.0, scale=3.0, size=(40, 4))
    s = Standardizer.from_features(X)
    out = s.transform(X)
    assert np.abs(out.mean(axis=0)).max() <= 1e-9
    # population (divide by n) std
    assert np.abs(out.std(axis=0) - 1.0).max() <= 1e-9
    with pytest.raises(DimensionMismatch):
        s.transform(np.ones((3, 5)))


def test_synth_determinism_and_kinds():
    for kind in ("linear", "friedman1", "piecewise"):
        a = synth_generate(kind, 50, 4, 0.5, seed=9)
        b = synth_generate(kind, 50, 4, 0.5, seed=9)
        np.testing.assert_array_equal(a.features, b.features)
        np.testing.assert_array_equal(a.targets, b.targets)
        c = synth_generate(kind, 50, 4, 0.5, seed=10)
        assert not np.array_equal(a.targets, c.targets)
    with pytest.raises(UnknownKind):
        synth_generate("mystery", 50, 4, 0.5, seed=0)


def test_synth_linear_is_linear():
    d = synth_generate("linear", 200, 5, 0.0, seed=21)
    # noise-free linear data is fit exactly by least squares
    A = np.column_stack([np.ones(d.n), d.features])
    beta, *_ = np.linalg.lstsq(A, d.targets, rcond=None)
    np.testing.assert_allclose(A @ beta, d.targets, atol=1e-9)


def test_synth_friedman_small_m():
    # m below five drops the missing terms instead of failing
    for m in (1, 2, 3, 4, 5, 7):
        d = synth_generate("friedman1", 60, m, 0.0, seed=2)
        assert d.m == m
        assert np.isfinite(d.targets).all()
    d1 = synth_generate("friedman1", 60, 2, 0.0, seed=2)
    X = d1.features
    np.testing.assert_allclose(
        d1.targets, 10.0 * np.sin(np.pi * X[:, 0] * X[:, 1]), atol=1e-12
    )


def test_synth_piecewise_closed_form():
    d = synth_generate("piecewise", 200, 2, 0.1, seed=3)
    clean = synth_generate("piecewise", 200, 2, 0.0, seed=3)
    np.testing.assert_array_equal(d.features, clean.features)
    X = clean.features
    expected = 3.0 * (X[:, 0] > 0.0) + 2.0 * (X[:, 1] > -0.5)
    np.testing.assert_allclose(clean.targets, expected, atol=1e-12)
    assert np.isfinite(d.targets).all()
    # noise is N(0, 0.1): stay within a generous envelope of the clean range
    assert np.abs(d.targets - clean.targets).max() <= 0.1 * 6.0


def test_synth_extra_friedman_columns_inert():
    a = synth_generate("friedman1", 100, 5, 0.0, seed=4)
    b = synth_generate("friedman1", 100, 9, 0.0, seed=4)
    # same seed: the surface depends only on the first five columns
    ya = 10*np.sin(np.pi*a.features[:,0]*a.features[:,1]) + 20*(a.features[:,2]-.5)**2 \
        + 10*a.features[:,3] + 5*a.features[:,4]
    yb = 10*np.sin(np.pi*b.features[:,0]*b.features[:,1]) + 20*(b.features[:,2]-.5)**2 \
        + 10*b.features[:,3] + 5*b.features[:,4]
    np.testing.assert_allclose(a.targets, ya, atol=1e-12)
    np.testing.assert_allclose(b.targets, yb, atol=1e-12)
