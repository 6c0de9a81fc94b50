import io

import numpy as np
import pytest

from lcit.data import (
    DataError,
    Dataset,
    clip_quantiles,
    load_csv,
    preprocess,
    split,
    split_indices,
    standardize,
    write_csv,
)


def _write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def _random(seed=0, n=200, d=3):
    rng = np.random.default_rng(seed)
    return Dataset(rng.normal(2, 3, n), rng.exponential(size=n), rng.normal(-1, 0.5, (n, d)))


def test_load_three_rows(tmp_path):
    p = _write(tmp_path, "x,y,z1\n1,2,3\n4,5,6\n7,8,9.5\n")
    ds = load_csv(p, "x", "y", ["z1"])
    assert (ds.n, ds.d) == (3, 1)
    assert ds.z[2, 0] == 9.5
    assert ds.z_names == ("z1",)


def test_load_without_z(tmp_path):
    p = _write(tmp_path, "a,x,y\n0,1,2\n0,3,4\n")
    ds = load_csv(p, "x", "y", [])
    assert ds.d == 0 and ds.z.shape == (2, 0)
    np.testing.assert_array_equal(ds.y, [2.0, 4.0])


def test_nan_cell_reports_coordinates(tmp_path):
    p = _write(tmp_path, "x,y,z1\n1,2,3\n4,NaN,6\n")
    with pytest.raises(DataError, match=r"row 3, column 'y'"):
        load_csv(p, "x", "y", ["z1"])


def test_unparseable_and_empty_cells(tmp_path):
    with pytest.raises(DataError, match="cannot parse 'abc'"):
        load_csv(_write(tmp_path, "x,y\n1,abc\n"), "x", "y")
    with pytest.raises(DataError, match="missing value at row 2"):
        load_csv(_write(tmp_path, "x,y\n1,\n", "e.csv"), "x", "y")


def test_missing_column_named(tmp_path):
    p = _write(tmp_path, "x,y\n1,2\n")
    with pytest.raises(DataError, match="w7"):
        load_csv(p, "x", "y", ["w7"])


def test_write_then_load_roundtrip(tmp_path):
    ds = _random(1, n=20, d=2)
    write_csv(ds, tmp_path / "r.csv")
    back = load_csv(tmp_path / "r.csv", "x", "y", ["z1", "z2"])
    np.testing.assert_array_equal(back.columns(), ds.columns())
    buf = io.StringIO()
    write_csv(ds, buf)
    assert buf.getvalue() == (tmp_path / "r.csv").read_text(encoding="utf-8")


def test_dataset_shape_checks():
    with pytest.raises(DataError):
        Dataset(np.zeros(3), np.zeros(4), np.zeros((3, 1)))
    with pytest.raises(DataError):
        Dataset(np.zeros(3), np.zeros(3), np.zeros((3, 2)), z_names=("a",))


def test_standardize_two_points():
    ds = standardize(Dataset([0.0, 2.0], [1.0, 5.0], np.array([[3.0], [-3.0]])))
    np.testing.assert_array_equal(ds.x, [-1.0, 1.0])
    np.testing.assert_array_equal(ds.y, [-1.0, 1.0])
    np.testing.assert_array_equal(ds.z[:, 0], [1.0, -1.0])
    assert ds.standardized and not ds.clipped


def test_standardize_moments_and_idempotence():
    ds = standardize(_random(2))
    mat = ds.columns()
    assert np.max(np.abs(mat.mean(axis=0))) <= 1e-10
    assert np.max(np.abs(mat.var(axis=0) - 1)) <= 1e-10
    np.testing.assert_allclose(standardize(ds).columns(), mat, atol=1e-10, rtol=0)


def test_standardize_affine_invariance():
    ds = _random(3)
    moved = Dataset(5 * ds.x - 2, 0.1 * ds.y + 9, 3 * ds.z + 1)
    np.testing.assert_allclose(standardize(moved).columns(), standardize(ds).columns(),
                               atol=1e-10, rtol=0)


def test_standardize_constant_column():
    ds = Dataset([1.0, 2.0, 3.0], [4.0, 4.0, 4.0], np.empty((3, 0)))
    with pytest.raises(DataError, match="y"):
        standardize(ds)


def test_clip_inside_band_unchanged():
    # with 41 evenly spaced points the band is [x[1], x[39]]
    x = np.linspace(-1, 1, 41)
    ds = Dataset(x, x[::-1], np.empty((41, 0)))
    out = clip_quantiles(ds)
    np.testing.assert_array_equal(out.x[1:40], x[1:40])


def test_clip_single_outlier():
    rng = np.random.default_rng(4)
    x = rng.standard_normal(1000)
    x[17] = 100.0
    out = clip_quantiles(Dataset(x, rng.standard_normal(1000), np.empty((1000, 0))))
    # order-statistic oracle: position 0.975 * (n - 1) interpolated between neighbours
    s = np.sort(x)
    pos = 0.975 * 999
    lo = int(np.floor(pos))
    oracle = s[lo] + (pos - lo) * (s[lo + 1] - s[lo])
    assert out.x[17] == pytest.approx(oracle, abs=1e-12)
    assert out.x.max() == pytest.approx(oracle, abs=1e-12)


@pytest.mark.parametrize("method", ["nearest", "lower", "higher"])
def test_clip_idempotent_with_order_statistics(method):
    once = clip_quantiles(_random(5), method=method)
    twice = clip_quantiles(once, method=method)
    np.testing.assert_array_equal(twice.columns(), once.columns())


def test_linear_clip_second_pass_only_touches_tails():
    raw = _random(5)
    once = clip_quantiles(raw)
    twice = clip_quantiles(once)
    moved = twice.columns() != once.columns()
    inner = (once.columns() > np.quantile(raw.columns(), 0.03, axis=0)) & \
        (once.columns() < np.quantile(raw.columns(), 0.97, axis=0))
    assert not np.any(moved & inner)
    # drift is bounded by the gap between neighbouring order statistics
    s = np.sort(raw.columns(), axis=0)
    gap = np.max(np.diff(s[[4, 5, -6, -5]], axis=0)[[0, 2]])
    assert np.max(np.abs(twice.columns() - once.columns())) <= gap


def test_clip_bad_band():
    with pytest.raises(DataError):
        clip_quantiles(_random(), 0.9, 0.1)


def test_preprocess_order():
    ds = _random(6)
    default = preprocess(ds)
    manual = clip_quantiles(standardize(ds))
    np.testing.assert_array_equal(default.columns(), manual.columns())
    assert default.standardized and default.clipped
    other = preprocess(ds, order="clip-standardize")
    assert np.max(np.abs(other.columns().var(axis=0) - 1)) <= 1e-10
    with pytest.raises(DataError):
        preprocess(ds, order="shuffle")


def test_split_sizes_and_partition():
    tr, va = split_indices(10, 0.3, seed=0)
    assert (len(tr), len(va)) == (7, 3)
    assert sorted(np.concatenate([tr, va]).tolist()) == list(range(10))
    assert np.intersect1d(tr, va).size == 0


def test_split_seeded():
    a = split_indices(100, seed=5)
    b = split_indices(100, seed=5)
    c = split_indices(100, seed=6)
    assert all(np.array_equal(u, v) for u, v in zip(a, b))
    assert not np.array_equal(a[1], c[1])


def test_split_dataset():
    ds = _random(7, n=50)
    tr, va = split(ds, seed=1)
    assert (tr.n, va.n) == (35, 15)
    assert sorted(np.concatenate([tr.x, va.x]).tolist()) == sorted(ds.x.tolist())


def test_split_too_small():
    with pytest.raises(DataError):
        split_indices(3, 0.3)
    with pytest.raises(DataError):
        split_indices(10, 1.0)
