import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twinview.dataio import (
    Dataset,
    MultiviewDataset,
    kfold,
    load_csv,
    load_multiview_csvs,
    make_blobs,
    make_second_view,
    pca_apply,
    pca_fit,
    prepare_bundles,
    prepare_split,
    read_bundle,
    split_70_30,
    standardize,
    train_size,
    write_dataset_csv,
)
from twinview.errors import ConfigError, DimensionError, IngestError, ViewMismatchError

FIXTURE_12x4 = np.array([
    [1.0, 2.0, 0.5, -1.0],
    [1.5, 2.5, 0.25, -0.5],
    [2.0, 1.0, 0.75, -1.5],
    [0.5, 3.0, 1.0, -2.0],
    [1.25, 2.25, 0.0, -1.25],
    [2.5, 1.5, 0.5, -0.75],
    [-1.0, -2.0, -0.5, 1.0],
    [-1.5, -2.5, -0.25, 0.5],
    [-2.0, -1.0, -0.75, 1.5],
    [-0.5, -3.0, -1.0, 2.0],
    [-1.25, -2.25, 0.0, 1.25],
    [-2.5, -1.5, -0.5, 0.75],
])


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadCsv:
    def test_zero_one_labels_mapped(self, tmp_path):
        p = _write(tmp_path / "a.csv", "x,y,label\n1,2,0\n3,4,1\n5,6,0\n")
        ds = load_csv(p)
        np.testing.assert_array_equal(ds.y, [-1, 1, -1])
        np.testing.assert_array_equal(ds.X, [[1, 2], [3, 4], [5, 6]])
        assert ds.name == "a"

    def test_ragged_row_names_row(self, tmp_path):
        p = _write(tmp_path / "a.csv", "x,y,label\n1,2,0\n3,1\n5,6,1\n")
        with pytest.raises(IngestError, match="row 3"):
            load_csv(p)

    def test_non_numeric_cell(self, tmp_path):
        p = _write(tmp_path / "a.csv", "x,label\n1,1\nabc,0\n")
        with pytest.raises(IngestError, match="row 3"):
            load_csv(p)

    def test_bad_label(self, tmp_path):
        p = _write(tmp_path / "a.csv", "x,label\n1,1\n2,2\n")
        with pytest.raises(IngestError, match="row 3"):
            load_csv(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(IngestError):
            load_csv(tmp_path / "nope.csv")

    def test_named_label_column(self, tmp_path):
        p = _write(tmp_path / "a.csv", "cls,x,y\n1,1,2\n-1,3,4\n")
        ds = load_csv(p, "cls")
        np.testing.assert_array_equal(ds.y, [1, -1])
        np.testing.assert_array_equal(ds.X, [[1, 2], [3, 4]])

    def test_shipped_fixture(self, data_dir):
        ds = load_csv(data_dir / "fixture_12x4.csv")
        np.testing.assert_array_equal(ds.X, FIXTURE_12x4)
        np.testing.assert_array_equal(ds.y, [1] * 6 + [-1] * 6)

    def test_multiview_files(self, tmp_path):
        a = _write(tmp_path / "a.csv", "x,label\n1,1\n2,0\n")
        b = _write(tmp_path / "b.csv", "u,v,label\n1,1,1\n2,2,0\n")
        mv = load_multiview_csvs([a, b])
        assert mv.n_views == 2 and [v.shape[1] for v in mv.views] == [1, 2]
        c = _write(tmp_path / "c.csv", "x,label\n1,0\n2,0\n")
        with pytest.raises(IngestError):
            load_multiview_csvs([a, c])

    def test_csv_round_trip(self, tmp_path, rng):
        ds = Dataset(rng.normal(size=(5, 3)), np.array([1, -1, 1, 1, -1]), "r")
        write_dataset_csv(tmp_path / "r.csv", ds)
        back = load_csv(tmp_path / "r.csv")
        np.testing.assert_array_equal(back.X, ds.X)
        np.testing.assert_array_equal(back.y, ds.y)


class TestDatasetTypes:
    def test_non_finite_rejected(self):
        with pytest.raises(IngestError):
            Dataset(np.array([[1.0], [np.nan]]), np.array([1, -1]))

    def test_view_rows_must_agree(self):
        with pytest.raises(ViewMismatchError):
            MultiviewDataset((np.ones((3, 1)), np.ones((4, 1))), np.array([1, -1, 1]))


class TestStandardize:
    def test_constant_column_zero(self, rng):
        tr = np.column_stack([np.full(6, 4.0), rng.normal(size=6)])
        a, b, mean, std = standardize(tr, tr[:2])
        np.testing.assert_array_equal(a[:, 0], 0.0)
        assert std[0] == 1.0

    def test_train_mean_zero(self, rng):
        a, _, _, _ = standardize(rng.normal(5, 3, size=(40, 4)), rng.normal(size=(3, 4)))
        assert np.max(np.abs(a.mean(axis=0))) <= 1e-10

    def test_test_uses_train_statistics(self, rng):
        tr, te = rng.normal(2, 3, size=(20, 3)), rng.normal(size=(5, 3))
        _, te2, mean, std = standardize(tr, te)
        np.testing.assert_array_equal(te2, (te - tr.mean(axis=0)) / tr.std(axis=0))
        np.testing.assert_array_equal(te2, (te - mean) / std)

    def test_column_mismatch(self, rng):
        with pytest.raises(DimensionError):
            standardize(rng.normal(size=(4, 2)), rng.normal(size=(4, 3)))


class TestPca:
    def test_rank_one(self, rng):
        v = np.array([1.0, -2.0, 0.5])
        X = np.outer(rng.normal(size=20), v) + np.array([3.0, 1.0, -1.0])
        t = pca_fit(X)
        assert t.rank == 1
        assert t.explained_ratio[0] == pytest.approx(1.0, abs=1e-12)

    def test_isotropic_needs_both(self):
        X = np.random.default_rng(7).normal(size=(500, 2))
        t = pca_fit(X, 0.95)
        assert t.rank == 2
        assert all(abs(r - 0.5) < 0.1 for r in t.explained_ratio)

    def test_full_threshold_keeps_rank(self, rng):
        X = rng.normal(size=(10, 3)) @ rng.normal(size=(3, 5))
        assert pca_fit(X, 1.0).rank == 3

    def test_orthonormal_and_descending(self, rng):
        X = rng.normal(size=(50, 6)) * np.array([5, 3, 2, 1, 0.5, 0.1])
        t = pca_fit(X, 0.99)
        C = t.components
        assert np.max(np.abs(C @ C.T - np.eye(t.rank))) <= 1e-8
        assert np.all(np.diff(t.explained_ratio) <= 0)
        assert 0 <= t.explained_ratio.sum() <= 1 + 1e-12

    def test_smallest_r_reaching_threshold(self, rng):
        X = rng.normal(size=(200, 5)) * np.array([10, 5, 1, 0.5, 0.1])
        t = pca_fit(X, 0.95)
        s = np.linalg.svd(X - X.mean(axis=0), compute_uv=False) ** 2
        cum = np.cumsum(s) / s.sum()
        expected = int(np.argmax(cum >= 0.95)) + 1
        assert t.rank == expected

    def test_non_finite(self):
        with pytest.raises(IngestError):
            pca_fit(np.array([[1.0, np.inf], [0.0, 1.0]]))

    def test_apply_mean_to_zero(self, rng):
        X = rng.normal(size=(10, 3))
        t = pca_fit(X, 1.0)
        np.testing.assert_allclose(pca_apply(t, np.tile(t.mean, (4, 1))), 0.0, atol=1e-15)

    def test_scores_decorrelated(self, rng):
        X = rng.normal(size=(40, 4)) @ rng.normal(size=(4, 4))
        t = pca_fit(X, 1.0)
        cov = np.cov(pca_apply(t, X), rowvar=False)
        off = cov - np.diag(np.diag(cov))
        assert np.max(np.abs(off)) <= 1e-8

    def test_full_basis_is_isometry(self, rng):
        X = rng.normal(size=(30, 4))
        t = pca_fit(X, 1.0)
        assert t.rank == 4
        assert np.linalg.norm(pca_apply(t, X)) == pytest.approx(np.linalg.norm(X - X.mean(axis=0)), abs=1e-8)

    def test_apply_dimension_error(self, rng):
        t = pca_fit(rng.normal(size=(5, 3)))
        with pytest.raises(DimensionError):
            pca_apply(t, rng.normal(size=(2, 4)))


class TestSecondView:
    def test_two_views_train_fitted(self, blob_prepared):
        assert blob_prepared.train.n_views == 2 and blob_prepared.test.n_views == 2
        te = blob_prepared.test
        refit = pca_apply(pca_fit(te.views[0], 0.95), te.views[0])
        assert refit.shape == te.views[1].shape
        assert not np.allclose(refit, te.views[1])

    def test_full_threshold_rotation(self, rng):
        tr = Dataset(rng.normal(size=(20, 3)), np.array([1, -1] * 10))
        te = Dataset(rng.normal(size=(6, 3)), np.array([1, -1] * 3))
        mtr, _ = make_second_view(tr, te, 1.0)
        centered = tr.X - tr.X.mean(axis=0)
        assert np.linalg.norm(mtr.views[1]) == pytest.approx(np.linalg.norm(centered), abs=1e-8)
        np.testing.assert_array_equal(mtr.views[0], tr.X)


class TestSplits:
    def test_ten(self):
        plan = split_70_30(10, seed=3)
        assert plan.train_indices.size == 7 and plan.test_indices.size == 3

    def test_deterministic(self):
        a, b = split_70_30(57, 11), split_70_30(57, 11)
        np.testing.assert_array_equal(a.train_indices, b.train_indices)
        np.testing.assert_array_equal(a.test_indices, b.test_indices)
        assert not np.array_equal(a.train_indices, split_70_30(57, 12).train_indices)

    def test_thousand_always_seven_hundred(self):
        for seed in range(100):
            plan = split_70_30(1000, seed)
            assert plan.train_indices.size == 700
            assert np.array_equal(np.sort(np.concatenate([plan.train_indices, plan.test_indices])),
                                  np.arange(1000))

    def test_rounding(self):
        assert [train_size(n) for n in (4, 5, 15, 25, 200)] == [3, 4, 11, 18, 140]

    def test_too_small(self):
        with pytest.raises(ConfigError):
            split_70_30(3, 0)

    def test_stratified_keeps_proportions(self):
        y = np.array([1] * 30 + [-1] * 70)
        plan = split_70_30(100, 5, labels=y, stratify=True)
        assert plan.train_indices.size == 70
        assert (y[plan.train_indices] == 1).sum() == 21

    @settings(max_examples=60, deadline=None)
    @given(n=st.integers(4, 10_000), seed=st.integers(0, 2**63))
    def test_partition_property(self, n, seed):
        plan = split_70_30(n, seed)
        allidx = np.concatenate([plan.train_indices, plan.test_indices])
        assert allidx.size == n and np.array_equal(np.sort(allidx), np.arange(n))
        assert plan.train_indices.size == train_size(n)


class TestKfold:
    def test_ten_by_five(self):
        folds = kfold(range(10), 5, seed=1)
        assert [f.size for f in folds] == [2] * 5

    def test_twenty_three(self):
        assert sorted(f.size for f in kfold(range(23), 5, seed=0)) == [4, 4, 5, 5, 5]

    def test_partition_of_arbitrary_indices(self):
        idx = np.array([40, 3, 17, 8, 99, 21, 5])
        folds = kfold(idx, 3, seed=9)
        joined = np.concatenate(folds)
        assert sorted(joined.tolist()) == sorted(idx.tolist())

    @pytest.mark.parametrize("n, k", [(5, 1), (3, 5)])
    def test_bad_arguments(self, n, k):
        with pytest.raises(ConfigError):
            kfold(range(n), k)

    @settings(max_examples=60, deadline=None)
    @given(n=st.integers(2, 10_000), k=st.integers(2, 20), seed=st.integers(0, 2**32))
    def test_partition_property(self, n, k, seed):
        if n < k:
            return
        folds = kfold(np.arange(n), k, seed)
        sizes = [f.size for f in folds]
        assert max(sizes) - min(sizes) <= 1
        assert np.array_equal(np.sort(np.concatenate(folds)), np.arange(n))


class TestPipeline:
    def test_blob_fixture_shape(self, blob_prepared):
        info = blob_prepared.info
        assert (info["n_train"], info["n_test"]) == (140, 60)
        assert set(info["train_indices"]).isdisjoint(info["test_indices"])
        assert blob_prepared.train.views[0].shape == (140, 2)

    def test_multiview_input_keeps_views(self, rng):
        y = np.array([1, -1] * 10)
        mv = MultiviewDataset((rng.normal(size=(20, 3)), rng.normal(size=(20, 5))), y, "mv")
        prepared = prepare_split(mv, seed=2)
        assert prepared.info["native_views"] is True
        assert [v.shape for v in prepared.train.views] == [(14, 3), (14, 5)]

    def test_bundles_round_trip(self, tmp_path):
        data = make_blobs(40, seed=4)
        manifest = prepare_bundles(data, tmp_path, seed=1)
        on_disk = json.loads((tmp_path / "manifest.json").read_text())
        assert on_disk == manifest
        train = read_bundle(tmp_path / "train")
        direct = prepare_split(data, seed=1)
        for a, b in zip(train.views, direct.train.views):
            np.testing.assert_array_equal(a, b)
        np.testing.assert_array_equal(train.y, direct.train.y)

    def test_manifest_is_reproducible(self, tmp_path):
        data = make_blobs(40, seed=4)
        prepare_bundles(data, tmp_path / "a", seed=1)
        prepare_bundles(data, tmp_path / "b", seed=1)
        for rel in ("manifest.json", "train/view_a.csv", "train/view_b.csv", "test/labels.csv"):
            assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()

    def test_make_blobs_deterministic(self):
        a, b = make_blobs(50, seed=3), make_blobs(50, seed=3)
        np.testing.assert_array_equal(a.X, b.X)
        assert (a.y == 1).sum() == 25
