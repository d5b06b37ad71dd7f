import json

import numpy as np
import pytest

from oracles import gauss_solve
from twinview.dataio import MultiviewDataset
from twinview.errors import ConfigError, DegenerateClassError, ModelFormatError, ViewMismatchError
from twinview.kernels import KernelSpec, multiview_gram
from twinview.mvrkm import (
    MvrkmModel,
    assemble_system,
    decision_function,
    fit_mvrkm,
    predict_mvrkm,
)

RBF = KernelSpec.rbf(1.0)


def _data(rng, n=20, dims=(2, 3)):
    y = np.where(np.arange(n) % 2 == 0, 1, -1)
    views = tuple(rng.normal(size=(n, d)) + 1.5 * y[:, None] for d in dims)
    return MultiviewDataset(views, y)


class TestFit:
    def test_solution_matches_full_matrix_oracle(self, rng):
        data = _data(rng, 12)
        model = fit_mvrkm(data, 0.7, 0.3, RBF)
        K = multiview_gram(data.views, data.views, RBF)
        system = assemble_system(K, data.y, 2, 0.7, 0.3)
        ref = gauss_solve(system.full_matrix().tolist(), system.full_rhs().tolist())
        np.testing.assert_allclose(np.append(model.z, model.b), ref, rtol=1e-9, atol=1e-12)
        assert system.residual(model.z, model.b) <= 1e-8

    def test_block_layout(self, rng):
        data = _data(rng, 6, dims=(2,))
        K = multiview_gram(data.views, data.views, RBF)
        system = assemble_system(K, data.y, 1, 2.0, 0.5)
        np.testing.assert_allclose(system.core, K / 2.0 + 0.5 * np.eye(6), rtol=1e-15)
        np.testing.assert_array_equal(system.rhs_top, data.y.astype(float))
        assert system.rhs_bottom == 0.0

    def test_second_block_row(self, rng):
        data = _data(rng, 30)
        model = fit_mvrkm(data, 1.0, 0.01, RBF)
        assert abs(2 * model.z.sum()) <= 1e-6 * 30

    def test_large_lambda_shrinks_z(self, rng):
        data = _data(rng, 25)
        model = fit_mvrkm(data, 1.0, 1e6, RBF)
        V, N = 2, 25
        assert np.linalg.norm(model.z) <= 2 * V * np.sqrt(N) / 1e6 * (1 + 1e-3)

    def test_training_accuracy_on_blobs(self, blob_prepared):
        tr = blob_prepared.train
        model = fit_mvrkm(tr, 1.0, 1e-3, RBF)
        assert np.mean(predict_mvrkm(model, tr.views) == tr.y) >= 0.95

    def test_test_accuracy_on_blobs(self, blob_prepared):
        model = fit_mvrkm(blob_prepared.train, 1.0, 1e-2, RBF)
        te = blob_prepared.test
        assert np.mean(predict_mvrkm(model, te.views) == te.y) >= 0.95

    def test_single_class_rejected(self, rng):
        data = MultiviewDataset((rng.normal(size=(5, 2)),), np.ones(5, dtype=int))
        with pytest.raises(DegenerateClassError):
            fit_mvrkm(data, 1.0, 1.0, RBF)

    @pytest.mark.parametrize("eta, lam", [(0.0, 1.0), (1.0, -1.0), (float("inf"), 1.0)])
    def test_bad_penalties(self, rng, eta, lam):
        with pytest.raises(ConfigError):
            fit_mvrkm(_data(rng), eta, lam, RBF)


class TestPredict:
    def test_constant_score(self, rng):
        X = rng.normal(size=(4, 2))
        model = MvrkmModel(np.zeros(4), 1.0, (X,), np.array([1, -1, 1, -1]), 1.0, 1.0, RBF)
        np.testing.assert_array_equal(predict_mvrkm(model, [rng.normal(size=(6, 2))]), np.ones(6))

    def test_tie_goes_positive(self, rng):
        X = rng.normal(size=(2, 2))
        model = MvrkmModel(np.zeros(2), 0.0, (X,), np.array([1, -1]), 1.0, 1.0, RBF)
        np.testing.assert_array_equal(predict_mvrkm(model, [X]), [1, 1])

    def test_duplicated_views_with_doubled_eta(self, rng):
        # Doubling V, the Gram sum and eta leaves the core unchanged while the
        # border and right-hand side double, so z doubles and b is unchanged.
        data = _data(rng, 16)
        dup = MultiviewDataset(data.views * 2, data.y)
        base = fit_mvrkm(data, 0.5, 0.2, RBF)
        twin = fit_mvrkm(dup, 1.0, 0.2, RBF)
        np.testing.assert_allclose(twin.z, 2 * base.z, rtol=1e-8, atol=1e-12)
        assert twin.b == pytest.approx(base.b, abs=1e-8)
        Xq = [rng.normal(size=(5, 2)), rng.normal(size=(5, 3))]
        s_base = decision_function(base, Xq)
        s_twin = decision_function(twin, Xq * 2)
        np.testing.assert_allclose(s_twin - twin.b, 2 * (s_base - base.b), rtol=1e-8, atol=1e-10)

    def test_score_superposition(self, rng):
        data = _data(rng, 10)
        Xq = [rng.normal(size=(4, 2)), rng.normal(size=(4, 3))]
        z1, z2 = rng.normal(size=10), rng.normal(size=10)
        mk = lambda z, b: MvrkmModel(z, b, data.views, data.y, 0.8, 1.0, RBF)  # noqa: E731
        lhs = decision_function(mk(2 * z1 + 3 * z2, 2 * 0.5 + 3 * -1.0), Xq)
        rhs = 2 * decision_function(mk(z1, 0.5), Xq) + 3 * decision_function(mk(z2, -1.0), Xq)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12)

    def test_view_mismatch(self, rng):
        model = fit_mvrkm(_data(rng), 1.0, 1.0, RBF)
        with pytest.raises(ViewMismatchError):
            predict_mvrkm(model, [rng.normal(size=(3, 2))])
        with pytest.raises(ViewMismatchError):
            predict_mvrkm(model, [rng.normal(size=(3, 2)), rng.normal(size=(3, 4))])


class TestSerialization:
    def test_round_trip(self, rng):
        model = fit_mvrkm(_data(rng, 8), 0.3, 0.9, KernelSpec.rbf(0.6))
        back = MvrkmModel.from_dict(json.loads(json.dumps(model.to_dict())))
        assert np.array_equal(back.z, model.z) and back.b == model.b
        Xq = [rng.normal(size=(3, 2)), rng.normal(size=(3, 3))]
        np.testing.assert_array_equal(decision_function(back, Xq), decision_function(model, Xq))

    def test_wrong_type(self):
        with pytest.raises(ModelFormatError):
            MvrkmModel.from_dict({"model_type": "tmvrkm"})

    def test_truncated_coefficients(self, rng):
        doc = fit_mvrkm(_data(rng, 8), 1.0, 1.0, RBF).to_dict()
        doc["z"] = doc["z"][:-1]
        with pytest.raises(ModelFormatError):
            MvrkmModel.from_dict(doc)
