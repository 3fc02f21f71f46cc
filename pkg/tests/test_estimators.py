import doctest

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import FunctionTransformer

import picardo.estimators
from conftest import mixture
from picardo import PicardO, SymmetricFastICA
from picardo.bench.metrics import amari_index

ESTIMATORS = [PicardO, SymmetricFastICA]


@pytest.fixture(scope="module")
def data():
    return mixture(0, n=4, t=5000)


@pytest.mark.parametrize("cls", ESTIMATORS)
class TestEstimator:
    def test_params_and_clone(self, cls):
        est = cls(max_iter=123, tol=1e-6)
        params = est.get_params()
        assert params["max_iter"] == 123 and params["tol"] == 1e-6
        other = clone(est)
        assert other.get_params() == params
        est.set_params(score="cube")
        assert est.score == "cube"

    def test_fit_transform(self, cls, data):
        X = data.x.T
        est = cls()
        S = est.fit_transform(X)
        assert est.converged_ and est.n_iter_ == len(est.trace_) - 1
        np.testing.assert_allclose(S, est.transform(X), atol=1e-8)
        np.testing.assert_allclose(S.T @ S / len(S), np.eye(4), atol=1e-8)
        np.testing.assert_allclose(est.inverse_transform(S), X, atol=1e-8)
        assert amari_index(est.components_ @ data.a_true) < 0.1
        assert est.n_features_in_ == 4

    def test_random_state(self, cls, data):
        a = cls(random_state=0).fit(data.x.T)
        b = cls(random_state=0).fit(data.x.T)
        np.testing.assert_array_equal(a.components_, b.components_)

    def test_not_fitted(self, cls, data):
        with pytest.raises(NotFittedError):
            cls().transform(data.x.T)

    def test_feature_mismatch(self, cls, data):
        est = cls().fit(data.x.T)
        with pytest.raises(ValueError):
            est.transform(data.x.T[:, :3])

    def test_bad_score(self, cls, data):
        with pytest.raises(ValueError):
            cls(score="relu").fit(data.x.T)

    def test_in_pipeline(self, cls, data):
        pipe = make_pipeline(FunctionTransformer(), cls())
        assert pipe.fit_transform(data.x.T).shape == (5000, 4)


def test_docstring_examples():
    result = doctest.testmod(picardo.estimators, verbose=False)
    assert result.attempted > 0 and result.failed == 0
