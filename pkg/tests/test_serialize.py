import json

import numpy as np
import pytest

from cmml.learners import (
    AdaBoostParams,
    CartParams,
    GbmParams,
    GDConfig,
    KmeansParams,
    KnnParams,
    fit_adaboost,
    fit_cart,
    fit_gbm,
    fit_knn,
    fit_linear,
    fit_logistic,
    kmeans,
    model_from_json,
    model_to_json,
)


@pytest.fixture(scope="module")
def data():
    rng = np.random.default_rng(77)
    X = rng.normal(0, 1, (50, 3))
    y = (X[:, 0] - 0.5 * X[:, 2] > 0).astype(int)
    return X, y


def fitted_models(X, y):
    return {
        "linear": fit_linear(X, X[:, 0] * 2 + 1, GDConfig(step_size=0.1, max_iters=300)),
        "logistic": fit_logistic(X, y, GDConfig(step_size=0.5, max_iters=300)),
        "cart": fit_cart(X, y, CartParams(max_depth=4)),
        "adaboost": fit_adaboost(X, 2 * y - 1, AdaBoostParams(rounds=6, seed=1)),
        "gbm": fit_gbm(X, y.astype(float), GbmParams(n_trees=12, max_depth=2, task="binary")),
        "knn": fit_knn(X, y, KnnParams(k=3)),
        "kmeans": kmeans(X, KmeansParams(k=3, seed=2)),
    }


def predictions(kind, model, X):
    if kind == "kmeans":
        return model.assign(X)
    if kind in ("logistic", "gbm"):
        return model.predict_proba(X)
    return model.predict(X)


@pytest.mark.parametrize(
    "kind", ["linear", "logistic", "cart", "adaboost", "gbm", "knn", "kmeans"]
)
def test_roundtrip_bit_identical_predictions(kind, data):
    X, y = data
    model = fitted_models(X, y)[kind]
    restored = model_from_json(model_to_json(model))
    queries = np.random.default_rng(5).normal(0, 2, (100, 3))
    assert np.array_equal(predictions(kind, model, queries), predictions(kind, restored, queries))


def test_document_schema(data):
    X, y = data
    doc = json.loads(model_to_json(fit_cart(X, y, CartParams(max_depth=2))))
    assert set(doc) == {"format_version", "kind", "params", "state"}
    assert doc["kind"] == "cart"


def test_unknown_version_rejected(data):
    X, y = data
    doc = json.loads(model_to_json(fit_cart(X, y, CartParams(max_depth=2))))
    doc["format_version"] = 99
    with pytest.raises(ValueError, match="version"):
        model_from_json(json.dumps(doc))


def test_serialization_is_deterministic(data):
    X, y = data
    a = fitted_models(X, y)["gbm"]
    b = fitted_models(X, y)["gbm"]
    assert model_to_json(a) == model_to_json(b)
