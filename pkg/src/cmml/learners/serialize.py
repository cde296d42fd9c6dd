"""Versioned JSON persistence for trained models.

The document schema is {"format_version", "kind", "params", "state"}; the
pipeline layer adds its own envelope keys (features, recipe) around this.
Floats go through JSON's shortest round-trip repr, so a reloaded model
reproduces bit-identical predictions.
"""

from __future__ import annotations

import json

import numpy as np

from .adaboost import AdaBoostModel, AdaBoostParams, RoundRecord, Stump
from .cart import CartModel, CartParams, Node
from .gbm import GbmModel, GbmParams
from .kmeans import KmeansModel, KmeansParams
from .knn import KnnModel, KnnParams
from .linear import LinearModel, LogisticModel

FORMAT_VERSION = 1


def _floats(values) -> list:
    return [float(v) for v in np.asarray(values).ravel()]


def _matrix(values) -> list:
    return [[float(v) for v in row] for row in np.asarray(values)]


def model_to_dict(model) -> dict:
    if isinstance(model, LinearModel):
        kind, params, state = "linear", {}, {
            "weights": _floats(model.weights), "bias": model.bias,
        }
    elif isinstance(model, LogisticModel):
        kind = "logistic"
        params = {"threshold": model.threshold}
        state = {"weights": _floats(model.weights), "bias": model.bias}
    elif isinstance(model, CartModel):
        kind = "cart"
        params = {
            "max_depth": model.params.max_depth,
            "min_samples_leaf": model.params.min_samples_leaf,
            "impurity": model.params.impurity,
        }
        state = {
            "tree": model.root.to_dict(),
            "classes": None if model.classes is None else _floats(model.classes),
            "n_features": model.n_features,
        }
    elif isinstance(model, AdaBoostModel):
        kind = "adaboost"
        params = {"rounds": model.params.rounds, "seed": model.params.seed}
        state = {
            "stumps": [
                {
                    "feature": r.stump.feature,
                    "threshold": r.stump.threshold,
                    "left_label": r.stump.left_label,
                    "right_label": r.stump.right_label,
                    "alpha": r.alpha,
                    "error": r.error,
                }
                for r in model.rounds
            ]
        }
    elif isinstance(model, GbmModel):
        kind = "gbm"
        params = {
            "n_trees": model.params.n_trees,
            "max_depth": model.params.max_depth,
            "learning_rate": model.params.learning_rate,
            "task": model.params.task,
        }
        state = {"init": model.init, "trees": [t.root.to_dict() for t in model.trees]}
    elif isinstance(model, KnnModel):
        kind = "knn"
        params = {"k": model.params.k, "minkowski_p": model.params.minkowski_p}
        state = {
            "X": _matrix(model.X),
            "y": _floats(model.y),
            "feature_weights": _floats(model.feature_weights),
        }
    elif isinstance(model, KmeansModel):
        kind = "kmeans"
        params = {
            "k": model.params.k,
            "epsilon": model.params.epsilon,
            "max_iters": model.params.max_iters,
            "seed": model.params.seed,
            "minkowski_p": model.params.minkowski_p,
        }
        state = {"centroids": _matrix(model.centroids), "iterations": model.iterations}
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return {"format_version": FORMAT_VERSION, "kind": kind, "params": params, "state": state}


def model_from_dict(doc: dict):
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version!r}")
    kind = doc["kind"]
    params = doc["params"]
    state = doc["state"]
    if kind == "linear":
        return LinearModel(np.array(state["weights"], dtype=float), state["bias"])
    if kind == "logistic":
        return LogisticModel(
            np.array(state["weights"], dtype=float), state["bias"], params["threshold"]
        )
    if kind == "cart":
        classes = state["classes"]
        return CartModel(
            Node.from_dict(state["tree"]),
            CartParams(**params),
            None if classes is None else np.array(classes),
            state.get("n_features", 0),
        )
    if kind == "adaboost":
        rounds = tuple(
            RoundRecord(
                Stump(s["feature"], s["threshold"], s["left_label"], s["right_label"]),
                s["alpha"],
                s["error"],
            )
            for s in state["stumps"]
        )
        return AdaBoostModel(rounds, AdaBoostParams(**params))
    if kind == "gbm":
        gbm_params = GbmParams(**params)
        trees = tuple(
            CartModel(
                Node.from_dict(t),
                CartParams(max_depth=gbm_params.max_depth, impurity="squared"),
                None,
            )
            for t in state["trees"]
        )
        return GbmModel(state["init"], trees, gbm_params)
    if kind == "knn":
        return KnnModel(
            np.array(state["X"], dtype=float),
            np.array(state["y"]),
            KnnParams(**params),
            np.array(state["feature_weights"], dtype=float),
        )
    if kind == "kmeans":
        return KmeansModel(
            np.array(state["centroids"], dtype=float), KmeansParams(**params),
            state.get("iterations", 0), (),
        )
    raise ValueError(f"unknown model kind {kind!r}")


def model_to_json(model, indent: int = 2) -> str:
    return json.dumps(model_to_dict(model), indent=indent, sort_keys=True)


def model_from_json(text: str):
    return model_from_dict(json.loads(text))
