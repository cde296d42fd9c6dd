"""From-scratch learning algorithms and their shared numeric utilities."""

from .losses import (
    LossKind,
    absolute_loss,
    cross_entropy_loss,
    entropy_impurity,
    gini,
    hinge_loss,
    huber_loss,
    loss,
    squared_loss,
    weighted_impurity,
)
from .gradient_descent import DivergenceError, GDConfig, GDResult, gradient_descent
from .linear import (
    LinearModel,
    LogisticModel,
    fit_linear,
    fit_logistic,
    linear_value_and_grad,
    logistic_value_and_grad,
    sigmoid,
)
from .cart import CartModel, CartParams, Node, Split, find_best_split, fit_cart
from .adaboost import (
    AdaBoostModel,
    AdaBoostParams,
    RoundRecord,
    Stump,
    fit_adaboost,
    fit_stump,
    weighted_error,
)
from .gbm import GbmModel, GbmParams, fit_gbm
from .knn import KnnModel, KnnParams, fit_knn
from .kmeans import KmeansModel, KmeansParams, kmeans
from .serialize import model_from_dict, model_from_json, model_to_dict, model_to_json

__all__ = [
    "LossKind", "absolute_loss", "cross_entropy_loss", "entropy_impurity", "gini",
    "hinge_loss", "huber_loss", "loss", "squared_loss", "weighted_impurity",
    "DivergenceError", "GDConfig", "GDResult", "gradient_descent",
    "LinearModel", "LogisticModel", "fit_linear", "fit_logistic",
    "linear_value_and_grad", "logistic_value_and_grad", "sigmoid",
    "CartModel", "CartParams", "Node", "Split", "find_best_split", "fit_cart",
    "AdaBoostModel", "AdaBoostParams", "RoundRecord", "Stump", "fit_adaboost",
    "fit_stump", "weighted_error",
    "GbmModel", "GbmParams", "fit_gbm",
    "KnnModel", "KnnParams", "fit_knn",
    "KmeansModel", "KmeansParams", "kmeans",
    "model_from_dict", "model_from_json", "model_to_dict", "model_to_json",
]
