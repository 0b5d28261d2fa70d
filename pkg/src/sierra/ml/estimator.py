"""Scikit-learn style wrappers over the network core, so the toolkit drops
into pipelines and grid searches like any other estimator."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import network
from .network import TrainConfig


class MlpClassifier(BaseEstimator, ClassifierMixin):
    """Softmax MLP classifier trained with minibatch SGD + momentum."""

    def __init__(
        self,
        hidden_layer_sizes=(8,),
        activation="tanh",
        learning_rate=0.1,
        epochs=200,
        batch_size=32,
        momentum=0.9,
        seed=0,
    ):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.activation = activation
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.momentum = momentum
        self.seed = seed

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise ValueError("need at least two classes")
        sizes = [X.shape[1], *self.hidden_layer_sizes, len(self.classes_)]
        model = network.init_mlp(sizes, self.activation, "classification", self.seed)
        cfg = TrainConfig(
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            batch_size=self.batch_size,
            momentum=self.momentum,
            seed=self.seed,
        )
        self.model_, self.loss_history_ = network.train(model, X, y_idx, cfg)
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X)
        return network.forward(self.model_, X)

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


class MlpRegressor(BaseEstimator, RegressorMixin):
    """Identity-output MLP regressor trained with minibatch SGD + momentum."""

    def __init__(
        self,
        hidden_layer_sizes=(8,),
        activation="tanh",
        learning_rate=0.01,
        epochs=200,
        batch_size=32,
        momentum=0.9,
        seed=0,
    ):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.activation = activation
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.momentum = momentum
        self.seed = seed

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        sizes = [X.shape[1], *self.hidden_layer_sizes, 1]
        model = network.init_mlp(sizes, self.activation, "regression", self.seed)
        cfg = TrainConfig(
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            batch_size=self.batch_size,
            momentum=self.momentum,
            seed=self.seed,
        )
        self.model_, self.loss_history_ = network.train(model, X, y, cfg)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X)
        return network.predict(self.model_, X)
