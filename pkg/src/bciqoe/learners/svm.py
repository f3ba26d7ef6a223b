"""One-vs-rest linear SVM trained by minibatch SGD on the hinge loss."""

from __future__ import annotations

import numpy as np

from ..base import ParamMixin, check_array


class LinearSvm(ParamMixin):
    """Multiclass linear scorer: per-class hinge loss, L2-regularized SGD.

    Before the first fit it acts as a uniform-random predictor.
    """

    def __init__(self, n_classes=4, lr=0.05, reg=1e-4, epochs=3, batch=64, seed=0):
        self.n_classes = n_classes
        self.lr = lr
        self.reg = reg
        self.epochs = epochs
        self.batch = batch
        self.seed = seed

    def fit(self, X, y):
        X = check_array(X, "X", ndim=2)
        y = np.asarray(y, dtype=np.int64)
        if len(X) == 0:
            return self
        if len(X) != len(y):
            raise ValueError("X and y length mismatch")
        rng = np.random.default_rng(self.seed)
        n, d = X.shape
        self.coef_ = np.zeros((d, self.n_classes))
        self.intercept_ = np.zeros(self.n_classes)
        targets = np.where(y[:, None] == np.arange(self.n_classes)[None, :], 1.0, -1.0)
        for _ in range(self.epochs):
            order = rng.permutation(n)
            for lo in range(0, n, self.batch):
                idx = order[lo : lo + self.batch]
                xb, tb = X[idx], targets[idx]
                scores = xb @ self.coef_ + self.intercept_
                violating = (1.0 - tb * scores) > 0.0
                gs = -(tb * violating) / len(idx)
                self.coef_ -= self.lr * (xb.T @ gs + self.reg * self.coef_)
                self.intercept_ -= self.lr * gs.sum(axis=0)
        return self

    @property
    def fitted(self):
        return hasattr(self, "coef_")

    def decision_function(self, X):
        if not self.fitted:
            raise RuntimeError("SVM is not fitted")
        return np.asarray(X, dtype=np.float64) @ self.coef_ + self.intercept_

    def predict(self, X):
        X = np.asarray(X, dtype=np.float64)
        if not self.fitted:
            if not hasattr(self, "_fallback_rng"):
                self._fallback_rng = np.random.default_rng(self.seed)
            return self._fallback_rng.integers(0, self.n_classes, size=len(X))
        return np.argmax(self.decision_function(X), axis=1)

    def predict_proba(self, X):
        """Softmax over margins: a proper distribution with the SVM's argmax."""
        X = np.asarray(X, dtype=np.float64)
        if not self.fitted:
            return np.full((len(X), self.n_classes), 1.0 / self.n_classes)
        scores = self.decision_function(X)
        e = np.exp(scores - scores.max(axis=1, keepdims=True))
        return e / e.sum(axis=1, keepdims=True)
