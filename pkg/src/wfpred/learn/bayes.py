"""Gaussian naive Bayes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

VAR_SMOOTHING = 1e-9


@dataclass
class GaussianNB:
    priors: np.ndarray  # (2,)
    means: np.ndarray  # (2, d)
    variances: np.ndarray  # (2, d), smoothed

    def joint_log_likelihood(self, X):
        X = np.asarray(X, dtype=np.float64)
        out = np.empty((X.shape[0], 2))
        for k in range(2):
            if self.priors[k] == 0:
                out[:, k] = -np.inf
                continue
            var = self.variances[k]
            ll = -0.5 * np.sum(np.log(2.0 * np.pi * var))
            ll = ll - 0.5 * np.sum((X - self.means[k]) ** 2 / var, axis=1)
            out[:, k] = np.log(self.priors[k]) + ll
        return out

    def posterior(self, X):
        jll = self.joint_log_likelihood(X)
        return np.exp(jll - logsumexp(jll, axis=1, keepdims=True))

    def predict_proba(self, X):
        return self.posterior(X)[:, 1]

    def predict(self, X):
        post = self.posterior(X)
        return (post[:, 1] > post[:, 0]).astype(np.int8)

    def to_dict(self):
        return {"priors": self.priors.tolist(), "means": self.means.tolist(),
                "variances": self.variances.tolist()}

    @classmethod
    def from_dict(cls, doc):
        return cls(*(np.asarray(doc[k], dtype=np.float64) for k in ("priors", "means", "variances")))


def fit_gnb(X, y, var_smoothing=VAR_SMOOTHING) -> GaussianNB:
    """Per-class means and variances with empirical class priors.

    Every variance gets ``var_smoothing * max feature variance`` added so that
    columns constant within a class stay usable. A class absent from ``y``
    gets prior 0 and never wins.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    d = X.shape[1]
    eps = var_smoothing * float(np.var(X, axis=0).max()) if X.size else 0.0
    if eps == 0.0:
        eps = var_smoothing
    priors = np.zeros(2)
    means = np.zeros((2, d))
    variances = np.ones((2, d))
    for k in (0, 1):
        rows = X[y == k]
        if rows.shape[0] == 0:
            continue
        priors[k] = rows.shape[0] / X.shape[0]
        means[k] = rows.mean(axis=0)
        variances[k] = rows.var(axis=0) + eps
    return GaussianNB(priors, means, variances)
