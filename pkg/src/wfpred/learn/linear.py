"""L2-regularized logistic regression and least-squares LDA."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, log_expit

from ..errors import ContractError, ConvergenceWarning

log = logging.getLogger(__name__)


def logistic_loss(params, X, y, C):
    """Mean negative log-likelihood plus ||w||^2 / (2 C n); intercept is last.

    Dividing the usual ``C * sum(loss) + ||w||^2 / 2`` objective by ``C n``
    leaves the minimizer unchanged and keeps gradient tolerances scale-free.
    """
    w, b = params[:-1], params[-1]
    n = X.shape[0]
    z = X @ w + b
    s = 2.0 * y - 1.0
    return -np.mean(log_expit(s * z)) + (w @ w) / (2.0 * C * n)


def logistic_gradient(params, X, y, C):
    w, b = params[:-1], params[-1]
    n = X.shape[0]
    z = X @ w + b
    resid = expit(z) - y  # d(-log p(y|z))/dz
    grad = np.empty_like(params)
    grad[:-1] = X.T @ resid / n + w / (C * n)
    grad[-1] = resid.mean()
    return grad


@dataclass
class LogisticModel:
    coef: np.ndarray
    intercept: float
    grad_norm: float = 0.0
    n_iter: int = 0
    loss_history: list = field(default_factory=list, repr=False)

    def decision_function(self, X):
        return np.asarray(X, dtype=np.float64) @ self.coef + self.intercept

    def predict_proba(self, X):
        return expit(self.decision_function(X))

    def predict(self, X):
        return (self.predict_proba(X) > 0.5).astype(np.int8)

    def to_dict(self):
        return {"coef": self.coef.tolist(), "intercept": float(self.intercept),
                "grad_norm": float(self.grad_norm), "n_iter": int(self.n_iter)}

    @classmethod
    def from_dict(cls, doc):
        return cls(np.asarray(doc["coef"], dtype=np.float64), float(doc["intercept"]),
                   float(doc.get("grad_norm", 0.0)), int(doc.get("n_iter", 0)))


def fit_logistic(X, y, C=0.1, tol=1e-6, max_iter=1000) -> LogisticModel:
    """Minimize the L2-regularized logistic loss with L-BFGS.

    Converged means the largest gradient component is at most ``tol``;
    otherwise a :class:`ConvergenceWarning` is issued.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if C <= 0:
        raise ContractError("C must be positive")
    if len(np.unique(y)) < 2:
        raise ContractError("logistic regression needs both classes in the training data")
    x0 = np.zeros(X.shape[1] + 1)
    history = [logistic_loss(x0, X, y, C)]

    def fun(p):
        return logistic_loss(p, X, y, C), logistic_gradient(p, X, y, C)

    def record(intermediate_result):
        history.append(float(intermediate_result.fun))

    res = minimize(fun, x0, jac=True, method="L-BFGS-B", callback=record,
                   options={"maxiter": max_iter, "gtol": tol, "ftol": 1e-15, "maxcor": 20})
    # max-abs norm: the same measure the optimizer's stopping rule uses
    grad_norm = float(np.abs(logistic_gradient(res.x, X, y, C)).max())
    if grad_norm > tol:
        msg = (f"logistic regression stopped after {res.nit} iterations with gradient "
               f"norm {grad_norm:.3g} > {tol:g} ({res.message})")
        warnings.warn(msg, ConvergenceWarning, stacklevel=2)
        log.warning(msg)
    return LogisticModel(res.x[:-1].copy(), float(res.x[-1]), grad_norm, int(res.nit), history)


@dataclass
class LDAModel:
    coef: np.ndarray  # (2, d): per-class discriminant coefficients
    intercept: np.ndarray  # (2,)
    priors: np.ndarray

    def decision_function(self, X):
        scores = np.asarray(X, dtype=np.float64) @ self.coef.T + self.intercept
        return scores[:, 1] - scores[:, 0]

    def predict_proba(self, X):
        return expit(self.decision_function(X))

    def predict(self, X):
        return (self.decision_function(X) > 0).astype(np.int8)

    def to_dict(self):
        return {"coef": self.coef.tolist(), "intercept": self.intercept.tolist(),
                "priors": self.priors.tolist()}

    @classmethod
    def from_dict(cls, doc):
        return cls(np.asarray(doc["coef"], dtype=np.float64),
                   np.asarray(doc["intercept"], dtype=np.float64),
                   np.asarray(doc["priors"], dtype=np.float64))


def fit_lda(X, y) -> LDAModel:
    """Pooled-covariance discriminant solved by least squares.

    Each class's coefficients solve ``Sigma @ coef = mean`` in the
    least-squares sense, so the singular covariance of one-hot blocks is fine.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    classes = np.unique(y)
    if classes.size < 2:
        raise ContractError("LDA needs both classes in the training data")
    n = X.shape[0]
    means = np.stack([X[y == k].mean(axis=0) for k in (0, 1)])
    priors = np.array([np.mean(y == k) for k in (0, 1)])
    centered = X - means[y.astype(np.int64)]
    sigma = centered.T @ centered / n
    # C order, as after a reload: the memory layout changes BLAS summation order
    coef = np.ascontiguousarray(np.linalg.lstsq(sigma, means.T, rcond=None)[0].T)
    intercept = -0.5 * np.einsum("kd,kd->k", means, coef) + np.log(priors)
    return LDAModel(coef, intercept, priors)
