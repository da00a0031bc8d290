"""Ridge regression from mechanical properties to Gaussian cluster parameters."""

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_sample, check_samples

N_FEATURES_EXPANDED = 14
_IU = np.triu_indices(4)


def feature_map(X):
    """Linear terms followed by the 10 upper-triangular quadratic products.

    Order: k, v, p, f, k*k, k*v, k*p, k*f, v*v, v*p, v*f, p*p, p*f, f*f.
    Accepts a single sample (4,) or a batch (n, 4).
    """
    X = np.asarray(X, dtype=np.float64)
    quad = X[..., _IU[0]] * X[..., _IU[1]]
    return np.concatenate([X, quad], axis=-1)


def ridge_solve(A, T, lam):
    """Solve ``W (A A^T + lam I) = T A^T`` for ``W``.

    ``A`` is (K, M) with one design column per sample, ``T`` is (D, M).
    Uses a Cholesky factorisation of the symmetric system, falling back to
    least squares when rounding leaves it numerically indefinite.
    """
    A = np.asarray(A, dtype=np.float64)
    T = np.atleast_2d(np.asarray(T, dtype=np.float64))
    if A.ndim != 2 or A.shape[1] != T.shape[1]:
        raise ValueError("A must be (K, M) and T must be (D, M)")
    if A.shape[1] < 1:
        raise ValueError("need at least one column")
    if lam < 0:
        raise ValueError("regularisation must be non-negative")
    G = A @ A.T + lam * np.eye(A.shape[0])
    rhs = A @ T.T
    try:
        W_t = scipy.linalg.cho_solve(scipy.linalg.cho_factor(G), rhs)
    except np.linalg.LinAlgError:
        # rounding can break definiteness when lam is tiny next to A A^T
        if lam == 0 and np.linalg.matrix_rank(G) < G.shape[0]:
            raise np.linalg.LinAlgError(
                "singular normal equations with lam=0; use a positive regularisation"
            ) from None
        W_t = scipy.linalg.lstsq(G, rhs)[0]
    return W_t.T


class ClusterParamRegressor(RegressorMixin, BaseEstimator):
    """Predict a Gaussian cluster (mean, diagonal variance) from one sample.

    Each training sample is expanded with :func:`feature_map` and regressed
    onto its class's mean and variance, so a novel sample yields a guess
    of the cluster it came from.

    Parameters
    ----------
    lambda_mu, lambda_var : float, default=1e-3
        Ridge penalties for the mean and variance weight matrices.
    standardize : bool, default=False
        Divide each expanded feature by its root-mean-square over the
        training set before solving, so the ridge penalty weighs all
        features alike.
    var_floor : float, default=1e-9
        Lower bound on predicted variances as a multiple of the per-feature
        variance of the training samples.
    class_var_floor : bool, default=True
        Also floor predicted variances at the smallest per-feature variance
        of any training class. Unconstrained regression can predict
        variances near zero or negative, which would give a degenerate
        cluster that no later sample can join.
    """

    def __init__(
        self, lambda_mu=1e-3, lambda_var=1e-3, standardize=False, var_floor=1e-9, class_var_floor=True
    ):
        self.lambda_mu = lambda_mu
        self.lambda_var = lambda_var
        self.standardize = standardize
        self.var_floor = var_floor
        self.class_var_floor = class_var_floor

    def _design(self, X):
        F = feature_map(X)
        if self.standardize:
            F = F / self.feature_scale_
        return F

    def fit(self, X, y):
        X = check_samples(X)
        y = np.asarray(y)
        classes = np.unique(y)
        means = np.zeros_like(X)
        variances = np.zeros_like(X)
        class_vars = []
        for c in classes:
            rows = y == c
            if rows.sum() < 2:
                raise ValueError(f"class {c} has fewer than 2 training samples")
            means[rows] = X[rows].mean(axis=0)
            class_vars.append(X[rows].var(axis=0, ddof=1))
            variances[rows] = class_vars[-1]

        # rescale without centring: the model has no intercept term
        scale = np.sqrt((feature_map(X) ** 2).mean(axis=0))
        self.feature_scale_ = np.where(scale > 0, scale, 1.0)
        A = self._design(X).T
        self.coef_mu_ = ridge_solve(A, means.T, self.lambda_mu)
        self.coef_var_ = ridge_solve(A, variances.T, self.lambda_var)
        floor = self.var_floor * X.var(axis=0)
        floor = np.where(floor > 0, floor, self.var_floor)
        if self.class_var_floor:
            floor = np.maximum(floor, np.min(class_vars, axis=0))
        self.variance_floor_ = floor
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        """Regression-predicted class means, shape (n_samples, 4)."""
        check_is_fitted(self, "coef_mu_")
        return self._design(check_samples(X)) @ self.coef_mu_.T

    def predict_variance(self, X):
        """Raw (unfloored) predicted class variances."""
        check_is_fitted(self, "coef_var_")
        return self._design(check_samples(X)) @ self.coef_var_.T

    def predict_cluster_params(self, x, alpha, beta):
        """Centre and variance of a new cluster seeded by sample ``x``.

        The centre interpolates between the predicted mean (``alpha=0``)
        and ``x`` itself (``alpha=1``); the variance is the predicted
        variance scaled by ``beta`` and floored.
        """
        x = check_sample(x)
        if not 0 <= alpha <= 1:
            raise ValueError("alpha must lie in [0, 1]")
        if beta < 0:
            raise ValueError("beta must be non-negative")
        a = self._design(x[None, :])[0]
        mu = (1 - alpha) * (self.coef_mu_ @ a) + alpha * x
        var = beta * (self.coef_var_ @ a)
        return mu, np.maximum(var, self.variance_floor_)
