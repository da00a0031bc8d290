"""Gaussian Naive Bayes over known classes with log-likelihood novelty detection."""

import numpy as np
from scipy.special import logsumexp, softmax
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_samples

NOVEL = -1


def gaussian_log_density(X, means, variances):
    """Per-class diagonal Gaussian log densities, shape (n_samples, n_classes)."""
    diff = X[:, None, :] - means[None, :, :]
    return -0.5 * (
        np.log(2 * np.pi * variances).sum(axis=1)[None, :]
        + (diff**2 / variances[None, :, :]).sum(axis=2)
    )


class NoveltyNaiveBayes(ClassifierMixin, BaseEstimator):
    """Naive Bayes classifier that rejects low-likelihood samples as novel.

    A sample is accepted as known when the log of the equal-weight mixture
    density over all known classes is at least ``threshold_``; it is then
    assigned the class with the highest posterior (class-frequency priors). Otherwise ``predict``
    returns ``NOVEL``.

    Parameters
    ----------
    quantile : float, default=0.01
        Training log-likelihood quantile used as the novelty threshold when
        ``threshold`` is None.
    threshold : float or None, default=None
        Fixed log-likelihood threshold; overrides ``quantile``.
    var_floor : float, default=1e-9
        Variances are floored at ``var_floor`` times the per-feature
        variance of the whole training set.

    Attributes
    ----------
    classes_ : ndarray of shape (n_classes,)
    means_, variances_ : ndarray of shape (n_classes, 4)
    priors_ : ndarray of shape (n_classes,)
    variance_floor_ : ndarray of shape (4,)
    threshold_ : float
    """

    def __init__(self, quantile=0.01, threshold=None, var_floor=1e-9):
        self.quantile = quantile
        self.threshold = threshold
        self.var_floor = var_floor

    def fit(self, X, y):
        X = check_samples(X)
        y = np.asarray(y)
        if len(y) != len(X):
            raise ValueError("X and y have different lengths")
        classes, counts = np.unique(y, return_counts=True)
        if len(classes) < 2:
            raise ValueError("need at least 2 known classes")
        if counts.min() < 2:
            bad = classes[counts.argmin()]
            raise ValueError(f"class {bad} has fewer than 2 training samples")

        self.variance_floor_ = self.var_floor * X.var(axis=0)
        # constant training features would otherwise give a zero floor
        self.variance_floor_ = np.where(self.variance_floor_ > 0, self.variance_floor_, self.var_floor)
        self.classes_ = classes
        self.means_ = np.array([X[y == c].mean(axis=0) for c in classes])
        var = np.array([X[y == c].var(axis=0, ddof=1) for c in classes])
        self.variances_ = np.maximum(var, self.variance_floor_)
        self.priors_ = counts / counts.sum()
        self.n_features_in_ = X.shape[1]

        if self.threshold is not None:
            self.threshold_ = float(self.threshold)
        else:
            self.threshold_ = self.calibrate_threshold(X, self.quantile)
        return self

    def _joint_log(self, X):
        return np.log(self.priors_)[None, :] + gaussian_log_density(X, self.means_, self.variances_)

    def score_samples(self, X):
        """Log of the equal-weight mixture density over the known classes."""
        check_is_fitted(self, "means_")
        dens = gaussian_log_density(check_samples(X), self.means_, self.variances_)
        return logsumexp(dens, axis=1) - np.log(len(self.classes_))

    def predict_log_proba(self, X):
        check_is_fitted(self, "means_")
        joint = self._joint_log(check_samples(X))
        return joint - logsumexp(joint, axis=1, keepdims=True)

    def predict_proba(self, X):
        check_is_fitted(self, "means_")
        return softmax(self._joint_log(check_samples(X)), axis=1)

    def calibrate_threshold(self, X, quantile):
        """Empirical ``quantile`` of the log-likelihood over calibration rows."""
        if not 0 <= quantile < 0.5:
            raise ValueError("quantile must lie in [0, 0.5)")
        ll = self.score_samples(X)
        if ll.size == 0:
            raise ValueError("empty calibration set")
        return float(np.quantile(ll, quantile))

    def is_novel(self, X):
        check_is_fitted(self, "threshold_")
        return self.score_samples(X) < self.threshold_

    def predict(self, X):
        """Class label for accepted samples, ``NOVEL`` for rejected ones."""
        X = check_samples(X)
        known = self.classes_[self.predict_log_proba(X).argmax(axis=1)]
        return np.where(self.is_novel(X), NOVEL, known)
