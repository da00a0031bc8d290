"""End-to-end open-set recogniser: classify knowns, cluster novels online."""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_samples
from .classifier import NOVEL, NoveltyNaiveBayes
from .clusterer import NovelClusterer, RandomClusterParams
from .regressor import ClusterParamRegressor

NOT_NOVEL = 0


@dataclass
class StreamOutcome:
    """Per-sample outputs of one pass over a test stream.

    ``decisions`` holds the known class label or ``NOVEL``; ``clusters``
    holds the final cluster id of novel-routed samples, ``OUTLIER`` for
    those dropped at finalisation and ``NOT_NOVEL`` for the rest.
    """

    decisions: np.ndarray
    clusters: np.ndarray
    max_posterior_error: float
    max_membership_error: float


class OpenSetRecognizer(BaseEstimator):
    """Naive Bayes novelty detector feeding an online novel-object clusterer.

    ``param_source='random'`` swaps the regression-based cluster seeding
    for random parameters (ablation).
    """

    def __init__(
        self,
        quantile=0.01,
        threshold=None,
        alpha=0.4,
        beta=1.5,
        n_gen=40,
        tau_update=15,
        tau_out=3,
        lambda_mu=0.1,
        lambda_var=1.0,
        standardize=True,
        param_source="regression",
        random_state=None,
        trace=False,
    ):
        self.quantile = quantile
        self.threshold = threshold
        self.alpha = alpha
        self.beta = beta
        self.n_gen = n_gen
        self.tau_update = tau_update
        self.tau_out = tau_out
        self.lambda_mu = lambda_mu
        self.lambda_var = lambda_var
        self.standardize = standardize
        self.param_source = param_source
        self.random_state = random_state
        self.trace = trace

    def fit(self, X, y):
        X = check_samples(X)
        cluster_seed, param_seed = np.random.SeedSequence(self.random_state).spawn(2)
        self.classifier_ = NoveltyNaiveBayes(quantile=self.quantile, threshold=self.threshold).fit(X, y)
        if self.param_source == "regression":
            self.param_model_ = ClusterParamRegressor(
                lambda_mu=self.lambda_mu, lambda_var=self.lambda_var, standardize=self.standardize
            ).fit(X, y)
        elif self.param_source == "random":
            self.param_model_ = RandomClusterParams(random_state=param_seed).fit(X, y)
        else:
            raise ValueError(f"unknown param_source {self.param_source!r}")
        self._cluster_seed = cluster_seed
        self.n_features_in_ = X.shape[1]
        return self

    def new_clusterer(self):
        check_is_fitted(self, "classifier_")
        clusterer = NovelClusterer(
            param_model=self.param_model_,
            alpha=self.alpha,
            beta=self.beta,
            n_gen=self.n_gen,
            tau_update=self.tau_update,
            tau_out=self.tau_out,
            n_known=len(self.classifier_.classes_),
            random_state=self._cluster_seed,
            trace=self.trace,
        )
        clusterer._reset()
        return clusterer

    def process(self, X, sample_ids=None):
        """Stream ``X`` in order through detection and clustering.

        The clusterer used is kept as ``clusterer_``.
        """
        X = check_samples(X)
        clf = self.classifier_
        decisions = clf.predict(X)
        proba = clf.predict_proba(X)
        posterior_error = float(np.abs(proba.sum(axis=1) - 1).max()) if len(X) else 0.0

        self.clusterer_ = self.new_clusterer()
        novel_rows = np.flatnonzero(decisions == NOVEL)
        for i in novel_rows:
            sid = sample_ids[i] if sample_ids is not None else int(i)
            self.clusterer_.assign(X[i], sample_id=sid)
        clusters = np.full(len(X), NOT_NOVEL, dtype=np.int64)
        clusters[novel_rows] = self.clusterer_.finalize()
        return StreamOutcome(
            decisions=decisions,
            clusters=clusters,
            max_posterior_error=posterior_error,
            max_membership_error=self.clusterer_.max_prob_error_,
        )
