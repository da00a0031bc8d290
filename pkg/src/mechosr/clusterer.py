"""Online clustering of novel samples with regression-seeded clusters."""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import softmax
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_is_fitted

from ._validation import check_random_state, check_sample, check_samples

OUTLIER = -1


def mahalanobis(x, mu, var):
    """Squared Mahalanobis distance ``(x-mu)^T diag(var)^-1 (x-mu)``.

    No square root is taken. Works row-wise when ``x`` is 2-D.
    """
    var = np.asarray(var, dtype=np.float64)
    if np.any(var <= 0):
        raise ValueError("variance components must be positive")
    diff = np.asarray(x, dtype=np.float64) - mu
    return (diff**2 / var).sum(axis=-1)


@dataclass
class Cluster:
    id: int
    mean: np.ndarray
    variance: np.ndarray
    eta: float
    generated: np.ndarray
    members: list = field(default_factory=list)
    n_updates: int = 0
    since_update: int = 0

    def points(self):
        if not self.members:
            return self.generated
        return np.vstack([self.generated, np.array(self.members)])


class RandomClusterParams(BaseEstimator):
    """Ablation stand-in for :class:`ClusterParamRegressor`.

    Replaces the predicted mean with a point drawn uniformly in the
    training bounding box, and the predicted variance with a per-feature
    draw between the smallest and largest training class variance.
    """

    def __init__(self, random_state=None, var_floor=1e-9):
        self.random_state = random_state
        self.var_floor = var_floor

    def fit(self, X, y):
        X = check_samples(X)
        y = np.asarray(y)
        self.low_, self.high_ = X.min(axis=0), X.max(axis=0)
        var = np.array([X[y == c].var(axis=0, ddof=1) for c in np.unique(y)])
        self.var_low_, self.var_high_ = var.min(axis=0), var.max(axis=0)
        floor = self.var_floor * X.var(axis=0)
        self.variance_floor_ = np.where(floor > 0, floor, self.var_floor)
        self.rng_ = check_random_state(self.random_state)
        return self

    def predict_cluster_params(self, x, alpha, beta):
        check_is_fitted(self, "rng_")
        x = check_sample(x)
        mu = (1 - alpha) * self.rng_.uniform(self.low_, self.high_) + alpha * x
        var = beta * self.rng_.uniform(self.var_low_, self.var_high_)
        return mu, np.maximum(var, self.variance_floor_)


class NovelClusterer(ClusterMixin, BaseEstimator):
    """Incremental clustering of a stream of novel samples.

    A sample joins the most probable existing cluster if it falls inside
    that cluster's boundary; otherwise it seeds a new cluster whose centre
    and variance come from ``param_model``. The boundary is the largest
    squared Mahalanobis distance from the cluster's points to its centre,
    where the points are ``n_gen`` draws from the predicted Gaussian plus
    the real members. Every ``tau_update`` accepted members the centre,
    variance and boundary are re-estimated from that pooled point set.
    :meth:`finalize` drops clusters with fewer than ``tau_out`` members.

    Parameters
    ----------
    param_model : fitted ClusterParamRegressor or RandomClusterParams
    alpha : float, default=0.4
    beta : float, default=1.5
    n_gen : int, default=40
    tau_update : int, default=15
    tau_out : int or float, default=3
    n_known : int, default=0
        Number of known classes; only used by :meth:`offset_labels`.
    random_state : int, Generator or None
    trace : bool, default=False
        Keep one record per assignment in ``trace_``.
    """

    def __init__(
        self,
        param_model=None,
        alpha=0.4,
        beta=1.5,
        n_gen=40,
        tau_update=15,
        tau_out=3,
        n_known=0,
        random_state=None,
        trace=False,
    ):
        self.param_model = param_model
        self.alpha = alpha
        self.beta = beta
        self.n_gen = n_gen
        self.tau_update = tau_update
        self.tau_out = tau_out
        self.n_known = n_known
        self.random_state = random_state
        self.trace = trace

    def _reset(self):
        if not hasattr(self.param_model, "predict_cluster_params"):
            raise ValueError("param_model must provide predict_cluster_params")
        if not hasattr(self.param_model, "variance_floor_"):
            raise NotFittedError("param_model has not been fitted")
        if self.n_gen < 1:
            raise ValueError("n_gen must be >= 1")
        if self.tau_update < 1:
            raise ValueError("tau_update must be >= 1")
        self.clusters_ = []
        self.assignments_ = []
        self.trace_ = []
        self.max_prob_error_ = 0.0
        self.rng_ = check_random_state(self.random_state)
        self.variance_floor_ = self.param_model.variance_floor_

    @property
    def n_clusters_(self):
        return len(self.clusters_)

    def membership_probabilities(self, x):
        """Softmax of ``-d/2`` over the squared distances to every cluster."""
        if not getattr(self, "clusters_", None):
            raise ValueError("no clusters yet; the first sample must create one")
        d = self._distances(check_sample(x))
        return self._probs(d)

    def _distances(self, x):
        means = np.array([c.mean for c in self.clusters_])
        variances = np.array([c.variance for c in self.clusters_])
        return mahalanobis(x, means, variances)

    def _probs(self, d):
        # shift by the max before normalising; exp(l - logsumexp(l)) loses
        # digits when the logits are large
        p = softmax(-0.5 * d)
        self.max_prob_error_ = max(self.max_prob_error_, abs(p.sum() - 1.0))
        return p

    def create_cluster(self, x):
        mu, var = self.param_model.predict_cluster_params(x, self.alpha, self.beta)
        generated = self.rng_.normal(mu, np.sqrt(var), size=(self.n_gen, len(mu)))
        eta = float(max(mahalanobis(generated, mu, var).max(), mahalanobis(x, mu, var)))
        cluster = Cluster(
            id=len(self.clusters_) + 1,
            mean=mu,
            variance=var,
            eta=eta,
            generated=generated,
            members=[x],
            since_update=1,
        )
        self.clusters_.append(cluster)
        self._maybe_update(cluster)
        return cluster

    def _maybe_update(self, cluster):
        if cluster.since_update < self.tau_update:
            return
        pts = cluster.points()
        cluster.mean = pts.mean(axis=0)
        cluster.variance = np.maximum(pts.var(axis=0, ddof=1), self.variance_floor_)
        cluster.eta = float(mahalanobis(pts, cluster.mean, cluster.variance).max())
        cluster.n_updates += 1
        cluster.since_update = 0

    def assign(self, x, sample_id=None):
        """Route one novel sample; returns its (1-based) cluster id."""
        if not hasattr(self, "clusters_"):
            self._reset()
        x = check_sample(x)
        record = {"sample": sample_id if sample_id is not None else len(self.assignments_)}
        if not self.clusters_:
            cluster = self.create_cluster(x)
            record.update(cluster=cluster.id, created=True, distances=[])
        else:
            d = self._distances(x)
            p = self._probs(d)
            best = self.clusters_[int(np.argmax(p))]
            record.update(distances=d.tolist(), nearest=best.id, eta=best.eta)
            if d[best.id - 1] <= best.eta:
                best.members.append(x)
                best.since_update += 1
                self._maybe_update(best)
                cluster = best
                record.update(cluster=best.id, created=False)
            else:
                cluster = self.create_cluster(x)
                record.update(cluster=cluster.id, created=True)
        self.assignments_.append(cluster.id)
        if self.trace:
            self.trace_.append(record)
        return cluster.id

    def partial_fit(self, X, y=None):
        if not hasattr(self, "clusters_"):
            self._reset()
        for x in check_samples(X):
            self.assign(x)
        return self

    def finalize(self):
        """Drop small clusters and renumber the survivors densely.

        Returns the final label of every assigned sample, in stream order,
        with ``OUTLIER`` for members of dropped clusters. Also sets
        ``labels_`` and ``id_map_`` (old id -> new id).
        """
        check_is_fitted(self, "clusters_")
        survivors = [c for c in self.clusters_ if len(c.members) >= self.tau_out]
        self.id_map_ = {c.id: i for i, c in enumerate(survivors, start=1)}
        for c in survivors:
            c.id = self.id_map_[c.id]
        self.clusters_ = survivors
        self.labels_ = np.array(
            [self.id_map_.get(a, OUTLIER) for a in self.assignments_], dtype=np.int64
        )
        return self.labels_

    def fit(self, X, y=None):
        self._reset()
        self.partial_fit(X)
        self.finalize()
        return self

    def offset_labels(self, labels=None):
        """Labels in the ``n_known + cluster id`` numbering; outliers unchanged."""
        labels = self.labels_ if labels is None else np.asarray(labels)
        return np.where(labels == OUTLIER, OUTLIER, labels + self.n_known)
