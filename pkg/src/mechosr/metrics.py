"""Detection accuracy, recognition rate and the adjusted Rand index."""

from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class TrialResult:
    known_accuracy: float
    novel_accuracy: float
    overall_accuracy: float
    recognition_rate: float
    ari: float
    n_clusters: int
    n_outliers: int
    seed: int
    max_prob_error: float = 0.0

    def to_dict(self):
        return asdict(self)


def detection_accuracy(decided_novel, truly_novel):
    """Return ``(known, novel, overall)`` accuracies of the known/novel split.

    ``known`` is the fraction of truly-known samples kept as known and
    ``novel`` the fraction of truly-novel samples flagged novel. A group
    absent from the input scores NaN.
    """
    decided_novel = np.asarray(decided_novel, dtype=bool)
    truly_novel = np.asarray(truly_novel, dtype=bool)
    if decided_novel.shape != truly_novel.shape:
        raise ValueError("decisions and ground truth differ in length")
    if decided_novel.size == 0:
        raise ValueError("empty input")
    correct = decided_novel == truly_novel
    known = correct[~truly_novel].mean() if (~truly_novel).any() else float("nan")
    novel = correct[truly_novel].mean() if truly_novel.any() else float("nan")
    return float(known), float(novel), float(correct.mean())


def recognition_rate(predicted, true):
    """Fraction of exact class matches.

    Callers restrict the inputs to samples that are truly known and were
    accepted as known.
    """
    predicted, true = np.asarray(predicted), np.asarray(true)
    if predicted.shape != true.shape:
        raise ValueError("length mismatch")
    if predicted.size == 0:
        raise ValueError("no samples to score")
    return float((predicted == true).mean())


def contingency_table(labels_a, labels_b):
    """Integer matrix ``n_ij`` of co-occurrences (rows: ``labels_a``)."""
    _, ia = np.unique(np.asarray(labels_a), return_inverse=True)
    _, ib = np.unique(np.asarray(labels_b), return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    return table


def _pairs(counts):
    return sum(int(c) * (int(c) - 1) // 2 for c in np.ravel(counts))


def adjusted_rand_index(labels_a, labels_b):
    """Adjusted Rand index between two labelings of the same samples.

    Pair counts are accumulated as Python integers. When the chance-level
    correction leaves a zero denominator the index is 1.0 for identical
    partitions and 0.0 otherwise.
    """
    labels_a, labels_b = np.asarray(labels_a), np.asarray(labels_b)
    if labels_a.shape != labels_b.shape:
        raise ValueError("label arrays differ in length")
    n = labels_a.size
    if n < 2:
        raise ValueError("need at least 2 samples")
    table = contingency_table(labels_a, labels_b)
    sum_ij = _pairs(table)
    sum_a = _pairs(table.sum(axis=1))
    sum_b = _pairs(table.sum(axis=0))
    total = n * (n - 1) // 2
    # both terms scaled by 2 * total to stay in integers until the final division
    num = 2 * (sum_ij * total - sum_a * sum_b)
    den = (sum_a + sum_b) * total - 2 * sum_a * sum_b
    if den == 0:
        same = sum_ij == sum_a == sum_b
        return 1.0 if same else 0.0
    return num / den
