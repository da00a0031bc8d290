"""Dataset container, CSV I/O, synthetic data and the open-set split.

All randomness goes through ``numpy.random.Generator(PCG64(seed))`` so a
seed fully determines every output of this module.
"""

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import FEATURE_NAMES, check_random_state
from .exceptions import DataError

CSV_HEADER = ("object_id", "class_id") + FEATURE_NAMES


@dataclass(frozen=True, eq=False)
class Dataset:
    """Labelled mechanical-property samples.

    ``y`` holds dense class ids ``1..G`` assigned in order of first
    appearance; ``class_labels[g - 1]`` is the original label of id ``g``.
    """

    X: np.ndarray
    y: np.ndarray
    object_ids: tuple
    class_labels: tuple
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.all(np.isfinite(self.X)):
            raise DataError("dataset contains NaN or infinite feature values")
        if self.y.size and (self.y.min() < 1 or self.y.max() > len(self.class_labels)):
            raise DataError("row references a class id missing from the class table")

    @property
    def n_classes(self):
        return len(self.class_labels)

    @property
    def class_counts(self):
        """Mapping class id -> number of rows."""
        ids, counts = np.unique(self.y, return_counts=True)
        return dict(zip(ids.tolist(), counts.tolist()))

    def __len__(self):
        return len(self.y)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.object_ids == other.object_ids
            and self.class_labels == other.class_labels
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.X, other.X)
        )


def _dense_ids(labels):
    table = {}
    for lab in labels:
        table.setdefault(lab, len(table) + 1)
    y = np.array([table[lab] for lab in labels], dtype=np.int64)
    return y, tuple(table)


def load_csv(path):
    """Read a dataset CSV. Lines starting with ``#`` are provenance comments."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        lines = [(i, ln) for i, ln in enumerate(fh, start=1) if not ln.startswith("#")]
    if not lines:
        raise DataError(f"{path}: missing header")
    reader = csv.reader([ln for _, ln in lines])
    header = tuple(h.strip() for h in next(reader))
    if header != CSV_HEADER:
        missing = [c for c in CSV_HEADER if c not in header]
        extra = [c for c in header if c not in CSV_HEADER]
        raise DataError(
            f"{path}: header mismatch (missing={missing}, extra={extra}); "
            f"expected {','.join(CSV_HEADER)}"
        )
    ids, labels, rows = [], [], []
    for (lineno, _), rec in zip(lines[1:], reader):
        if not rec:
            continue
        if len(rec) != len(CSV_HEADER):
            raise DataError(f"line {lineno}: expected {len(CSV_HEADER)} fields, got {len(rec)}")
        try:
            label = int(rec[1])
        except ValueError:
            raise DataError(f"line {lineno}: class_id {rec[1]!r} is not an integer") from None
        values = []
        for name, raw in zip(FEATURE_NAMES, rec[2:]):
            try:
                v = float(raw)
            except ValueError:
                raise DataError(f"line {lineno}: {name} {raw!r} is not numeric") from None
            if not math.isfinite(v):
                raise DataError(f"line {lineno}: {name} is not finite")
            if name == "restitution" and not 0.0 <= v <= 1.0:
                raise DataError(f"line {lineno}: restitution {v} outside [0, 1]")
            if name != "restitution" and v < 0:
                raise DataError(f"line {lineno}: {name} {v} is negative")
            values.append(v)
        ids.append(rec[0])
        labels.append(label)
        rows.append(values)
    if not rows:
        raise DataError(f"{path}: empty dataset")
    y, class_labels = _dense_ids(labels)
    return Dataset(
        X=np.array(rows, dtype=np.float64),
        y=y,
        object_ids=tuple(ids),
        class_labels=class_labels,
        metadata={"source": str(path)},
    )


def save_csv(dataset, path, comment=None):
    """Write ``dataset`` in the CSV schema; ``repr`` floats make the round trip exact."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for oid, g, x in zip(dataset.object_ids, dataset.y, dataset.X):
            writer.writerow([oid, dataset.class_labels[g - 1], *map(repr, x.tolist())])


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a synthetic dataset of diagonal-Gaussian classes.

    A class's standard deviation on feature f is drawn uniformly from
    ``sigma_ranges[f]``; with ``relative_sigma`` the draw is a coefficient
    of variation and is multiplied by the class mean on f.
    ``separation`` is the minimum pairwise distance between class means,
    measured per feature in units of the larger of the two classes' sigmas.
    """

    n_classes: int = 20
    samples_per_class: int = 25
    mean_ranges: tuple = ((200.0, 3000.0), (5.0, 80.0), (0.1, 0.9), (0.1, 1.0))
    sigma_ranges: tuple = ((0.02, 0.04), (0.02, 0.04), (0.02, 0.04), (0.02, 0.04))
    relative_sigma: bool = True
    separation: float = 8.0
    max_attempts: int = 20000


def pairwise_separation(means, sigmas):
    """Matrix of scaled distances between class means (larger sigma per pair)."""
    diff = means[:, None, :] - means[None, :, :]
    scale = np.maximum(sigmas[:, None, :], sigmas[None, :, :])
    return np.sqrt(((diff / scale) ** 2).sum(axis=-1))


def generate_synthetic(spec=SyntheticSpec(), seed=0):
    """Draw a :class:`Dataset` from ``spec``.

    Class means are drawn uniformly in ``mean_ranges`` and rejected until
    the separation constraint holds against every earlier class. Samples
    falling outside physical ranges are clipped; the number of clipped
    values is stored in ``metadata["clipped"]``.
    """
    if spec.n_classes < 2:
        raise DataError("synthetic data needs at least 2 classes")
    if spec.samples_per_class < 2:
        raise DataError("synthetic data needs at least 2 samples per class")
    if spec.separation < 0:
        raise DataError("separation must be non-negative")
    rng = check_random_state(seed)
    lo = np.array([r[0] for r in spec.mean_ranges], dtype=float)
    hi = np.array([r[1] for r in spec.mean_ranges], dtype=float)
    slo = np.array([r[0] for r in spec.sigma_ranges], dtype=float)
    shi = np.array([r[1] for r in spec.sigma_ranges], dtype=float)

    means, sigmas = [], []
    attempts = 0
    while len(means) < spec.n_classes:
        attempts += 1
        if attempts > spec.max_attempts:
            raise DataError(
                f"could not place {spec.n_classes} classes at separation "
                f"{spec.separation} after {spec.max_attempts} draws; "
                "try a smaller separation or wider mean ranges"
            )
        mu = rng.uniform(lo, hi)
        sd = rng.uniform(slo, shi)
        if spec.relative_sigma:
            sd = sd * mu
        if means:
            diff = (np.array(means) - mu) / np.maximum(np.array(sigmas), sd)
            if np.sqrt((diff**2).sum(axis=1)).min() < spec.separation:
                continue
        means.append(mu)
        sigmas.append(sd)
    means, sigmas = np.array(means), np.array(sigmas)

    tn = spec.samples_per_class
    X = rng.normal(np.repeat(means, tn, axis=0), np.repeat(sigmas, tn, axis=0))
    clipped = X.copy()
    clipped[:, [0, 1, 3]] = np.maximum(clipped[:, [0, 1, 3]], 0.0)
    clipped[:, 2] = np.clip(clipped[:, 2], 0.0, 1.0)
    n_clipped = int((clipped != X).sum())

    y = np.repeat(np.arange(1, spec.n_classes + 1), tn)
    object_ids = tuple(f"obj{g:02d}_t{t:02d}" for g in range(1, spec.n_classes + 1) for t in range(1, tn + 1))
    return Dataset(
        X=clipped,
        y=y,
        object_ids=object_ids,
        class_labels=tuple(range(1, spec.n_classes + 1)),
        metadata={
            "class_means": means,
            "class_sigmas": sigmas,
            "clipped": n_clipped,
            "mean_draws": attempts,
        },
    )


@dataclass(frozen=True, eq=False)
class SplitResult:
    """Known/novel class partition plus row indices into ``dataset``.

    ``test_index`` is the stream order.
    """

    dataset: Dataset
    known_classes: np.ndarray
    novel_classes: np.ndarray
    train_index: np.ndarray
    test_index: np.ndarray

    @property
    def X_train(self):
        return self.dataset.X[self.train_index]

    @property
    def y_train(self):
        return self.dataset.y[self.train_index]

    @property
    def X_test(self):
        return self.dataset.X[self.test_index]

    @property
    def y_test(self):
        return self.dataset.y[self.test_index]

    @property
    def test_is_novel(self):
        return np.isin(self.y_test, self.novel_classes)


def _round_half_up(v):
    return int(math.floor(v + 0.5))


def split_open_set(dataset, known_fraction=0.6, train_fraction=0.75, seed=0):
    """Pick known classes at random and build the training set and test stream.

    ``round(known_fraction * G)`` classes become known (halves round up).
    Each known class contributes ``floor(train_fraction * count)`` randomly
    chosen rows to training; everything else is shuffled into the stream.
    """
    if not 0 < known_fraction < 1 or not 0 < train_fraction < 1:
        raise DataError("known_fraction and train_fraction must lie in (0, 1)")
    G = dataset.n_classes
    n_known = _round_half_up(known_fraction * G)
    if n_known < 2:
        raise DataError(f"known_fraction={known_fraction} gives {n_known} known classes; need >= 2")
    if n_known >= G:
        raise DataError(f"known_fraction={known_fraction} leaves no novel classes")
    rng = check_random_state(seed)
    order = rng.permutation(np.arange(1, G + 1))
    known = np.sort(order[:n_known])
    novel = np.sort(order[n_known:])

    train, test = [], []
    for g in known:
        rows = rng.permutation(np.flatnonzero(dataset.y == g))
        n_train = math.floor(train_fraction * len(rows))
        train.append(rows[:n_train])
        test.append(rows[n_train:])
    test.append(np.flatnonzero(np.isin(dataset.y, novel)))
    train = np.sort(np.concatenate(train))
    test = rng.permutation(np.concatenate(test))
    return SplitResult(dataset, known, novel, train, test)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_report(report):
    data = report.to_dict() if hasattr(report, "to_dict") else report
    return json.dumps(data, indent=2, sort_keys=True, default=_jsonable) + "\n"


def save_report(report, path, format="json"):
    """Serialise a trial result or experiment report as ``json`` or ``markdown``."""
    from .reporting import render_markdown

    if format == "json":
        text = dumps_report(report)
    elif format in ("markdown", "md"):
        data = report.to_dict() if hasattr(report, "to_dict") else report
        text = render_markdown(data)
    else:
        raise ValueError(f"unknown report format {format!r}; use 'json' or 'markdown'")
    Path(path).write_text(text, encoding="utf-8")
