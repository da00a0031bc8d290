"""Repeated open-set trials, aggregation, hyperparameter sweeps and baselines."""

import dataclasses
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import numpy as np

from ._validation import check_random_state, check_samples
from .classifier import NOVEL
from .clusterer import OUTLIER
from .core import SyntheticSpec, generate_synthetic, load_csv, split_open_set
from .exceptions import ConfigError, DataError
from .metrics import TrialResult, adjusted_rand_index, detection_accuracy, recognition_rate
from .recognizer import OpenSetRecognizer

SCHEMA_VERSION = 1
ARMS = ("full", "random_params", "kmeans_baseline")
SWEEP_PARAMS = ("alpha", "beta", "n_gen", "tau_update", "novel_fraction")
METRICS = (
    "known_accuracy",
    "novel_accuracy",
    "overall_accuracy",
    "recognition_rate",
    "ari",
    "n_clusters",
    "n_outliers",
)
PROB_TOLERANCE = 1e-12

# Published results on a physical-robot dataset; shown as annotations only.
PUBLISHED_REFERENCE = {
    "full": {
        "known_accuracy": (95.76, 1.87),
        "novel_accuracy": (89.21, 4.76),
        "overall_accuracy": (91.06, 2.98),
        "recognition_rate": (95.58, 1.61),
        "ari": (0.701, 0.096),
    },
    "random_params": {"ari": (0.120, 0.025)},
    "kmeans_baseline": {"ari": (0.642, 0.123)},
}


@dataclass
class ExperimentConfig:
    """Flat experiment configuration; every field is a ``--set`` key.

    ``data`` is a CSV path; when empty a synthetic dataset is generated
    from ``classes``, ``samples_per_class``, ``separation`` and
    ``data_seed``.
    """

    data: str = ""
    classes: int = 20
    samples_per_class: int = 25
    separation: float = 8.0
    data_seed: int = 7
    known_fraction: float = 0.6
    train_fraction: float = 0.75
    repetitions: int = 25
    quantile: float = 0.01
    threshold: float | None = None
    alpha: float = 0.4
    beta: float = 1.5
    n_gen: int = 40
    tau_update: int = 15
    tau_out: float = 3
    lambda_mu: float = 0.1
    lambda_var: float = 1.0
    standardize: bool = True
    seed: int = 0
    arm: str = "full"
    count_outliers_as_singletons: bool = False
    include_misrouted: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if self.arm not in ARMS:
            raise ConfigError(f"arm must be one of {', '.join(ARMS)}")
        if not 0 <= self.alpha <= 1:
            raise ConfigError("alpha must lie in [0, 1]")
        if self.beta < 0:
            raise ConfigError("beta must be non-negative")
        if self.n_gen < 1 or self.tau_update < 1:
            raise ConfigError("n_gen and tau_update must be >= 1")
        if not 0 <= self.quantile < 0.5:
            raise ConfigError("quantile must lie in [0, 0.5)")

    @classmethod
    def keys(cls):
        return [f.name for f in dataclasses.fields(cls)]

    def to_dict(self):
        return dataclasses.asdict(self)

    def replace(self, **changes):
        return parse_config(changes, base=self)

    def synthetic_spec(self):
        return SyntheticSpec(
            n_classes=self.classes,
            samples_per_class=self.samples_per_class,
            separation=self.separation,
        )


def _coerce(name, kind, value):
    if not isinstance(value, str):
        if kind == "float" and isinstance(value, int) and not isinstance(value, bool):
            return float(value)
        return value
    text = value.strip()
    try:
        if kind == "bool":
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "float | None":
            return None if text.lower() in ("", "none", "null") else float(text)
    except ValueError:
        raise ConfigError(f"{name}: cannot interpret {value!r} as {kind}") from None
    return text


def _kind(annotation):
    if annotation in (bool, int, float, str):
        return annotation.__name__
    return "float | None"


def parse_config(mapping, base=None):
    """Build an :class:`ExperimentConfig` from a mapping of (possibly string) values.

    Unknown keys raise :class:`ConfigError` before anything else happens.
    """
    fields = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    unknown = sorted(set(mapping) - set(fields))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    values = base.to_dict() if base is not None else {}
    for key, raw in mapping.items():
        values[key] = _coerce(key, _kind(fields[key].type), raw)
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_dataset(config):
    if config.data:
        return load_csv(config.data)
    return generate_synthetic(config.synthetic_spec(), seed=config.data_seed)


def trial_seeds(master_seed, n):
    """``n`` 64-bit trial seeds derived from ``master_seed``; a prefix is stable in ``n``."""
    return np.random.SeedSequence(master_seed).generate_state(n, dtype=np.uint64).tolist()


def kmeans_baseline(X, k, seed=0, max_iter=300, tol=1e-9):
    """Lloyd's k-means with k-means++ seeding; returns labels ``0..k-1``."""
    X = check_samples(X)
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(X) < k:
        raise ValueError(f"{len(X)} samples cannot form {k} clusters")
    rng = check_random_state(seed)
    centres = [X[rng.integers(len(X))]]
    for _ in range(1, k):
        d2 = ((X[:, None, :] - np.array(centres)[None]) ** 2).sum(-1).min(1)
        total = d2.sum()
        idx = rng.choice(len(X), p=d2 / total) if total > 0 else rng.integers(len(X))
        centres.append(X[idx])
    centres = np.array(centres)
    for _ in range(max_iter):
        labels = ((X[:, None, :] - centres[None]) ** 2).sum(-1).argmin(1)
        new = np.array(
            [X[labels == j].mean(0) if (labels == j).any() else centres[j] for j in range(k)]
        )
        shift = np.abs(new - centres).max()
        centres = new
        if shift < tol:
            break
    return ((X[:, None, :] - centres[None]) ** 2).sum(-1).argmin(1)


def _ari_inputs(config, truth, decisions, clusters, novel_truth):
    routed = decisions == NOVEL
    mask = routed & novel_truth
    if config.include_misrouted:
        mask = routed
    if not config.count_outliers_as_singletons:
        mask = mask & (clusters != OUTLIER)
    t = np.where(novel_truth, truth, 0)[mask]
    c = clusters[mask].copy()
    # each outlier becomes its own singleton cluster
    singles = c == OUTLIER
    c[singles] = -1 - np.arange(singles.sum())
    return t, c


def run_trial(config, seed, dataset=None, trace=None):
    """One split, fit, stream, finalise and score cycle.

    If ``trace`` is a list, the clusterer's per-assignment records are
    appended to it.
    """
    if dataset is None:
        dataset = load_dataset(config)
    split_seed, model_seed, baseline_seed = trial_seeds(seed, 3)
    split = split_open_set(dataset, config.known_fraction, config.train_fraction, seed=split_seed)
    model = OpenSetRecognizer(
        quantile=config.quantile,
        threshold=config.threshold,
        alpha=config.alpha,
        beta=config.beta,
        n_gen=config.n_gen,
        tau_update=config.tau_update,
        tau_out=config.tau_out,
        lambda_mu=config.lambda_mu,
        lambda_var=config.lambda_var,
        standardize=config.standardize,
        param_source="random" if config.arm == "random_params" else "regression",
        random_state=model_seed,
        trace=trace is not None,
    ).fit(split.X_train, split.y_train)

    X_test, y_test = split.X_test, split.y_test
    ids = [dataset.object_ids[i] for i in split.test_index]
    outcome = model.process(X_test, sample_ids=ids)
    if trace is not None:
        trace.extend(model.clusterer_.trace_)
    prob_error = max(outcome.max_posterior_error, outcome.max_membership_error)
    if prob_error > PROB_TOLERANCE:
        raise RuntimeError(f"probability vector off unit sum by {prob_error:.3g}")

    novel_truth = split.test_is_novel
    decisions, clusters = outcome.decisions, outcome.clusters
    n_clusters = model.clusterer_.n_clusters_
    if config.arm == "kmeans_baseline":
        routed = np.flatnonzero(decisions == NOVEL)
        k = min(len(split.novel_classes), len(routed))
        clusters = np.zeros_like(clusters)
        if k >= 1:
            clusters[routed] = 1 + kmeans_baseline(X_test[routed], k, seed=baseline_seed)
        n_clusters = k

    known_acc, novel_acc, overall = detection_accuracy(decisions == NOVEL, novel_truth)
    accepted = (decisions != NOVEL) & ~novel_truth
    recog = recognition_rate(decisions[accepted], y_test[accepted]) if accepted.any() else float("nan")
    t, c = _ari_inputs(config, y_test, decisions, clusters, novel_truth)
    ari = adjusted_rand_index(t, c) if len(t) >= 2 else float("nan")
    return TrialResult(
        known_accuracy=known_acc,
        novel_accuracy=novel_acc,
        overall_accuracy=overall,
        recognition_rate=recog,
        ari=float(ari),
        n_clusters=int(n_clusters),
        n_outliers=int(((decisions == NOVEL) & (clusters == OUTLIER)).sum()),
        seed=int(seed),
        max_prob_error=float(prob_error),
    )


def aggregate(trials):
    """Mean and population std of every metric, ignoring NaN trials.

    ``math.fsum`` keeps the result independent of trial order.
    """
    out = {}
    for name in METRICS:
        vals = [float(getattr(t, name)) for t in trials]
        vals = [v for v in vals if not math.isnan(v)]
        if not vals:
            out[name] = {"mean": float("nan"), "std": float("nan")}
            continue
        mean = math.fsum(vals) / len(vals)
        std = math.sqrt(math.fsum((v - mean) ** 2 for v in vals) / len(vals))
        out[name] = {"mean": mean, "std": std}
    return out


@dataclass
class ExperimentReport:
    config: dict
    seeds: list
    per_trial: list
    aggregate: dict
    runtime_seconds: float | None = None
    schema_version: int = SCHEMA_VERSION
    std_kind: str = "population"
    reference: dict = field(default_factory=dict)

    def to_dict(self):
        d = {
            "schema_version": self.schema_version,
            "config": self.config,
            "seeds": self.seeds,
            "per_trial": [t.to_dict() for t in self.per_trial],
            "aggregate": self.aggregate,
            "std_kind": self.std_kind,
            "reference": {k: {"mean": m, "std": s} for k, (m, s) in self.reference.items()},
        }
        if self.runtime_seconds is not None:
            d["runtime_seconds"] = self.runtime_seconds
        return d

    @classmethod
    def from_dict(cls, d):
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ConfigError(
                f"report schema version {d.get('schema_version')} != {SCHEMA_VERSION}"
            )
        return cls(
            config=d["config"],
            seeds=d["seeds"],
            per_trial=[TrialResult(**t) for t in d["per_trial"]],
            aggregate=d["aggregate"],
            runtime_seconds=d.get("runtime_seconds"),
            std_kind=d.get("std_kind", "population"),
            reference={k: (v["mean"], v["std"]) for k, v in d.get("reference", {}).items()},
        )

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _trial_failed(i, exc):
    # keep data/config errors recognisable to callers
    kind = type(exc) if isinstance(exc, (DataError, ConfigError)) else RuntimeError
    return kind(f"trial {i} failed: {exc}")


def run_experiment(config, jobs=1, dataset=None, traces=None):
    """Run ``config.repetitions`` seeded trials and aggregate them.

    If ``traces`` is a list, trials run sequentially and every clusterer
    assignment record is appended to it, tagged with its trial index.
    """
    start = time.perf_counter()
    if dataset is None:
        dataset = load_dataset(config)
    seeds = trial_seeds(config.seed, config.repetitions)
    work = partial(run_trial, config, dataset=dataset)
    trials = []
    if jobs > 1 and traces is None:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(work, s) for s in seeds]
            for i, fut in enumerate(futures):
                try:
                    trials.append(fut.result())
                except Exception as exc:
                    raise _trial_failed(i, exc) from exc
    else:
        for i, s in enumerate(seeds):
            records = [] if traces is not None else None
            try:
                trials.append(work(s, trace=records))
            except Exception as exc:
                raise _trial_failed(i, exc) from exc
            if records is not None:
                traces.extend({"trial": i, **r} for r in records)
    return ExperimentReport(
        config=config.to_dict(),
        seeds=seeds,
        per_trial=trials,
        aggregate=aggregate(trials),
        runtime_seconds=time.perf_counter() - start,
        reference=PUBLISHED_REFERENCE.get(config.arm, {}),
    )


@dataclass
class SweepResult:
    param: str
    values: list
    reports: list

    def curve(self):
        """Rows of (value, mean/std per metric) ready for plotting."""
        rows = []
        for v, rep in zip(self.values, self.reports):
            row = {"value": v}
            for name in METRICS:
                row[f"mean_{name}"] = rep.aggregate[name]["mean"]
                row[f"std_{name}"] = rep.aggregate[name]["std"]
            rows.append(row)
        return rows


def sweep(config, param, values, jobs=1, dataset=None):
    """One experiment per value of ``param``, all sharing ``config.seed``."""
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"unknown sweep parameter {param!r}; choose from {', '.join(SWEEP_PARAMS)}")
    if dataset is None:
        dataset = load_dataset(config)
    reports = []
    for v in values:
        if param == "novel_fraction":
            if not 0 < v < 1:
                raise ConfigError("novel_fraction values must lie in (0, 1)")
            cfg = config.replace(known_fraction=1.0 - v)
        else:
            cfg = config.replace(**{param: v})
        reports.append(run_experiment(cfg, jobs=jobs, dataset=dataset))
    return SweepResult(param=param, values=list(values), reports=reports)
