"""Open-set recognition of objects from their mechanical properties.

Known objects are classified with a Gaussian Naive Bayes model that also
flags low-likelihood samples as novel; novel samples are clustered online
with cluster shapes predicted by a ridge regression from the properties.
"""

from .classifier import NOVEL, NoveltyNaiveBayes
from .clusterer import OUTLIER, Cluster, NovelClusterer, RandomClusterParams, mahalanobis
from .core import (
    Dataset,
    SplitResult,
    SyntheticSpec,
    generate_synthetic,
    load_csv,
    save_csv,
    save_report,
    split_open_set,
)
from .exceptions import ConfigError, DataError
from .experiment import (
    ExperimentConfig,
    ExperimentReport,
    SweepResult,
    kmeans_baseline,
    parse_config,
    run_experiment,
    run_trial,
    sweep,
)
from .metrics import TrialResult, adjusted_rand_index, detection_accuracy, recognition_rate
from .recognizer import OpenSetRecognizer
from .regressor import ClusterParamRegressor, feature_map, ridge_solve

__version__ = "0.1.0"

__all__ = [
    "NOVEL",
    "OUTLIER",
    "Cluster",
    "ClusterParamRegressor",
    "ConfigError",
    "DataError",
    "Dataset",
    "ExperimentConfig",
    "ExperimentReport",
    "NovelClusterer",
    "NoveltyNaiveBayes",
    "OpenSetRecognizer",
    "RandomClusterParams",
    "SplitResult",
    "SweepResult",
    "SyntheticSpec",
    "TrialResult",
    "adjusted_rand_index",
    "detection_accuracy",
    "feature_map",
    "generate_synthetic",
    "kmeans_baseline",
    "load_csv",
    "mahalanobis",
    "parse_config",
    "recognition_rate",
    "ridge_solve",
    "run_experiment",
    "run_trial",
    "save_csv",
    "save_report",
    "split_open_set",
    "sweep",
]
