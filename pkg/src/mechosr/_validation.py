"""Input validation helpers shared by the estimators."""

import numpy as np
from sklearn.utils.validation import check_array

N_FEATURES = 4
FEATURE_NAMES = ("stiffness", "viscosity", "restitution", "friction")


def check_samples(X, physical=False):
    """Return ``X`` as a finite float64 array of shape (n_samples, 4).

    With ``physical=True`` the property ranges are enforced as well:
    restitution in [0, 1], the other three non-negative.
    """
    X = check_array(X, dtype=np.float64, ensure_2d=True, ensure_all_finite=True)
    if X.shape[1] != N_FEATURES:
        raise ValueError(
            f"expected {N_FEATURES} mechanical-property features, got {X.shape[1]}"
        )
    if physical:
        check_physical(X)
    return X


def check_sample(x):
    """Single-sample counterpart of :func:`check_samples`; returns shape (4,)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (N_FEATURES,):
        raise ValueError(f"expected a sample of shape ({N_FEATURES},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("sample contains NaN or infinite values")
    return x


def check_physical(X):
    X = np.atleast_2d(X)
    bad = (X[:, [0, 1, 3]] < 0).any(axis=1) | (X[:, 2] < 0) | (X[:, 2] > 1)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise ValueError(f"row {i}: property values outside physical range: {X[i]}")


def check_random_state(seed):
    """Turn ``seed`` into a PCG64-backed ``numpy.random.Generator``."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.BitGenerator):
        return np.random.Generator(seed)
    return np.random.Generator(np.random.PCG64(seed))
