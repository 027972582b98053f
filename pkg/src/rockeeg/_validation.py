"""Input validation shared by the estimators."""

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import LengthMismatch


def check_series(X, expected_length=None, min_length=1, name="X"):
    """Return ``X`` as a C-contiguous float64 matrix of shape (n_series, length).

    Accepts a :class:`~rockeeg.dataset.Dataset`, a 2-D array, or a univariate
    3-D array of shape (n_series, 1, length).
    """
    if hasattr(X, "X") and hasattr(X, "class_count"):
        X = X.X
    X = np.asarray(X)
    if X.ndim == 3 and X.shape[1] == 1:
        X = X[:, 0, :]
    X = check_array(X, dtype=np.float64, order="C", ensure_2d=True,
                    ensure_min_features=max(min_length, 1), input_name=name)
    if expected_length is not None and X.shape[1] != expected_length:
        raise LengthMismatch(f"{name} has series length {X.shape[1]}, expected {expected_length}")
    return X


def check_labels(y, n_samples, name="y"):
    if hasattr(y, "X") and hasattr(y, "class_count"):
        y = y.y
    y = np.asarray(y)
    if y.ndim != 1 or y.shape[0] != n_samples:
        raise LengthMismatch(f"{name} must be 1-D with {n_samples} entries, got shape {y.shape}")
    return y


def split_dataset(X, y):
    """Unpack ``(Dataset, None)`` into ``(X, y)``; pass arrays through."""
    if y is None and hasattr(X, "X") and hasattr(X, "class_count"):
        return X.X, X.y
    return X, y
