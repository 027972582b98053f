"""Feature standardization and a one-hot ridge classifier with LOO alpha search."""

from dataclasses import dataclass

import numpy as np
from scipy import linalg
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.pipeline import Pipeline
from sklearn.utils.validation import check_is_fitted

from . import container
from ._validation import check_labels, check_series, split_dataset
from .exceptions import LabelMismatch, SingularSystem, TooFewRows, WidthMismatch

STD_EPSILON = 1e-8
DEFAULT_ALPHAS = tuple(np.logspace(-3, 3, 10).tolist())
MODEL_KIND = "ridge-model"


@dataclass(frozen=True, eq=False)
class StandardizerState:
    mean: np.ndarray
    scale: np.ndarray


def fit_standardizer(features, epsilon=STD_EPSILON):
    """Per-column mean and population standard deviation, floored at ``epsilon``."""
    F = np.asarray(features, dtype=np.float64)
    if F.ndim != 2 or F.shape[0] < 2:
        raise TooFewRows("standardizer needs at least two rows")
    return StandardizerState(F.mean(axis=0), np.maximum(F.std(axis=0), epsilon))


def apply_standardizer(state, features):
    F = np.asarray(features, dtype=np.float64)
    if F.ndim != 2 or F.shape[1] != state.mean.shape[0]:
        raise WidthMismatch(f"expected {state.mean.shape[0]} features")
    return (F - state.mean) / state.scale


class Standardizer(TransformerMixin, BaseEstimator):
    """Zero-mean, unit-variance scaling with an epsilon floor on the scale."""

    def __init__(self, epsilon=STD_EPSILON):
        self.epsilon = epsilon

    def fit(self, X, y=None):
        self.state_ = fit_standardizer(check_series(X, name="features"), self.epsilon)
        self.n_features_in_ = self.state_.mean.shape[0]
        return self

    def transform(self, X):
        check_is_fitted(self, "state_")
        return apply_standardizer(self.state_, check_series(X, name="features"))


@dataclass(frozen=True, eq=False)
class RidgeModel:
    weights: np.ndarray       # (n_features, n_classes)
    intercepts: np.ndarray    # (n_classes,)
    chosen_alpha: float
    alpha_grid: tuple
    loo_errors: tuple

    @property
    def n_classes(self):
        return self.intercepts.shape[0]

    def to_bytes(self):
        manifest = {
            "format": "rockeeg-ridge",
            "version": 1,
            "n_features": int(self.weights.shape[0]),
            "n_classes": int(self.n_classes),
            "chosen_alpha": float(self.chosen_alpha),
        }
        arrays = {"weights": self.weights, "intercepts": self.intercepts,
                  "alpha_grid": np.asarray(self.alpha_grid, dtype=np.float64),
                  "loo_errors": np.asarray(self.loo_errors, dtype=np.float64)}
        return container.dumps(MODEL_KIND, manifest, arrays)

    @classmethod
    def from_bytes(cls, blob):
        _, m, a = container.loads(blob, kind=MODEL_KIND)
        return cls(a["weights"], a["intercepts"], m["chosen_alpha"],
                   tuple(a["alpha_grid"].tolist()), tuple(a["loo_errors"].tolist()))


def one_hot(labels, n_classes):
    labels = np.asarray(labels, dtype=np.int64)
    if labels.min() < 0 or labels.max() >= n_classes:
        raise LabelMismatch(f"labels must lie in 0..{n_classes - 1}")
    Y = np.zeros((labels.shape[0], n_classes))
    Y[np.arange(labels.shape[0]), labels] = 1.0
    return Y


def _solve_spd(A, B):
    try:
        factor = linalg.cho_factor(A, lower=True, check_finite=False)
    except linalg.LinAlgError:
        raise SingularSystem("regularized system is not positive definite") from None
    return linalg.cho_solve(factor, B, check_finite=False)


def ridge_solve(Xc, Y, alpha):
    """Solve ``(Xc^T Xc + alpha I) W = Xc^T Y``.

    When there are more features than rows the equivalent dual system
    ``(Xc Xc^T + alpha I) A = Y``, ``W = Xc^T A`` is solved instead; both are
    symmetric positive-definite Cholesky solves.
    """
    n, p = Xc.shape
    if p <= n:
        return _solve_spd(Xc.T @ Xc + alpha * np.eye(p), Xc.T @ Y)
    return Xc.T @ _solve_spd(Xc @ Xc.T + alpha * np.eye(n), Y)


def loo_errors(Xc, Y, alphas):
    """Mean squared leave-one-out residual per alpha.

    Uses the hat matrix ``H = 1/n + Xc (Xc^T Xc + alpha I)^-1 Xc^T`` (the
    ``1/n`` term accounts for the fitted intercept) and the identity
    ``e_loo = e / (1 - h_ii)``.
    """
    n = Xc.shape[0]
    U, s, _ = linalg.svd(Xc, full_matrices=False, check_finite=False)
    keep = s > s.max(initial=0.0) * max(Xc.shape) * np.finfo(float).eps
    U, s = U[:, keep], s[keep]
    UtY = U.T @ Y
    s2 = s ** 2
    errors = []
    for alpha in alphas:
        shrink = s2 / (s2 + alpha)
        fitted = U @ (shrink[:, None] * UtY)
        h = 1.0 / n + np.einsum("ij,j,ij->i", U, shrink, U)
        resid = (Y - Y.mean(axis=0)) - fitted
        with np.errstate(divide="ignore", invalid="ignore"):
            loo = resid / (1.0 - h)[:, None]
        err = float(np.mean(loo ** 2))
        errors.append(err if np.isfinite(err) else np.inf)
    return errors


def fit_ridge(features, labels, alpha_grid=DEFAULT_ALPHAS, n_classes=None):
    """Fit a one-hot ridge classifier, choosing alpha by leave-one-out error.

    Ties in LOO error keep the earliest alpha in ``alpha_grid``.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    if X.ndim != 2:
        raise ValueError("features must be 2-D")
    if y.shape != (X.shape[0],):
        raise LabelMismatch("labels must have one entry per row")
    if n_classes is None:
        n_classes = int(y.max()) + 1
    if X.shape[0] < n_classes:
        raise TooFewRows(f"{X.shape[0]} rows for {n_classes} classes")
    Y = one_hot(y, n_classes)
    alphas = tuple(float(a) for a in np.atleast_1d(alpha_grid))
    if not alphas or any(a < 0 for a in alphas):
        raise ValueError("alpha grid must be non-empty and non-negative")
    x_mean = X.mean(axis=0)
    y_mean = Y.mean(axis=0)
    Xc = X - x_mean
    if len(alphas) > 1 and X.shape[0] > 1:
        errs = loo_errors(Xc, Y, alphas)
        best = int(np.argmin(errs))
    else:
        errs = [np.nan] * len(alphas)
        best = 0
    alpha = alphas[best]
    W = ridge_solve(Xc, Y - y_mean, alpha)
    if not np.all(np.isfinite(W)):
        raise SingularSystem("ridge solution is not finite")
    return RidgeModel(W, y_mean - x_mean @ W, alpha, alphas, tuple(errs))


def decision_scores(model, features):
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.weights.shape[0]:
        raise WidthMismatch(f"expected {model.weights.shape[0]} features, got shape {X.shape}")
    return X @ model.weights + model.intercepts


def predict(model, features):
    """Arg-max class per row; ties resolve to the lowest class index."""
    return np.argmax(decision_scores(model, features), axis=1)


class RidgeClassifierLOO(ClassifierMixin, BaseEstimator):
    """Ridge regression on one-hot targets with leave-one-out alpha selection.

    Parameters
    ----------
    alphas : sequence of float, default=10 log-spaced values in [1e-3, 1e3]

    Attributes
    ----------
    model_ : RidgeModel
    classes_ : ndarray
    alpha_ : float
    """

    def __init__(self, alphas=DEFAULT_ALPHAS):
        self.alphas = alphas

    def fit(self, X, y=None):
        X, y = split_dataset(X, y)
        X = check_series(X, name="features")
        y = check_labels(y, X.shape[0])
        self.classes_, codes = np.unique(y, return_inverse=True)
        self.model_ = fit_ridge(X, codes, self.alphas, n_classes=len(self.classes_))
        self.alpha_ = self.model_.chosen_alpha
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        return decision_scores(self.model_, check_series(X, name="features"))

    def predict(self, X):
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]


def make_minirocket_classifier(n_features=10_000, max_dilations_per_kernel=28, random_state=0,
                               alphas=DEFAULT_ALPHAS, n_jobs=None):
    """MiniRocket -> Standardizer -> RidgeClassifierLOO as a scikit-learn Pipeline."""
    from .minirocket import MiniRocket

    return Pipeline([
        ("minirocket", MiniRocket(n_features, max_dilations_per_kernel, random_state, n_jobs)),
        ("standardize", Standardizer()),
        ("ridge", RidgeClassifierLOO(alphas)),
    ])
