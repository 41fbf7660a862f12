"""scikit-learn adapter: escape-time membership as a classifier over ``(gamma, lam)`` rows.

Nothing is learned.  ``fit`` validates input and records the label set so the
object composes with pipelines and model-selection utilities.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import DomainError
from .escape import DEFAULT_CAP, membership
from .ifs import Params


def check_params_array(X) -> np.ndarray:
    """Validate an ``(n, 2)`` array of parameter pairs inside the open square."""
    X = check_array(X, dtype=float, ensure_min_features=2)
    if X.shape[1] != 2:
        raise ValueError(f"expected 2 columns (gamma, lam), got {X.shape[1]}")
    if np.any(np.abs(X) >= 1):
        raise DomainError("every parameter must lie in (-1, 1)")
    return X


class EscapeTimeClassifier(ClassifierMixin, BaseEstimator):
    """Predicts 1 for parameters that survive to ``max_depth``, else 0.

    Rows with a zero coordinate (singular ``T``) are predicted 0.
    """

    def __init__(self, max_depth: int = 30, dedup_q: float | None = None, max_branches: int = DEFAULT_CAP):
        self.max_depth = max_depth
        self.dedup_q = dedup_q
        self.max_branches = max_branches

    def fit(self, X, y=None):
        X = check_params_array(X)
        if self.max_depth < 0:
            raise ValueError("max_depth must be non-negative")
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.array([0, 1])
        return self

    def escape_depths(self, X) -> np.ndarray:
        check_is_fitted(self, "classes_")
        X = check_params_array(X)
        out = np.empty(len(X), dtype=np.int64)
        for i, (g, l) in enumerate(X):
            if g == 0 or l == 0:
                out[i] = 0
                continue
            r = membership(Params(g, l), self.max_depth, self.dedup_q, self.max_branches)
            out[i] = r.depth if not r.survived else self.max_depth + 1
        return out

    def predict(self, X) -> np.ndarray:
        return (self.escape_depths(X) > self.max_depth).astype(np.int64)
