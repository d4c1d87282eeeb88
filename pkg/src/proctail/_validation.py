"""Small input checks shared by the estimators and functional API."""
from __future__ import annotations

import math
import numbers

import numpy as np
import scipy.sparse as sp

from .exceptions import AnalysisError


def check_fraction(value, name: str = "pareto_fraction") -> float:
    if not isinstance(value, numbers.Real) or isinstance(value, bool) or not 0 < value < 1:
        raise AnalysisError(f"{name} must be a real number in (0, 1), got {value!r}")
    return float(value)


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < minimum:
        raise AnalysisError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def as_feature_array(X) -> np.ndarray:
    """Dense 2-D numeric array from a FeatureMatrix, sparse matrix or array-like.

    Integer inputs keep an integer dtype so Gram products stay exact.
    """
    rows = getattr(X, "rows", X)
    if sp.issparse(rows):
        rows = rows.toarray()
    arr = np.asarray(rows)
    if arr.ndim != 2:
        raise AnalysisError(f"feature matrix must be 2-D, got shape {arr.shape}")
    if arr.dtype.kind in "biu":
        return arr.astype(np.int64, copy=False)
    arr = arr.astype(np.float64, copy=False)
    if not np.all(np.isfinite(arr)):
        raise AnalysisError("feature matrix contains NaN or infinite values")
    return arr


def ceil_fraction(fraction: float, n: int) -> int:
    """ceil(fraction * n), robust to products like 0.1 * 30 = 3.0000000000000004."""
    return math.ceil(round(fraction * n, 9))
