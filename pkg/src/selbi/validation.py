"""Input validation helpers.

Small checks shared by the estimator-style classes and the functional
API. They normalise inputs to float64 numpy arrays and raise
``ValueError`` with the offending argument named, in the spirit of
scikit-learn's ``check_array``.
"""

from __future__ import annotations

import numpy as np


def check_array_2d(x, name: str = "X", *, allow_nan: bool = False) -> np.ndarray:
    """Coerce ``x`` to a 2-d float64 array.

    Parameters
    ----------
    x : array-like
        Input to validate.
    name : str
        Argument name used in error messages.
    allow_nan : bool
        Permit NaN entries (missingness is usually coded -1, not NaN).

    Returns
    -------
    ndarray of shape (n_samples, n_features)
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got ndim={arr.ndim}")
    if arr.shape[0] == 0:
        raise ValueError(f"{name} must contain at least one row")
    if not allow_nan and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_matching_rows(a: np.ndarray, b: np.ndarray, names=("X", "y")) -> None:
    if a.shape[0] != b.shape[0]:
        raise ValueError(
            f"{names[0]} and {names[1]} have inconsistent lengths: "
            f"{a.shape[0]} vs {b.shape[0]}"
        )


def check_probability(p: float, name: str = "p", *, open_left: bool = False,
                      open_right: bool = False) -> float:
    p = float(p)
    lo_ok = p > 0.0 if open_left else p >= 0.0
    hi_ok = p < 1.0 if open_right else p <= 1.0
    if not (lo_ok and hi_ok and np.isfinite(p)):
        raise ValueError(f"{name} must be a probability, got {p}")
    return p


def check_positive(x: float, name: str = "x") -> float:
    x = float(x)
    if not (np.isfinite(x) and x > 0.0):
        raise ValueError(f"{name} must be positive and finite, got {x}")
    return x


def check_fitted(est, attrs) -> None:
    """Raise if the estimator is missing fitted attributes.

    Mirrors sklearn's NotFittedError contract without importing the
    private helper.
    """
    from sklearn.exceptions import NotFittedError

    if isinstance(attrs, str):
        attrs = [attrs]
    missing = [a for a in attrs if not hasattr(est, a)]
    if missing:
        raise NotFittedError(
            f"{type(est).__name__} is not fitted yet; call fit() first "
            f"(missing {', '.join(missing)})"
        )
