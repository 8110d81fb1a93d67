"""Input validation helpers shared across the toolkit."""

from __future__ import annotations

import numpy as np

from .exceptions import ValidationError


def as_matrix(x, name: str = "array", dtype=np.float64) -> np.ndarray:
    """Coerce ``x`` to a finite 2-D float array, raising ValidationError otherwise."""
    arr = np.asarray(x, dtype=dtype)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ValidationError(f"{name} is empty")
    check_finite(arr, name)
    return arr


def as_vector(x, name: str = "array", dtype=np.float64) -> np.ndarray:
    arr = np.asarray(x, dtype=dtype)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ValidationError(f"{name} is empty")
    check_finite(arr, name)
    return arr


def check_finite(arr: np.ndarray, name: str = "array") -> None:
    if not np.isfinite(arr).all():
        raise ValidationError(f"{name} contains non-finite values")


def check_positive(value, name: str) -> None:
    if not value > 0:
        raise ValidationError(f"{name} must be positive, got {value!r}")


def check_views_list(views, name: str = "views") -> list:
    """Validate a multi-view input: >=2 views, equal sample counts.

    Views are expected samples-first, i.e. each element is (n_samples,
    n_features_j). Returns the views as float64 matrices.
    """
    if not isinstance(views, (list, tuple)) or len(views) < 2:
        raise ValidationError(f"{name} must be a list of >=2 arrays")
    mats = [as_matrix(v, f"{name}[{j}]") for j, v in enumerate(views)]
    n = mats[0].shape[0]
    for j, m in enumerate(mats):
        if m.shape[0] != n:
            raise ValidationError(
                f"{name}[{j}] has {m.shape[0]} samples, expected {n}"
            )
    return mats
