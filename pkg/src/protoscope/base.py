"""Estimator plumbing and input validation helpers."""

from __future__ import annotations

import inspect

import numpy as np


class NotFittedError(RuntimeError):
    pass


class BaseEstimator:
    """Minimal get_params/set_params mixin (scikit-learn calling convention).

    Subclasses must take all hyper-parameters as explicit keyword arguments
    of ``__init__`` and store them under the same attribute names.
    """

    @classmethod
    def _param_names(cls):
        sig = inspect.signature(cls.__init__)
        return [p.name for p in sig.parameters.values() if p.name != "self"]

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = set(self._param_names())
        for name, value in params.items():
            if name not in valid:
                raise ValueError(f"invalid parameter {name!r} for {type(self).__name__}")
            setattr(self, name, value)
        return self

    def _check_fitted(self, attr: str):
        if not hasattr(self, attr):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet (missing {attr!r})")


def check_array(X, *, dtype=np.float64, ndim: int | None = None, name: str = "X") -> np.ndarray:
    arr = np.asarray(X, dtype=dtype)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_similarity_matrix(W, *, sym_tol: float = 1e-12, name: str = "W") -> np.ndarray:
    """Validate a square, nonnegative, symmetric similarity matrix."""
    arr = check_array(W, ndim=2, name=name)
    n, m = arr.shape
    if n != m:
        raise ValueError(f"{name} must be square, got {arr.shape}")
    if np.any(arr < 0):
        raise ValueError(f"{name} has negative entries")
    asym = np.max(np.abs(arr - arr.T)) if n else 0.0
    if asym > sym_tol:
        raise ValueError(f"{name} is not symmetric (max |W - W.T| = {asym:.3e})")
    return arr


def check_labels(labels, n: int) -> np.ndarray:
    arr = np.asarray(labels)
    if arr.shape != (n,):
        raise ValueError(f"labels must have shape ({n},), got {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        raise ValueError("labels must be integers")
    return arr.astype(np.int64)
