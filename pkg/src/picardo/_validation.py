"""Input checks shared by the numerical modules."""

import numpy as np

from .exceptions import DataFormatError, DimensionError


def check_signals(x, min_channels=2, name="x"):
    """Return `x` as a finite float64 ``(N, T)`` array with ``T >= N``.

    Rows are channels and columns are samples.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"{name} must be 2-D (channels x samples), got ndim={x.ndim}")
    n, t = x.shape
    if n < min_channels:
        raise DimensionError(f"{name} needs at least {min_channels} channels, got {n}")
    if t < n:
        raise DimensionError(f"{name} has fewer samples ({t}) than channels ({n})")
    if not np.all(np.isfinite(x)):
        raise DataFormatError(f"{name} contains non-finite values")
    return np.ascontiguousarray(x)


def check_square(a, name="a"):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be a square matrix, got shape {a.shape}")
    return a


def check_signs(signs, n):
    signs = np.asarray(signs, dtype=np.float64)
    if signs.shape != (n,):
        raise DimensionError(f"expected {n} signs, got shape {signs.shape}")
    return signs
