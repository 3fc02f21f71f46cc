"""Separation quality metrics."""

import numpy as np

from ..exceptions import DegeneracyError
from .._validation import check_square


def amari_index(p):
    """Amari index of the global system ``p = W @ A_true``.

    ``(1/2N) sum_i (sum_j |p_ij| / max_j |p_ij| - 1)`` plus the same sum
    over columns. It is zero exactly when `p` is a scaled signed
    permutation matrix and invariant to row and column permutations.

    Raises
    ------
    DegeneracyError
        If a row or column of `p` is entirely zero.
    """
    p = np.abs(check_square(p, "p"))
    row_max = p.max(axis=1)
    col_max = p.max(axis=0)
    if np.any(row_max == 0) or np.any(col_max == 0):
        raise DegeneracyError("amari_index: p has an all-zero row or column")
    n = p.shape[0]
    rows = np.sum(p.sum(axis=1) / row_max - 1.0)
    cols = np.sum(p.sum(axis=0) / col_max - 1.0)
    return float((rows + cols) / (2.0 * n))
