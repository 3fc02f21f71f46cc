"""Dense linear algebra for ICA under a whiteness constraint.

Everything here works on plain ``numpy`` arrays. Skew-symmetric and
orthogonal matrices are ordinary ``(N, N)`` arrays; the functions that
produce them guarantee the structure.
"""

import warnings
from typing import NamedTuple

import numpy as np
from scipy import linalg

from ._validation import check_signals, check_square
from .exceptions import (
    DegeneracyError,
    DimensionError,
    RankDeficiencyError,
    WhiteningWarning,
)

#: Relative eigenvalue floor used by :func:`whiten` when none is given.
DEFAULT_EIG_FLOOR = 1e-10


def frobenius_inner(a, b):
    """Frobenius inner product ``sum_ij a_ij b_ij``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.dot(a.ravel(), b.ravel()))


def skew(a):
    """Skew-symmetric part ``(a - a.T) / 2``; exactly antisymmetric in floating point."""
    a = np.asarray(a, dtype=np.float64)
    return (a - a.T) / 2.0


def sym(a):
    """Symmetric part ``(a + a.T) / 2``."""
    a = np.asarray(a, dtype=np.float64)
    return (a + a.T) / 2.0


def orthogonality_error(q):
    """``||q q^T - I||_F``."""
    q = np.asarray(q, dtype=np.float64)
    return float(np.linalg.norm(q @ q.T - np.eye(q.shape[0])))


def sym_inv_sqrt(c, eig_floor=0.0, return_floored=False):
    """Inverse square root of a symmetric positive-definite matrix.

    Parameters
    ----------
    c : ndarray of shape (N, N)
        Symmetric matrix (asymmetry up to ``1e-10`` relative is tolerated and
        removed).
    eig_floor : float, default=0.0
        Eigenvalues below this value are clamped to it before inversion.
    return_floored : bool, default=False
        Also return the number of clamped eigenvalues.

    Returns
    -------
    m : ndarray of shape (N, N)
        Symmetric matrix with ``m @ c @ m = I`` when nothing was clamped.
    n_floored : int
        Only returned if `return_floored` is True.

    Raises
    ------
    ValueError
        If `c` is not symmetric.
    RankDeficiencyError
        If an eigenvalue of `c` is not positive.
    """
    c = check_square(c, "c")
    scale = max(1.0, float(np.max(np.abs(c))))
    if np.max(np.abs(c - c.T)) > 1e-10 * scale:
        raise ValueError("sym_inv_sqrt requires a symmetric matrix")
    eigval, eigvec = np.linalg.eigh(sym(c))
    if eigval[0] <= 0.0:
        raise RankDeficiencyError(
            f"matrix is not positive definite: smallest eigenvalue is {eigval[0]:.6g}"
        )
    n_floored = int(np.sum(eigval < eig_floor))
    eigval = np.maximum(eigval, eig_floor)
    m = (eigvec / np.sqrt(eigval)) @ eigvec.T
    m = sym(m)
    if return_floored:
        return m, n_floored
    return m


class Whitened(NamedTuple):
    """Output of :func:`whiten`."""

    w0: np.ndarray
    y: np.ndarray
    mean: np.ndarray
    n_floored: int


def whiten(x, eig_floor=None):
    """Center and sphere a signal matrix.

    Parameters
    ----------
    x : array-like of shape (N, T)
        Channels in rows.
    eig_floor : float, optional
        Absolute eigenvalue floor for the covariance. Defaults to
        ``1e-10`` times the largest covariance eigenvalue.

    Returns
    -------
    Whitened
        ``w0`` the symmetric sphering matrix ``(X X^T / T)^{-1/2}`` of the
        centered data, ``y = w0 @ (x - mean)``, the removed per-channel
        ``mean``, and ``n_floored``, the number of clamped eigenvalues (a
        :class:`WhiteningWarning` is emitted when it is non-zero).
    """
    x = check_signals(x)
    n, t = x.shape
    mean = x.mean(axis=1)
    xc = x - mean[:, None]
    # SVD of the data rather than eigh of the covariance: y = sqrt(T) U V^T is
    # white to machine precision even for badly conditioned mixtures.
    u, s, vt = np.linalg.svd(xc, full_matrices=False)
    eigval = s * s / t
    if eig_floor is None:
        eig_floor = DEFAULT_EIG_FLOOR * float(eigval[0])
    if eigval[-1] <= 0.0:
        raise RankDeficiencyError(
            f"covariance is not positive definite: smallest eigenvalue is {eigval[-1]:.6g}"
        )
    n_floored = int(np.sum(eigval < eig_floor))
    w0 = sym((u / np.sqrt(np.maximum(eigval, eig_floor))) @ u.T)
    if n_floored:
        warnings.warn(
            f"{n_floored} covariance eigenvalue(s) below {eig_floor:.3g} were floored; "
            "the data are close to rank deficient",
            WhiteningWarning,
            stacklevel=2,
        )
        y = w0 @ xc
    else:
        y = np.sqrt(t) * (u @ vt)
    return Whitened(w0, y, mean, n_floored)


def expm_skew(e):
    """Exponential of a skew-symmetric matrix.

    Uses scaling and squaring with a Pade approximant, so the result is a
    rotation: orthogonal to about ``1e-14`` and with determinant +1.
    """
    e = check_square(e, "e")
    if not np.all(np.isfinite(e)):
        raise ValueError("expm_skew got non-finite entries")
    return linalg.expm(e)


def polar_factor(c):
    """Orthogonal polar factor ``(c c^T)^{-1/2} c``.

    Computed from the SVD ``c = U S V^T`` as ``U V^T``. This is the
    orthogonal matrix closest to `c` in Frobenius norm.

    Raises
    ------
    DegeneracyError
        If `c` is numerically singular.
    """
    c = check_square(c, "c")
    u, s, vt = np.linalg.svd(c)
    if not np.all(np.isfinite(s)) or s[-1] <= 1e-12 * s[0]:
        raise DegeneracyError(
            f"matrix is singular: singular values range from {s[-1]:.3g} to {s[0]:.3g}"
        )
    return u @ vt


def reproject_orthogonal(q):
    """Map a nearly orthogonal matrix back onto the orthogonal group.

    Raises
    ------
    DegeneracyError
        If ``||q q^T - I||_F >= 0.5``.
    """
    q = check_square(q, "q")
    err = orthogonality_error(q)
    if not err < 0.5:
        raise DegeneracyError(f"matrix is too far from orthogonal (||qq^T - I|| = {err:.3g})")
    return polar_factor(q)
