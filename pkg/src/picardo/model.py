"""Likelihood model: score functions, moments, relative gradient and Hessians.

Signals are ``(N, T)`` arrays. ``psi`` is the score of the assumed source
density and ``rho`` its primitive (``rho' = psi``), so the surrogate
negative log-likelihood of a source is ``E[rho(y)]`` up to a constant.
Each source carries a sign ``s_i`` and uses the score ``s_i * psi``.
Signs are picked so that every source sits at a local minimum of the
surrogate loss. That requires ``E[psi'(y)] - E[psi(y) y] > 0`` with the
adapted score. For ``psi = tanh`` this quantity is positive on
super-Gaussian sources and negative on sub-Gaussian ones.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_signs
from .exceptions import DimensionError, NumericOverflowError

_LOG2 = np.log(2.0)


class Score:
    """Base class of the score functions.

    Subclasses implement ``psi``, ``psi_der``, ``primitive`` and
    ``primitive_diff``. All are elementwise and ``psi`` must be odd.
    """

    name = None

    def psi(self, u):
        raise NotImplementedError

    def psi_der(self, u):
        raise NotImplementedError

    def primitive(self, u):
        raise NotImplementedError

    def primitive_diff(self, a, b):
        """``primitive(a) - primitive(b)`` without cancellation when ``a`` is close to ``b``."""
        return self.primitive(a) - self.primitive(b)

    def __repr__(self):
        return f"{type(self).__name__}()"

    def __eq__(self, other):
        return type(self) is type(other)

    def __hash__(self):
        return hash(type(self))


class Tanh(Score):
    """``psi(u) = tanh(u)``, ``rho(u) = log cosh(u)``."""

    name = "tanh"

    def psi(self, u):
        return np.tanh(u)

    def psi_der(self, u):
        th = np.tanh(u)
        return 1.0 - th * th

    def primitive(self, u):
        au = np.abs(u)
        return au + np.log1p(np.exp(-2.0 * au)) - _LOG2

    def primitive_diff(self, a, b):
        # log(cosh(b + d) / cosh(b)) = log1p(cosh(d) - 1 + tanh(b) sinh(d))
        d = a - b
        small = np.abs(d) < 0.5
        ds = np.where(small, d, 0.0)
        half = np.sinh(ds / 2.0)
        near = np.log1p(2.0 * half * half + np.tanh(b) * np.sinh(ds))
        far = self.primitive(a) - self.primitive(b)
        return np.where(small, near, far)


class Cube(Score):
    """``psi(u) = u^3``, ``rho(u) = u^4 / 4``."""

    name = "cube"

    def psi(self, u):
        return u * u * u

    def psi_der(self, u):
        return 3.0 * u * u

    def primitive(self, u):
        u2 = u * u
        return 0.25 * u2 * u2

    def primitive_diff(self, a, b):
        return 0.25 * (a - b) * (a + b) * (a * a + b * b)


class ExpQuad(Score):
    """``psi(u) = u exp(-u^2/2)``, ``rho(u) = -exp(-u^2/2)``."""

    name = "exp_quad"

    def psi(self, u):
        return u * np.exp(-0.5 * u * u)

    def psi_der(self, u):
        u2 = u * u
        return (1.0 - u2) * np.exp(-0.5 * u2)

    def primitive(self, u):
        return -np.exp(-0.5 * u * u)

    def primitive_diff(self, a, b):
        return -np.exp(-0.5 * b * b) * np.expm1(-0.5 * (a - b) * (a + b))


SCORES = {cls.name: cls for cls in (Tanh, Cube, ExpQuad)}


def get_score(score):
    """Return a :class:`Score` instance from a name or an instance."""
    if isinstance(score, Score):
        return score
    try:
        return SCORES[score]()
    except (KeyError, TypeError):
        raise ValueError(
            f"unknown score {score!r}; expected one of {sorted(SCORES)}"
        ) from None


def _checked_mean(values, what):
    out = np.mean(values, axis=-1)
    if not np.all(np.isfinite(out)):
        raise NumericOverflowError(f"non-finite sample average in {what}")
    return out


def _signals(y):
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 2:
        raise DimensionError(f"signals must be 2-D, got ndim={y.ndim}")
    return y


@dataclass(frozen=True)
class MomentSet:
    """Per-source non-linear moments.

    Attributes
    ----------
    k : ndarray of shape (N,)
        ``E[psi'(y_i)] - E[psi(y_i) y_i]`` for the base score.
    kappa : ndarray of shape (N,)
        ``|k|``, the moments after sign adaptation.
    signs : ndarray of shape (N,)
        ``sign(k)`` with ``sign(0) = +1``.
    """

    k: np.ndarray
    kappa: np.ndarray
    signs: np.ndarray

    @classmethod
    def from_k(cls, k):
        k = np.asarray(k, dtype=np.float64)
        signs = np.where(k < 0.0, -1.0, 1.0)
        return cls(k=k, kappa=signs * k, signs=signs)


@dataclass(frozen=True)
class RelativeGradient:
    """Relative gradient ``G`` and its skew-symmetric part ``(G - G^T) / 2``."""

    g: np.ndarray
    g_minus: np.ndarray

    @classmethod
    def from_g(cls, g):
        return cls(g=g, g_minus=(g - g.T) / 2.0)


def moments_from_scores(y, psi_y, psi_der_y):
    """Same as :func:`compute_moments` with the score values already evaluated."""
    k = _checked_mean(psi_der_y, "moments") - _checked_mean(psi_y * y, "moments")
    return MomentSet.from_k(k)


def gradient_from_scores(y, psi_y, signs):
    """Same as :func:`relative_gradient` with ``psi(y)`` already evaluated."""
    n, t = y.shape
    g = (psi_y @ y.T) / t
    if not np.all(np.isfinite(g)):
        raise NumericOverflowError("non-finite sample average in relative gradient")
    g *= signs[:, None]
    g -= np.eye(n)
    return RelativeGradient.from_g(g)


def compute_moments(y, score="tanh"):
    """Moments ``k_i = E[psi'(y_i)] - E[psi(y_i) y_i]`` and the derived signs.

    The base (unsigned) score is used; signs are derived from the result.
    """
    y = _signals(y)
    score = get_score(score)
    return moments_from_scores(y, score.psi(y), score.psi_der(y))


def relative_gradient(y, score, signs):
    """Relative gradient ``G_ij = s_i E[psi(y_i) y_j] - delta_ij``."""
    y = _signals(y)
    signs = check_signs(signs, y.shape[0])
    return gradient_from_scores(y, get_score(score).psi(y), signs)


def surrogate_loss(y, score, signs):
    """Surrogate negative log-likelihood ``E[sum_i s_i rho(y_i)]``.

    The ``-log|det W|`` term is omitted because it is constant over rotations,
    and additive constants are dropped. Values are only comparable between
    signals evaluated with the same signs.
    """
    y = _signals(y)
    signs = check_signs(signs, y.shape[0])
    per_source = _checked_mean(get_score(score).primitive(y), "loss")
    return float(np.dot(signs, per_source))


def loss_change(y_new, y, score, signs):
    """``surrogate_loss(y_new) - surrogate_loss(y)``, computed sample by sample.

    Differencing before averaging keeps the result accurate when the two
    losses agree to many digits, which is the regime of a converging solver.
    """
    y_new = _signals(y_new)
    y = _signals(y)
    signs = check_signs(signs, y.shape[0])
    diff = _checked_mean(get_score(score).primitive_diff(y_new, y), "loss")
    return float(np.dot(signs, diff))


def hessian_quadratic_form(g, moments, e):
    """Second-order model of the loss change along ``W -> exp(e) W``.

    Returns ``sum_{i<j} (G_ij - G_ji) e_ij + (kappa_i + kappa_j) / 2 * e_ij^2``
    where the curvatures come from the approximate (block-diagonal) Hessian.
    """
    e = np.asarray(e, dtype=np.float64)
    gm = g.g if isinstance(g, RelativeGradient) else np.asarray(g, dtype=np.float64)
    n = gm.shape[0]
    if e.shape != (n, n):
        raise DimensionError(f"e has shape {e.shape}, expected {(n, n)}")
    iu, ju = np.triu_indices(n, k=1)
    kappa = moments.kappa
    lin = np.sum((gm[iu, ju] - gm[ju, iu]) * e[iu, ju])
    quad = np.sum(0.5 * (kappa[iu] + kappa[ju]) * e[iu, ju] ** 2)
    return float(lin + quad)


def exact_hessian_apply(y, score, signs, e, diagonal_only=False):
    """Apply the exact relative Hessian of the surrogate loss to ``e``.

    The returned matrix ``H e`` satisfies ``<e, H e> = d^2/dh^2 L(exp(h e) W)``
    at ``h = 0``, which is

        ``sum_i E[psi_i'(y_i) (e y)_i^2] + sum_ij (e^2)_ij E[psi_i(y_i) y_j]``.

    Written as a tensor, ``H_ijkl = delta_jk E[psi_i(y_i) y_l]
    + delta_ik E[psi_i'(y_i) y_j y_l]``. With ``diagonal_only=True`` the first
    term keeps only ``l = i``, which is exact once the sources are separated.

    This forms ``O(N^2 T)`` products and is meant for checking, not solving.
    """
    y = _signals(y)
    n, t = y.shape
    signs = check_signs(signs, n)
    e = np.asarray(e, dtype=np.float64)
    if e.shape != (n, n):
        raise DimensionError(f"e has shape {e.shape}, expected {(n, n)}")
    score = get_score(score)
    psi_y = signs[:, None] * score.psi(y)
    psi_der_y = signs[:, None] * score.psi_der(y)
    g_hat = psi_y @ y.T / t
    if diagonal_only:
        g_hat = np.diag(np.diag(g_hat))
    return g_hat @ e.T + (psi_der_y * (e @ y)) @ y.T / t
