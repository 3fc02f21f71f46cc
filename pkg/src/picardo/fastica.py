"""Symmetric FastICA with sign-adapted scores.

Each iteration replaces the white signals ``Y`` by ``C_w(Y) Y`` where
``C_w = (C C^T)^{-1/2} C`` is the polar factor of

    ``C_ij = E[psi_i(y_i) y_j] - delta_ij E[psi_i'(y_i)]``.

Source ``i`` uses ``psi_i = sigma_i psi`` with ``sigma_i`` the sign of
``E[psi(y_i) y_i] - E[psi'(y_i)]``, so the diagonal of ``C`` is
non-negative and fixed points satisfy ``C_w = I`` instead of ``C_w = diag(+-1)``.
``sigma`` is the opposite of the sign vector used by Picard-O (see
:class:`picardo.model.MomentSet`), which only flips ``C`` as a whole.
"""

import logging
import time
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from ._validation import check_signs
from .exceptions import DegeneracyError, FixedPointWarning
from .linalg import polar_factor, reproject_orthogonal, whiten
from .model import (
    get_score,
    gradient_from_scores,
    moments_from_scores,
    surrogate_loss,
)
from .picard_o import (
    IterationTrace,
    RotationResult,
    SolveResult,
    SolverConfig,
    gradient_norm,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CMatrix:
    """FastICA matrix ``C`` with its symmetric and skew-symmetric parts."""

    c: np.ndarray
    c_plus: np.ndarray
    c_minus: np.ndarray

    @classmethod
    def from_c(cls, c):
        return cls(c=c, c_plus=(c + c.T) / 2.0, c_minus=(c - c.T) / 2.0)


def fastica_signs(moments):
    """Score signs giving ``C`` a non-negative diagonal."""
    return np.where(moments.k > 0.0, -1.0, 1.0)


def _c_from_scores(y, psi_y, psi_der_y, signs):
    grad = gradient_from_scores(y, psi_y, signs)
    # G already holds s_i E[psi y_j] - delta_ij
    c = grad.g + np.eye(y.shape[0])
    c[np.diag_indices_from(c)] -= signs * np.mean(psi_der_y, axis=1)
    return CMatrix.from_c(c)


def c_matrix(y, score, signs):
    """``C_ij = s_i E[psi(y_i) y_j] - delta_ij s_i E[psi'(y_i)]``.

    Off-diagonal entries match :func:`picardo.model.relative_gradient` computed
    with the same signs, hence ``C_- = G_-``.
    """
    y = np.asarray(y, dtype=np.float64)
    signs = check_signs(signs, y.shape[0])
    score = get_score(score)
    return _c_from_scores(y, score.psi(y), score.psi_der(y), signs)


def _adapted_c(y, score):
    psi_y = score.psi(y)
    psi_der_y = score.psi_der(y)
    moments = moments_from_scores(y, psi_y, psi_der_y)
    return _c_from_scores(y, psi_y, psi_der_y, fastica_signs(moments))


def fastica_step(y, score="tanh"):
    """One symmetric FastICA update.

    Returns
    -------
    c_w : ndarray of shape (N, N)
        Orthogonal polar factor of the sign-adapted ``C(y)``.
    y_next : ndarray of shape (N, T)
        ``c_w @ y``.

    Raises
    ------
    DegeneracyError
        If ``C(y)`` is singular.
    """
    y = np.asarray(y, dtype=np.float64)
    c_w = polar_factor(_adapted_c(y, get_score(score)).c)
    return c_w, c_w @ y


def _warn_if_not_pd(c_plus):
    lam_min = float(np.linalg.eigvalsh(c_plus)[0])
    if lam_min <= 0.0:
        warnings.warn(
            f"symmetric part of C is not positive definite (smallest eigenvalue "
            f"{lam_min:.3g}); FastICA fixed points and Picard-O stationary points "
            "may differ here",
            FixedPointWarning,
            stacklevel=3,
        )
    return lam_min


def fixed_point_residual(y, score="tanh"):
    """``||C_w(y) - I||_F``; zero exactly at a FastICA fixed point.

    Emits a :class:`FixedPointWarning` when the symmetric part of ``C`` has
    a non-positive eigenvalue.
    """
    y = np.asarray(y, dtype=np.float64)
    cm = _adapted_c(y, get_score(score))
    _warn_if_not_pd(cm.c_plus)
    c_w = polar_factor(cm.c)
    return float(np.linalg.norm(c_w - np.eye(y.shape[0])))


def quasi_newton_move(cm):
    """First-order FastICA move ``E`` solving ``(C_+ E + E C_+) / 2 = C_-``.

    For small ``C_-`` the polar factor of ``C`` is ``expm(E)`` up to second
    order terms, i.e. FastICA behaves as a quasi-Newton method whose
    Hessian approximation is ``E -> (C_+ E + E C_+) / 2``.
    """
    return sla.solve_sylvester(cm.c_plus, cm.c_plus, 2.0 * cm.c_minus)


def fastica_rotation(xw, config=None, rotation=None, callback=None):
    """Run sign-adapted symmetric FastICA on white signals.

    The trace has the same columns as Picard-O's; ``grad_norm`` is
    ``||G - G^T||_F`` with the Picard-O relative gradient and ``ls_count``
    is always 0. A singular ``C`` ends the run with ``converged=False``.
    """
    config = config or SolverConfig()
    score = get_score(config.score)
    n, _ = xw.shape
    rot = np.eye(n) if rotation is None else np.array(rotation, dtype=np.float64)
    y = rot @ xw
    trace = IterationTrace()
    prev_signs = None
    converged = False
    status = "max_iter"
    message = "maximum number of iterations reached"

    t0 = time.perf_counter()
    for k in range(config.max_iter + 1):
        psi_y = score.psi(y)
        psi_der_y = score.psi_der(y)
        moments = moments_from_scores(y, psi_y, psi_der_y)
        signs = moments.signs
        n_flips = 0 if prev_signs is None else int(np.sum(signs != prev_signs))
        prev_signs = signs
        g_norm = gradient_norm(gradient_from_scores(y, psi_y, signs))
        loss = surrogate_loss(y, score, signs)
        if g_norm < config.tol or k == config.max_iter:
            converged = g_norm < config.tol
            if converged:
                status = message = "converged"
            trace.append(k, g_norm, loss, time.perf_counter() - t0, 0, n_flips)
            break

        cm = _c_from_scores(y, psi_y, psi_der_y, fastica_signs(moments))
        try:
            c_w = polar_factor(cm.c)
        except DegeneracyError as exc:
            status = "failed"
            message = f"FastICA failed at iteration {k}: {exc}"
            trace.append(k, g_norm, loss, time.perf_counter() - t0, 0, n_flips)
            break
        rot = c_w @ rot
        y = c_w @ y
        if (k + 1) % config.reproject_every == 0:
            rot = reproject_orthogonal(rot)
            y = rot @ xw
        trace.append(k, g_norm, loss, time.perf_counter() - t0, 0, n_flips)
        if callback is not None:
            callback(k, rot, y)

    if not converged:
        logger.info("FastICA stopped without converging: %s", message)
    return RotationResult(rot, y, trace, converged, signs, status, message)


def fastica_solve(x, config=None, rotation=None, callback=None):
    """Separate the rows of `x` with sign-adapted symmetric FastICA.

    Same inputs and outputs as :func:`picardo.picard_o.solve`; the
    L-BFGS and line-search settings of `config` are ignored.
    """
    white = whiten(x)
    res = fastica_rotation(white.y, config, rotation, callback)
    return SolveResult(
        w=res.rotation @ white.w0,
        y=res.y,
        trace=res.trace,
        converged=res.converged,
        signs=res.signs,
        rotation=res.rotation,
        w0=white.w0,
        mean=white.mean,
        status=res.status,
        message=res.message,
    )
