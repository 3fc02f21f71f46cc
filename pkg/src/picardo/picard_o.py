"""Picard-O: preconditioned L-BFGS for ICA over the orthogonal group.

The data are whitened once, then a rotation ``O`` is refined by
multiplicative updates ``O <- expm(alpha D) O`` where ``D`` is the
two-loop L-BFGS direction built on the diagonal Hessian approximation.
"""

import logging
import time
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .lbfgs import LbfgsMemory, Preconditioner, two_loop_direction
from .linalg import expm_skew, reproject_orthogonal, whiten
from .model import (
    RelativeGradient,
    get_score,
    gradient_from_scores,
    loss_change,
    moments_from_scores,
    surrogate_loss,
)

logger = logging.getLogger(__name__)


@dataclass
class SolverConfig:
    """Parameters shared by Picard-O and the FastICA baseline.

    Attributes
    ----------
    max_iter : int
        Maximum number of updates.
    tol : float
        Stop once ``||G - G^T||_F < tol``.
    memory_size : int
        Number of L-BFGS pairs kept (Picard-O only).
    kappa_min : float
        Floor of the diagonal preconditioner (Picard-O only).
    ls_max_halvings : int
        The line search tries ``alpha = 1, 1/2, ..., 2**-ls_max_halvings``.
    score : str
        One of ``"tanh"``, ``"cube"``, ``"exp_quad"``.
    reproject_every : int
        Project the accumulated rotation back onto the orthogonal group
        every that many updates.
    rho_literal : bool
        Store ``<step, delta>`` instead of its reciprocal in the L-BFGS memory.
    """

    max_iter: int = 500
    tol: float = 1e-8
    memory_size: int = 7
    kappa_min: float = 1e-2
    ls_max_halvings: int = 10
    score: str = "tanh"
    reproject_every: int = 50
    rho_literal: bool = False

    def __post_init__(self):
        if self.max_iter < 0:
            raise ValueError(f"max_iter must be non-negative, got {self.max_iter}")
        if not 0 < self.tol < 1:
            raise ValueError(f"tol must be in (0, 1), got {self.tol}")
        if self.memory_size < 1:
            raise ValueError(f"memory_size must be positive, got {self.memory_size}")
        if not self.kappa_min > 0:
            raise ValueError(f"kappa_min must be positive, got {self.kappa_min}")
        if self.ls_max_halvings < 0:
            raise ValueError(f"ls_max_halvings must be non-negative, got {self.ls_max_halvings}")
        if self.reproject_every < 1:
            raise ValueError(f"reproject_every must be positive, got {self.reproject_every}")
        get_score(self.score)


class TraceRow(NamedTuple):
    iter: int
    grad_norm: float
    loss: float
    elapsed_s: float
    ls_count: int
    sign_flips: int


TRACE_FIELDS = TraceRow._fields


class IterationTrace:
    """Per-iteration records of a solve.

    Row ``k`` holds the gradient norm and loss at the ``k``-th iterate, the
    number of line-search halvings spent leaving it, the number of sources
    whose sign changed on arrival, and the time elapsed once the update
    was applied. The last row is the state the solver stopped at.
    """

    def __init__(self, rows=()):
        self.rows = [TraceRow(*r) for r in rows]

    def append(self, *values):
        self.rows.append(TraceRow(*values))

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def __getitem__(self, idx):
        return self.rows[idx]

    def column(self, name):
        """Column `name` as an array."""
        if name not in TRACE_FIELDS:
            raise KeyError(name)
        return np.array([getattr(r, name) for r in self.rows])

    @property
    def grad_norms(self):
        return self.column("grad_norm")

    def iterations_to(self, threshold):
        """Index of the first row with ``grad_norm < threshold``, or None."""
        below = np.flatnonzero(self.grad_norms < threshold)
        return int(below[0]) if below.size else None


@dataclass
class SolveResult:
    """Output of :func:`solve` and :func:`picardo.fastica.fastica_solve`.

    Attributes
    ----------
    w : ndarray of shape (N, N)
        Unmixing matrix ``rotation @ w0``, to be applied to centered data.
    y : ndarray of shape (N, T)
        Estimated sources ``w @ (x - mean)``.
    trace : IterationTrace
    converged : bool
    signs : ndarray of shape (N,)
        Score signs at the final iterate.
    rotation : ndarray of shape (N, N)
    w0 : ndarray of shape (N, N)
        Whitening matrix.
    mean : ndarray of shape (N,)
    status : str
        ``"converged"``, ``"max_iter"``, ``"stagnated"`` (line search could
        not decrease the loss) or ``"failed"`` (numerical breakdown).
    message : str
    """

    w: np.ndarray
    y: np.ndarray
    trace: IterationTrace
    converged: bool
    signs: np.ndarray
    rotation: np.ndarray = None
    w0: np.ndarray = None
    mean: np.ndarray = None
    status: str = "converged"
    message: str = ""

    @property
    def n_iter(self):
        """Number of updates applied."""
        return max(len(self.trace) - 1, 0)


@dataclass
class RotationResult:
    rotation: np.ndarray
    y: np.ndarray
    trace: IterationTrace
    converged: bool
    signs: np.ndarray
    status: str
    message: str = ""


class LineSearchResult(NamedTuple):
    alpha: float
    accepted: bool
    n_halvings: int


def gradient_norm(g):
    """``||G - G^T||_F``."""
    if isinstance(g, RelativeGradient):
        return 2.0 * float(np.linalg.norm(g.g_minus))
    g = np.asarray(g, dtype=np.float64)
    return float(np.linalg.norm(g - g.T))


def line_search(loss_change_at: Callable[[float], float], ls_max_halvings=10):
    """Backtracking search on the step size.

    Tries ``alpha = 1, 1/2, 1/4, ...`` and accepts the first one for which
    ``loss_change_at(alpha)``, the loss at the trial point minus the current
    loss, is strictly negative. Non-finite values count as rejections.

    Returns
    -------
    LineSearchResult
        ``accepted`` is False when no trial down to ``2**-ls_max_halvings``
        decreased the loss; ``alpha`` is then the last value tried.
    """
    alpha = 1.0
    for n_halvings in range(ls_max_halvings + 1):
        change = loss_change_at(alpha)
        if np.isfinite(change) and change < 0.0:
            return LineSearchResult(alpha, True, n_halvings)
        if n_halvings < ls_max_halvings:
            alpha /= 2.0
    return LineSearchResult(alpha, False, ls_max_halvings)


def picard_o_rotation(xw, config=None, rotation=None, callback=None):
    """Run Picard-O on already whitened signals.

    Parameters
    ----------
    xw : ndarray of shape (N, T)
        White signals, ``xw @ xw.T / T = I``.
    config : SolverConfig, optional
    rotation : ndarray of shape (N, N), optional
        Initial rotation; identity by default.
    callback : callable, optional
        Called as ``callback(k, rotation, y)`` after every update.

    Returns
    -------
    RotationResult
    """
    config = config or SolverConfig()
    score = get_score(config.score)
    n, _ = xw.shape
    rot = np.eye(n) if rotation is None else np.array(rotation, dtype=np.float64)
    y = rot @ xw

    memory = LbfgsMemory(config.memory_size, rho_literal=config.rho_literal)
    trace = IterationTrace()
    prev_signs = None
    prev_g_minus = None
    last_step = None
    converged = False
    status = "max_iter"
    message = "maximum number of iterations reached"

    t0 = time.perf_counter()
    for k in range(config.max_iter + 1):
        psi_y = score.psi(y)
        moments = moments_from_scores(y, psi_y, score.psi_der(y))
        signs = moments.signs
        n_flips = 0 if prev_signs is None else int(np.sum(signs != prev_signs))
        if n_flips:
            memory.flush()
        grad = gradient_from_scores(y, psi_y, signs)
        if last_step is not None and not n_flips:
            memory.push(last_step, grad.g_minus - prev_g_minus)
        g_norm = gradient_norm(grad)
        loss = surrogate_loss(y, score, signs)

        if g_norm < config.tol:
            converged = True
            status = message = "converged"
            trace.append(k, g_norm, loss, time.perf_counter() - t0, 0, n_flips)
            break
        if k == config.max_iter:
            trace.append(k, g_norm, loss, time.perf_counter() - t0, 0, n_flips)
            break

        precond = Preconditioner(moments.kappa, config.kappa_min)
        trial = {}

        def change_at(alpha, direction):
            y_new = expm_skew(alpha * direction) @ y
            trial["y"] = y_new
            return loss_change(y_new, y, score, signs)

        direction = two_loop_direction(grad, precond, memory)
        ls = line_search(lambda a: change_at(a, direction), config.ls_max_halvings)
        ls_count = ls.n_halvings
        if not ls.accepted and len(memory):
            logger.debug("iteration %d: line search failed, flushing memory", k)
            memory.flush()
            direction = two_loop_direction(grad, precond, memory)
            ls = line_search(lambda a: change_at(a, direction), config.ls_max_halvings)
            ls_count += ls.n_halvings + 1
        if not ls.accepted:
            status = "stagnated"
            message = (
                f"line search stagnated at iteration {k} "
                f"(gradient norm {g_norm:.3e}, tol {config.tol:.1e})"
            )
            trace.append(k, g_norm, loss, time.perf_counter() - t0, ls_count, n_flips)
            break

        step = ls.alpha * direction
        rot = expm_skew(step) @ rot
        y = trial["y"]
        if (k + 1) % config.reproject_every == 0:
            rot = reproject_orthogonal(rot)
            y = rot @ xw
        trace.append(k, g_norm, loss, time.perf_counter() - t0, ls_count, n_flips)

        last_step = step
        prev_g_minus = grad.g_minus
        prev_signs = signs
        if callback is not None:
            callback(k, rot, y)

    if not converged:
        logger.info("Picard-O stopped without converging: %s", message)
    return RotationResult(rot, y, trace, converged, signs, status, message)


def solve(x, config=None, rotation=None, callback=None):
    """Separate the rows of `x` with Picard-O.

    Parameters
    ----------
    x : array-like of shape (N, T)
        Mixed signals, channels in rows. Means are removed internally.
    config : SolverConfig, optional
    rotation : ndarray of shape (N, N), optional
        Initial rotation applied after whitening.
    callback : callable, optional
        Called as ``callback(k, rotation, y)`` after every update.

    Returns
    -------
    SolveResult

    Raises
    ------
    RankDeficiencyError
        If the covariance of `x` is not positive definite.
    """
    white = whiten(x)
    res = picard_o_rotation(white.y, config, rotation, callback)
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
