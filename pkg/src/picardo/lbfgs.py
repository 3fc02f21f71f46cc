"""Preconditioned two-loop L-BFGS recursion on skew-symmetric matrices."""

from collections import deque
from dataclasses import dataclass

import numpy as np

from .linalg import frobenius_inner
from .model import RelativeGradient


@dataclass(frozen=True)
class Preconditioner:
    """Diagonal curvature ``max((kappa_i + kappa_j) / 2, kappa_min)``."""

    kappa: np.ndarray
    kappa_min: float = 1e-2

    def __post_init__(self):
        if not self.kappa_min > 0:
            raise ValueError(f"kappa_min must be positive, got {self.kappa_min}")

    def curvature(self):
        kappa = np.asarray(self.kappa, dtype=np.float64)
        return np.maximum((kappa[:, None] + kappa[None, :]) / 2.0, self.kappa_min)

    def apply_inverse(self, q):
        return q / self.curvature()


class LbfgsMemory:
    """Last ``capacity`` (step, gradient difference, rho) triplets, oldest first.

    By default ``rho = 1 / <step, delta>``, as in standard L-BFGS. With
    ``rho_literal=True`` the memory stores ``rho = <step, delta>`` instead;
    this only exists for comparison and does not give a quasi-Newton
    direction in general.
    """

    def __init__(self, capacity=7, rho_literal=False):
        if capacity < 1:
            raise ValueError(f"capacity must be positive, got {capacity}")
        self.capacity = int(capacity)
        self.rho_literal = rho_literal
        self.entries = deque(maxlen=self.capacity)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def push(self, e, delta):
        """Store a step and the matching change of ``(G - G^T) / 2``.

        Pairs with ``<e, delta> <= 1e-12 ||e|| ||delta||`` carry no usable
        curvature and are skipped. Returns whether the pair was stored.
        """
        e = np.array(e, dtype=np.float64)
        delta = np.array(delta, dtype=np.float64)
        curv = frobenius_inner(e, delta)
        if not curv > 1e-12 * np.linalg.norm(e) * np.linalg.norm(delta):
            return False
        rho = curv if self.rho_literal else 1.0 / curv
        self.entries.append((e, delta, rho))
        return True

    def flush(self):
        self.entries.clear()


def two_loop_direction(g, precond, memory):
    """Search direction from the preconditioned two-loop recursion.

    Parameters
    ----------
    g : RelativeGradient or ndarray
        Current relative gradient (only its skew part is used).
    precond : Preconditioner
        Diagonal initial Hessian.
    memory : LbfgsMemory

    Returns
    -------
    d : ndarray of shape (N, N)
        Skew-symmetric descent direction. With an empty memory,
        ``d_ij = -(G_ij - G_ji) / 2 / max((kappa_i + kappa_j) / 2, kappa_min)``.
    """
    if isinstance(g, RelativeGradient):
        g_minus = g.g_minus
    else:
        g = np.asarray(g, dtype=np.float64)
        g_minus = (g - g.T) / 2.0
    q = -g_minus
    alphas = []
    for e_l, delta_l, rho_l in reversed(memory.entries):
        a_l = rho_l * frobenius_inner(e_l, q)
        q = q - a_l * delta_l
        alphas.append(a_l)
    d = precond.apply_inverse(q)
    for (e_l, delta_l, rho_l), a_l in zip(memory.entries, reversed(alphas)):
        beta = rho_l * frobenius_inner(delta_l, d)
        d = d + e_l * (a_l - beta)
    return d
