"""scikit-learn compatible estimators.

Unlike the functional API (channels in rows), estimators follow the
scikit-learn convention: ``X`` has shape ``(n_samples, n_features)``.
"""

import numpy as np
from scipy.stats import ortho_group
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_is_fitted, validate_data

from .fastica import fastica_rotation
from .linalg import whiten
from .model import SCORES
from .picard_o import SolverConfig, picard_o_rotation


class _OrthogonalICA(TransformerMixin, BaseEstimator):
    """Shared fit/transform logic of the orthogonal ICA estimators."""

    def _config(self):
        raise NotImplementedError

    def _rotation(self, xw, config, rotation):
        raise NotImplementedError

    def fit(self, X, y=None):
        """Fit the unmixing matrix on `X` of shape (n_samples, n_features)."""
        self.fit_transform(X)
        return self

    def fit_transform(self, X, y=None):
        """Fit and return the estimated sources, shape (n_samples, n_features)."""
        X = validate_data(self, X, dtype=np.float64, ensure_min_samples=2, ensure_min_features=2)
        if self.score not in SCORES:
            raise ValueError(f"score must be one of {sorted(SCORES)}, got {self.score!r}")
        config = self._config()
        white = whiten(X.T)
        n = X.shape[1]
        rotation = None
        if self.random_state is not None:
            rng = check_random_state(self.random_state)
            rotation = ortho_group.rvs(n, random_state=rng) if n > 1 else np.eye(1)
        res = self._rotation(white.y, config, rotation)

        self.mean_ = white.mean
        self.whitening_ = white.w0
        self.rotation_ = res.rotation
        self.components_ = res.rotation @ white.w0
        self.mixing_ = np.linalg.pinv(self.components_)
        self.signs_ = res.signs
        self.trace_ = res.trace
        self.n_iter_ = max(len(res.trace) - 1, 0)
        self.converged_ = res.converged
        return res.y.T

    def transform(self, X):
        """Unmix `X`: ``(X - mean_) @ components_.T``."""
        check_is_fitted(self)
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return (X - self.mean_) @ self.components_.T

    def inverse_transform(self, X):
        """Map sources back to the observation space."""
        check_is_fitted(self)
        X = np.asarray(X, dtype=np.float64)
        return X @ self.mixing_.T + self.mean_


class PicardO(_OrthogonalICA):
    """ICA by preconditioned L-BFGS over rotations of the whitened data.

    Maximizes a non-Gaussian likelihood under the constraint that the
    recovered sources are decorrelated with unit variance. Sub- and
    super-Gaussian sources are both handled through per-source score signs.

    Parameters
    ----------
    max_iter : int, default=500
        Maximum number of updates.
    tol : float, default=1e-8
        Stopping threshold on ``||G - G^T||_F``.
    m : int, default=7
        L-BFGS memory size.
    kappa_min : float, default=1e-2
        Floor of the diagonal Hessian approximation.
    ls_max_halvings : int, default=10
        Maximum number of step halvings in the line search.
    score : {"tanh", "cube", "exp_quad"}, default="tanh"
        Score function.
    reproject_every : int, default=50
        Re-orthogonalize the rotation every that many updates.
    rho_literal : bool, default=False
        Use ``<step, delta>`` instead of its reciprocal in the L-BFGS memory.
    random_state : int, RandomState instance or None, default=None
        If set, the solver starts from a random rotation; otherwise from
        the identity.

    Attributes
    ----------
    components_ : ndarray of shape (n_features, n_features)
        Unmixing matrix applied to centered data.
    mixing_ : ndarray of shape (n_features, n_features)
        Pseudo-inverse of `components_`.
    mean_ : ndarray of shape (n_features,)
    whitening_ : ndarray of shape (n_features, n_features)
    rotation_ : ndarray of shape (n_features, n_features)
    signs_ : ndarray of shape (n_features,)
        Score sign of each source (+1 super-Gaussian, -1 sub-Gaussian for tanh).
    trace_ : IterationTrace
    n_iter_ : int
    converged_ : bool

    Examples
    --------
    >>> import numpy as np
    >>> from picardo import PicardO
    >>> rng = np.random.default_rng(0)
    >>> S = np.c_[rng.laplace(size=5000), rng.uniform(-1, 1, size=5000)]
    >>> X = S @ np.array([[1.0, 0.5], [0.3, 1.0]]).T
    >>> est = PicardO().fit(X)
    >>> est.converged_
    True
    """

    def __init__(
        self,
        max_iter=500,
        tol=1e-8,
        m=7,
        kappa_min=1e-2,
        ls_max_halvings=10,
        score="tanh",
        reproject_every=50,
        rho_literal=False,
        random_state=None,
    ):
        self.max_iter = max_iter
        self.tol = tol
        self.m = m
        self.kappa_min = kappa_min
        self.ls_max_halvings = ls_max_halvings
        self.score = score
        self.reproject_every = reproject_every
        self.rho_literal = rho_literal
        self.random_state = random_state

    def _config(self):
        return SolverConfig(
            max_iter=self.max_iter,
            tol=self.tol,
            memory_size=self.m,
            kappa_min=self.kappa_min,
            ls_max_halvings=self.ls_max_halvings,
            score=self.score,
            reproject_every=self.reproject_every,
            rho_literal=self.rho_literal,
        )

    def _rotation(self, xw, config, rotation):
        return picard_o_rotation(xw, config, rotation)


class SymmetricFastICA(_OrthogonalICA):
    """Symmetric FastICA with sign-adapted scores.

    Same interface and attributes as :class:`PicardO`; used as a baseline.

    Parameters
    ----------
    max_iter : int, default=500
    tol : float, default=1e-8
        Stopping threshold on ``||G - G^T||_F``, the metric shared with PicardO.
    score : {"tanh", "cube", "exp_quad"}, default="tanh"
    reproject_every : int, default=50
    random_state : int, RandomState instance or None, default=None
    """

    def __init__(self, max_iter=500, tol=1e-8, score="tanh", reproject_every=50, random_state=None):
        self.max_iter = max_iter
        self.tol = tol
        self.score = score
        self.reproject_every = reproject_every
        self.random_state = random_state

    def _config(self):
        return SolverConfig(
            max_iter=self.max_iter,
            tol=self.tol,
            score=self.score,
            reproject_every=self.reproject_every,
        )

    def _rotation(self, xw, config, rotation):
        return fastica_rotation(xw, config, rotation)
