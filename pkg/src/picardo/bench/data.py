"""Synthetic mixtures of independent sources.

Every random draw comes from a Philox counter-based generator. The seed
is expanded with :class:`numpy.random.SeedSequence` into one child stream
per source (in channel order) plus one stream for the mixing matrix, so a
dataset only depends on its :class:`DatasetSpec`.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.signal import lfilter

logger = logging.getLogger(__name__)

MIXINGS = ("random_gaussian_matrix", "identity")
MAX_CONDITION = 1e4
_AR_BURN_IN = 200


@dataclass(frozen=True)
class DatasetSpec:
    """Recipe for a synthetic mixture.

    Sources are listed uniform first, then Laplace, then Gaussian. With
    ``ar_coef != 0`` every source is an AR(1) process
    ``s_t = ar_coef * s_{t-1} + e_t`` driven by innovations of its family,
    which breaks the i.i.d. sample assumption of the likelihood.
    """

    n_uniform: int = 5
    n_laplace: int = 5
    n_gaussian: int = 0
    n_samples: int = 10_000
    mixing: str = "random_gaussian_matrix"
    seed: int = 0
    ar_coef: float = 0.0

    def __post_init__(self):
        counts = (self.n_uniform, self.n_laplace, self.n_gaussian)
        if min(counts) < 0:
            raise ValueError(f"source counts must be non-negative, got {counts}")
        if self.n_channels < 1:
            raise ValueError("a dataset needs at least one source")
        if self.n_samples < self.n_channels:
            raise ValueError(
                f"n_samples ({self.n_samples}) must be >= n_channels ({self.n_channels})"
            )
        if self.mixing not in MIXINGS:
            raise ValueError(f"mixing must be one of {MIXINGS}, got {self.mixing!r}")
        if not -1.0 < self.ar_coef < 1.0:
            raise ValueError(f"ar_coef must be in (-1, 1), got {self.ar_coef}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    @property
    def n_channels(self):
        return self.n_uniform + self.n_laplace + self.n_gaussian

    @property
    def families(self):
        return (
            ["uniform"] * self.n_uniform
            + ["laplace"] * self.n_laplace
            + ["gaussian"] * self.n_gaussian
        )


class SyntheticData(NamedTuple):
    x: np.ndarray
    a_true: np.ndarray
    s_true: np.ndarray
    n_redraws: int


def _generator(seed_seq):
    return np.random.Generator(np.random.Philox(seed_seq))


def _standard_draw(rng, family, size):
    """Zero-mean, unit-variance draws of `family`."""
    if family == "uniform":
        return rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), size)
    if family == "laplace":
        return rng.laplace(0.0, 1.0 / np.sqrt(2.0), size)
    return rng.standard_normal(size)


def _source(rng, family, n_samples, ar_coef):
    if ar_coef == 0.0:
        return _standard_draw(rng, family, n_samples)
    innov = _standard_draw(rng, family, n_samples + _AR_BURN_IN)
    s = lfilter([1.0], [1.0, -ar_coef], innov)[_AR_BURN_IN:]
    return s * np.sqrt(1.0 - ar_coef**2)


def gen_synthetic(spec):
    """Draw sources and mix them.

    Returns
    -------
    SyntheticData
        ``x = a_true @ s_true``. Sources have zero mean and unit variance in
        distribution. A Gaussian mixing matrix is redrawn while its
        condition number exceeds ``1e4``; ``n_redraws`` counts the redraws.
    """
    n = spec.n_channels
    children = np.random.SeedSequence(spec.seed).spawn(n + 1)
    s = np.empty((n, spec.n_samples))
    for i, family in enumerate(spec.families):
        s[i] = _source(_generator(children[i]), family, spec.n_samples, spec.ar_coef)

    n_redraws = 0
    if spec.mixing == "identity":
        a = np.eye(n)
    else:
        rng = _generator(children[n])
        a = rng.standard_normal((n, n))
        while np.linalg.cond(a) > MAX_CONDITION:
            n_redraws += 1
            a = rng.standard_normal((n, n))
        if n_redraws:
            logger.info("seed %d: mixing matrix redrawn %d time(s)", spec.seed, n_redraws)
    return SyntheticData(a @ s, a, s, n_redraws)
