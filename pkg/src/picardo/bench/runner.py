"""Benchmark harness comparing Picard-O and FastICA on synthetic mixtures."""

import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..exceptions import NumericalError
from ..fastica import fastica_rotation
from ..linalg import whiten
from ..picard_o import IterationTrace, SolverConfig, picard_o_rotation
from .data import DatasetSpec, gen_synthetic
from .metrics import amari_index

logger = logging.getLogger(__name__)

ALGORITHMS = {"picardo": picard_o_rotation, "fastica": fastica_rotation}

PRESETS = {
    "synthetic-small": dict(n=10, t=10_000, repeats=10, ar_coef=0.0),
    "synthetic-paper": dict(n=50, t=10_000, repeats=100, ar_coef=0.0),
    "ar1-misspec": dict(n=10, t=10_000, repeats=10, ar_coef=0.9),
}


@dataclass
class RunRecord:
    """Outcome of one algorithm on one dataset.

    ``iterations`` is the number of trace rows (states visited, including
    the initial one) and ``seconds`` the last trace timestamp.
    """

    algorithm: str
    seed: int
    converged: bool
    iterations: int
    seconds: float
    final_grad_norm: float
    amari: float
    trace: IterationTrace
    message: str = ""

    def iterations_to(self, threshold):
        return self.trace.iterations_to(threshold)


def preset_specs(name, n=None, t=None, repeats=None, seed=0):
    """Dataset specs of a named preset; `n`, `t`, `repeats` override its size.

    Half the sources are uniform and half Laplace (the extra one is Laplace
    for odd `n`). Repeat ``r`` uses seed ``seed + r``.
    """
    try:
        preset = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}") from None
    n = preset["n"] if n is None else n
    t = preset["t"] if t is None else t
    repeats = preset["repeats"] if repeats is None else repeats
    return [
        DatasetSpec(
            n_uniform=n // 2,
            n_laplace=n - n // 2,
            n_samples=t,
            seed=seed + r,
            ar_coef=preset["ar_coef"],
        )
        for r in range(repeats)
    ]


def _checksum(a):
    return hashlib.sha256(np.ascontiguousarray(a).tobytes()).hexdigest()[:16]


def _run_one(algorithm, spec, xw, w0, a_true, config):
    solver = ALGORITHMS[algorithm]
    try:
        res = solver(xw, config)
    except NumericalError as exc:
        logger.warning("%s failed on seed %d: %s", algorithm, spec.seed, exc)
        return RunRecord(algorithm, spec.seed, False, 0, 0.0, np.nan, np.nan, IterationTrace(), str(exc))
    trace = res.trace
    try:
        amari = amari_index(res.rotation @ w0 @ a_true)
    except NumericalError:
        amari = np.nan
    return RunRecord(
        algorithm=algorithm,
        seed=spec.seed,
        converged=res.converged,
        iterations=len(trace),
        seconds=float(trace[-1].elapsed_s) if len(trace) else 0.0,
        final_grad_norm=float(trace[-1].grad_norm) if len(trace) else np.nan,
        amari=amari,
        trace=trace,
        message=res.message,
    )


def _run_spec(spec, config, algorithms):
    data = gen_synthetic(spec)
    white = whiten(data.x)
    logger.info("seed %d: whitened input checksum %s", spec.seed, _checksum(white.y))
    return [
        _run_one(algo, spec, white.y, white.w0, data.a_true, config) for algo in algorithms
    ]


def run_benchmark(specs, config=None, algorithms=("picardo", "fastica"), n_jobs=1):
    """Run every algorithm on every dataset.

    Both algorithms see the same whitened matrix for a given dataset.
    Failures are recorded with ``converged=False`` and never abort the batch.
    Records are sorted by ``(algorithm, seed)``.
    """
    specs = list(specs)
    if not specs:
        raise ValueError("run_benchmark needs at least one dataset spec")
    algorithms = list(algorithms)
    unknown = set(algorithms) - set(ALGORITHMS)
    if unknown:
        raise ValueError(f"unknown algorithm(s) {sorted(unknown)}")
    if not algorithms:
        return []
    config = config or SolverConfig()
    if n_jobs == 1:
        batches = [_run_spec(s, config, algorithms) for s in specs]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            batches = list(pool.map(lambda s: _run_spec(s, config, algorithms), specs))
    records = [rec for batch in batches for rec in batch]
    return sorted(records, key=lambda r: (r.algorithm, r.seed))


def _forward_fill(values, length):
    out = np.full(length, np.nan)
    out[: len(values)] = values
    if len(values):
        out[len(values):] = values[-1]
    return out


def aggregate_curves(records, n_time=200):
    """Median and 10/90 percentile gradient-norm curves per algorithm.

    Curves are aligned on the iteration index, and on a common time grid
    (log-linear interpolation). A run that already stopped keeps its last
    value.

    Returns
    -------
    dict
        ``{algorithm: {"iter": ..., "median": ..., "p10": ..., "p90": ...,
        "time": ..., "time_median": ..., "time_p10": ..., "time_p90": ...}}``
    """
    out = {}
    for algo in sorted({r.algorithm for r in records}):
        runs = [r for r in records if r.algorithm == algo and len(r.trace)]
        if not runs:
            continue
        length = max(len(r.trace) for r in runs)
        curves = np.array([_forward_fill(r.trace.grad_norms, length) for r in runs])
        t_max = max(r.trace.column("elapsed_s")[-1] for r in runs)
        grid = np.linspace(0.0, t_max, n_time) if t_max > 0 else np.zeros(1)
        tcurves = []
        for r in runs:
            ts = r.trace.column("elapsed_s")
            lg = np.log10(np.maximum(r.trace.grad_norms, 1e-300))
            tcurves.append(10.0 ** np.interp(grid, ts, lg, left=lg[0], right=lg[-1]))
        tcurves = np.array(tcurves)
        out[algo] = {
            "iter": np.arange(length),
            "median": np.median(curves, axis=0),
            "p10": np.percentile(curves, 10, axis=0),
            "p90": np.percentile(curves, 90, axis=0),
            "time": grid,
            "time_median": np.median(tcurves, axis=0),
            "time_p10": np.percentile(tcurves, 10, axis=0),
            "time_p90": np.percentile(tcurves, 90, axis=0),
        }
    return out


def median_iterations_to(records, algorithm, threshold):
    """Median iteration index at which `algorithm` first went below `threshold`.

    Runs that never reached it count as their trace length (a lower bound).
    """
    counts = []
    for r in records:
        if r.algorithm != algorithm:
            continue
        k = r.iterations_to(threshold)
        counts.append(len(r.trace) if k is None else k)
    return float(np.median(counts)) if counts else np.nan

