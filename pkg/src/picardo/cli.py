"""Command-line interface: ``picardo {run,bench,gen}``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
``PICARDO_THREADS`` caps the number of BLAS/OpenMP threads.
"""

import argparse
import logging
import os
import sys
from contextlib import nullcontext

import numpy as np
from scipy.stats import ortho_group

from .bench.data import DatasetSpec, gen_synthetic
from .bench.io import (
    read_matrix,
    write_matrix_bin,
    write_matrix_csv,
    write_records_csv,
    write_trace_csv,
)
from .bench.runner import (
    PRESETS,
    RunRecord,
    median_iterations_to,
    preset_specs,
    run_benchmark,
)
from .bench.svg import render_svg
from .exceptions import DataFormatError, DimensionError, NumericalError
from .fastica import fastica_solve
from .model import SCORES
from .picard_o import SolverConfig, solve

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

logger = logging.getLogger("picardo")


def _u64(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"{text} is not an unsigned 64-bit integer")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text} must be a positive integer")
    return value


def _add_solver_args(p, tol=1e-8, max_iter=500):
    p.add_argument("--score", choices=sorted(SCORES), default="tanh")
    p.add_argument("--tol", type=float, default=tol)
    p.add_argument("--max-iter", type=int, default=max_iter)
    p.add_argument("--memory", type=_positive_int, default=7, help="L-BFGS memory size")
    p.add_argument("--kappa-min", type=float, default=1e-2)
    p.add_argument(
        "--rho-literal",
        action="store_true",
        help="store <step, delta> rather than its reciprocal in the L-BFGS memory",
    )


def _config(args):
    return SolverConfig(
        max_iter=args.max_iter,
        tol=args.tol,
        memory_size=args.memory,
        kappa_min=args.kappa_min,
        score=args.score,
        rho_literal=args.rho_literal,
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="picardo", description="Orthogonal ICA with Picard-O and a FastICA baseline."
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="separate the channels of a signal file")
    run.add_argument("--input", required=True, help="CSV or PICO binary, channels in rows")
    run.add_argument("--algo", choices=("picardo", "fastica"), default="picardo")
    _add_solver_args(run)
    run.add_argument(
        "--seed", type=_u64, default=None, help="start from a random rotation drawn with this seed"
    )
    run.add_argument("--output", help="unmixed signals (CSV, or PICO if it ends in .bin)")
    run.add_argument("--trace", help="per-iteration trace CSV")

    bench = sub.add_parser("bench", help="compare Picard-O and FastICA on synthetic data")
    bench.add_argument("--preset", choices=sorted(PRESETS), default="synthetic-small")
    bench.add_argument("--n", type=_positive_int, default=None)
    bench.add_argument("--t", type=_positive_int, default=None)
    bench.add_argument("--repeats", type=_positive_int, default=None)
    bench.add_argument("--algos", nargs="+", choices=("picardo", "fastica"), default=["picardo", "fastica"])
    _add_solver_args(bench)
    bench.add_argument("--seed", type=_u64, default=0)
    bench.add_argument("--jobs", type=_positive_int, default=1)
    bench.add_argument("--out", required=True, help="one summary line per run (CSV)")
    bench.add_argument("--trace", help="all trace rows (CSV)")
    bench.add_argument("--svg", help="convergence curves")

    gen = sub.add_parser("gen", help="generate a synthetic mixture")
    gen.add_argument("--n", type=_positive_int, required=True)
    gen.add_argument("--t", type=_positive_int, required=True)
    gen.add_argument("--uniform", type=int, default=0)
    gen.add_argument("--laplace", type=int, default=0)
    gen.add_argument("--gaussian", type=int, default=0)
    gen.add_argument("--ar-coef", type=float, default=0.0)
    gen.add_argument("--identity", action="store_true", help="do not mix the sources")
    gen.add_argument("--seed", type=_u64, default=0)
    gen.add_argument("--out", required=True, help="mixture (PICO if it ends in .bin, else CSV)")
    gen.add_argument("--mixing-out", help="mixing matrix (CSV)")
    gen.add_argument("--sources-out", help="true sources (same format rules as --out)")
    return parser


def _write_matrix(path, x):
    if str(path).endswith(".bin"):
        write_matrix_bin(path, x)
    else:
        write_matrix_csv(path, x)


def _cmd_run(args, parser):
    x = read_matrix(args.input)
    config = _config(args)
    rotation = None
    if args.seed is not None:
        rotation = ortho_group.rvs(x.shape[0], random_state=np.random.default_rng(args.seed))
    solver = solve if args.algo == "picardo" else fastica_solve
    res = solver(x, config, rotation)
    if args.output:
        _write_matrix(args.output, res.y)
    if args.trace:
        trace = res.trace
        rec = RunRecord(
            args.algo, args.seed or 0, res.converged, len(trace), trace[-1].elapsed_s,
            trace[-1].grad_norm, np.nan, trace, res.message,
        )
        write_trace_csv([rec], args.trace)
    print(
        f"{args.algo}: {res.message}; {res.n_iter} iterations, "
        f"||G - G^T|| = {res.trace[-1].grad_norm:.3e}"
    )
    if res.status == "failed":
        raise NumericalError(res.message)
    return EXIT_OK


def _cmd_bench(args, parser):
    specs = preset_specs(args.preset, n=args.n, t=args.t, repeats=args.repeats, seed=args.seed)
    records = run_benchmark(specs, _config(args), args.algos, n_jobs=args.jobs)
    write_records_csv(records, args.out)
    if args.trace:
        write_trace_csv(records, args.trace)
    if args.svg:
        render_svg(records, args.svg)
    for algo in args.algos:
        recs = [r for r in records if r.algorithm == algo]
        n_conv = sum(r.converged for r in recs)
        print(
            f"{algo}: {n_conv}/{len(recs)} converged, median iterations "
            f"{np.median([r.iterations for r in recs]):.0f}, median to 1e-6 "
            f"{median_iterations_to(records, algo, 1e-6):.0f}, median amari "
            f"{np.nanmedian([r.amari for r in recs]):.3g}"
        )
    if set(args.algos) == {"picardo", "fastica"}:
        ratio = median_iterations_to(records, "picardo", 1e-6) / median_iterations_to(
            records, "fastica", 1e-6
        )
        print(f"median iterations to 1e-6, picardo / fastica: {ratio:.3g}")
    return EXIT_OK


def _cmd_gen(args, parser):
    if args.uniform + args.laplace + args.gaussian != args.n:
        parser.error("--uniform + --laplace + --gaussian must equal --n")
    try:
        spec = DatasetSpec(
            n_uniform=args.uniform,
            n_laplace=args.laplace,
            n_gaussian=args.gaussian,
            n_samples=args.t,
            mixing="identity" if args.identity else "random_gaussian_matrix",
            seed=args.seed,
            ar_coef=args.ar_coef,
        )
    except ValueError as exc:
        parser.error(str(exc))
    data = gen_synthetic(spec)
    _write_matrix(args.out, data.x)
    if args.mixing_out:
        write_matrix_csv(args.mixing_out, data.a_true)
    if args.sources_out:
        _write_matrix(args.sources_out, data.s_true)
    return EXIT_OK


_COMMANDS = {"run": _cmd_run, "bench": _cmd_bench, "gen": _cmd_gen}


def _thread_limit():
    value = os.environ.get("PICARDO_THREADS")
    if not value:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=max(int(value), 1))


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        with _thread_limit():
            return _COMMANDS[args.command](args, parser)
    except (DataFormatError, DimensionError, OSError) as exc:
        print(f"picardo: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"picardo: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"picardo: invalid argument: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
