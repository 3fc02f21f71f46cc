import numpy as np
import pytest

from conftest import mixture, random_orthogonal
from picardo import SolverConfig, solve
from picardo.bench.metrics import amari_index
from picardo.exceptions import RankDeficiencyError, WhiteningWarning
from picardo.linalg import orthogonality_error, whiten
from picardo.picard_o import TRACE_FIELDS, IterationTrace, line_search, picard_o_rotation


class TestLineSearch:
    def test_accepts_unit_step(self):
        res = line_search(lambda a: -1.0)
        assert (res.alpha, res.accepted, res.n_halvings) == (1.0, True, 0)

    def test_scripted_quarter(self):
        calls = []

        def change(alpha):
            calls.append(alpha)
            return -1.0 if alpha <= 0.25 else 1.0

        res = line_search(change)
        assert res.accepted and res.alpha == 0.25 and res.n_halvings == 2
        assert calls == [1.0, 0.5, 0.25]

    def test_zero_change_rejected(self):
        res = line_search(lambda a: 0.0, ls_max_halvings=3)
        assert not res.accepted
        assert res.alpha == 2.0**-3

    def test_nan_rejected(self):
        res = line_search(lambda a: np.nan if a > 0.5 else -1.0)
        assert res.accepted and res.alpha == 0.5


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"max_iter": -1},
            {"tol": 0.0},
            {"memory_size": 0},
            {"kappa_min": 0.0},
            {"ls_max_halvings": -1},
            {"reproject_every": 0},
            {"score": "nope"},
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ValueError):
            SolverConfig(**kwargs)


class TestSolver:
    def test_max_iter_zero(self):
        data = mixture(0, n=4, t=2000)
        res = solve(data.x, SolverConfig(max_iter=0))
        assert len(res.trace) == 1 and res.n_iter == 0
        assert res.status == "max_iter" and not res.converged
        np.testing.assert_allclose(res.rotation, np.eye(4))

    def test_trace_schema(self):
        res = solve(mixture(1, n=4, t=5000).x)
        assert TRACE_FIELDS == ("iter", "grad_norm", "loss", "elapsed_s", "ls_count", "sign_flips")
        assert [r.iter for r in res.trace] == list(range(len(res.trace)))
        assert np.all(np.diff(res.trace.column("elapsed_s")) >= 0)
        assert res.converged and res.trace[-1].grad_norm < 1e-8

    def test_outputs_consistent(self):
        data = mixture(2, n=4, t=5000)
        res = solve(data.x)
        np.testing.assert_allclose(res.w, res.rotation @ res.w0)
        np.testing.assert_allclose(res.y, res.w @ (data.x - res.mean[:, None]), atol=1e-9)
        assert orthogonality_error(res.rotation) < 1e-12

    def test_whiteness_every_iterate(self):
        data = mixture(3, n=6, t=5000)
        t = data.x.shape[1]
        worst = []
        solve(data.x, callback=lambda k, rot, y: worst.append(np.linalg.norm(y @ y.T / t - np.eye(6))))
        assert worst and max(worst) <= 1e-8

    def test_monotone_loss_at_fixed_signs(self):
        data = mixture(4, n=6, t=5000)
        res = solve(data.x, SolverConfig(tol=1e-10))
        loss = res.trace.column("loss")
        flips = res.trace.column("sign_flips")
        for k in range(1, len(loss)):
            if flips[k] == 0:
                assert loss[k] < loss[k - 1] + 1e-12

    def test_permutation_equivariance(self):
        data = mixture(6, n=5, t=5000)
        perm = np.array([3, 0, 4, 1, 2])
        a = solve(data.x)
        b = solve(data.x[perm])
        # same sources up to sign and order, and the same number of iterations give or take
        corr = np.abs(a.y @ b.y.T / data.x.shape[1])
        np.testing.assert_allclose(np.sort(corr.max(axis=1)), np.ones(5), atol=1e-6)
        assert b.converged

    def test_two_sources_amari(self):
        data = mixture(7, n=2, t=10_000)
        res = solve(data.x)
        assert res.converged
        assert amari_index(res.w @ data.a_true) < 1e-2

    def test_random_start(self):
        data = mixture(8, n=4, t=5000)
        rot = random_orthogonal(np.random.default_rng(1), 4)
        res = solve(data.x, rotation=rot)
        assert res.converged
        assert amari_index(res.w @ data.a_true) < 0.1

    def test_reprojection_keeps_rotation(self):
        data = mixture(9, n=4, t=3000)
        res = solve(data.x, SolverConfig(reproject_every=1))
        assert res.converged and orthogonality_error(res.rotation) < 1e-13

    def test_stagnation_status(self):
        # unreachable tolerance: the line search eventually cannot decrease the loss
        data = mixture(10, n=3, t=2000)
        res = solve(data.x, SolverConfig(tol=1e-300, max_iter=300))
        assert not res.converged
        assert res.status in ("stagnated", "max_iter")
        assert res.trace[-1].grad_norm < 1e-10

    @pytest.mark.parametrize("score", ["cube", "exp_quad"])
    def test_other_scores(self, score):
        res = solve(mixture(11, n=4, t=5000).x, SolverConfig(score=score, max_iter=300))
        assert res.trace[-1].grad_norm < res.trace[0].grad_norm

    def test_rank_deficient_input(self):
        x = np.random.default_rng(0).standard_normal((2, 100))
        with pytest.warns(WhiteningWarning):
            solve(np.vstack([x, x[0]]), SolverConfig(max_iter=5))
        with pytest.raises(RankDeficiencyError):
            solve(np.vstack([x, np.ones(100)]))

    def test_iterations_to(self):
        tr = IterationTrace([(0, 1.0, 0, 0, 0, 0), (1, 1e-7, 0, 0, 0, 0)])
        assert tr.iterations_to(1e-6) == 1
        assert tr.iterations_to(1e-9) is None
        with pytest.raises(KeyError):
            tr.column("bogus")

    def test_whiten_then_rotate_equals_solve(self):
        data = mixture(12, n=4, t=3000)
        res = solve(data.x)
        rot = picard_o_rotation(whiten(data.x).y)
        np.testing.assert_allclose(rot.rotation, res.rotation, atol=1e-12)
