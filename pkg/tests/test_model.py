import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from conftest import random_skew, white_sources
from picardo.exceptions import DimensionError, NumericOverflowError
from picardo.linalg import expm_skew, frobenius_inner
from picardo.model import (
    SCORES,
    MomentSet,
    compute_moments,
    exact_hessian_apply,
    get_score,
    hessian_quadratic_form,
    loss_change,
    relative_gradient,
    surrogate_loss,
)

ALL_SCORES = sorted(SCORES)


def quad_k(pdf, lo, hi):
    """``E[1 - tanh^2] - E[tanh(u) u]`` by adaptive quadrature."""
    f = lambda u: (1.0 - np.tanh(u) ** 2 - np.tanh(u) * u) * pdf(u)  # noqa: E731
    return integrate.quad(f, lo, hi, limit=200)[0]


class TestScores:
    @pytest.mark.parametrize("name", ALL_SCORES)
    def test_derivatives_by_finite_difference(self, name):
        score = get_score(name)
        u = np.linspace(-4.0, 4.0, 81)
        h = 1e-6
        np.testing.assert_allclose(
            (score.primitive(u + h) - score.primitive(u - h)) / (2 * h), score.psi(u), atol=1e-7
        )
        np.testing.assert_allclose(
            (score.psi(u + h) - score.psi(u - h)) / (2 * h), score.psi_der(u), atol=1e-6
        )

    @pytest.mark.parametrize("name", ALL_SCORES)
    def test_odd_psi(self, name):
        u = np.linspace(0.0, 5.0, 11)
        score = get_score(name)
        np.testing.assert_array_equal(score.psi(-u), -score.psi(u))

    @pytest.mark.parametrize("name", ALL_SCORES)
    def test_primitive_diff_matches_plain_difference(self, name, rng):
        score = get_score(name)
        b = rng.standard_normal(1000) * 2
        for scale in (1.0, 1e-2, 1e-5):
            a = b + scale * rng.standard_normal(1000)
            np.testing.assert_allclose(
                score.primitive_diff(a, b),
                score.primitive(a) - score.primitive(b),
                atol=1e-15 + 1e-10 * scale,
            )

    def test_tanh_diff_no_cancellation(self):
        # derivative at b=0.3 times a tiny step, far below the rounding of rho itself
        d = 1e-13
        diff = get_score("tanh").primitive_diff(np.array([0.3 + d]), np.array([0.3]))[0]
        assert diff == pytest.approx(np.tanh(0.3) * ((0.3 + d) - 0.3), rel=1e-6)

    def test_tanh_primitive_large_argument(self):
        assert np.isfinite(get_score("tanh").primitive(np.array([1e4]))).all()

    def test_unknown_score(self):
        with pytest.raises(ValueError, match="unknown score"):
            get_score("relu")

    def test_instance_passthrough(self):
        s = get_score("cube")
        assert get_score(s) is s
        assert s == get_score("cube")


class TestMoments:
    def test_laplace_and_uniform_reference_values(self):
        # quadrature oracle, then frozen reference values
        lap = quad_k(stats.laplace(scale=1 / np.sqrt(2)).pdf, -60, 60)
        uni = quad_k(lambda u: np.full_like(u, 1 / (2 * np.sqrt(3))), -np.sqrt(3), np.sqrt(3))
        assert lap == pytest.approx(0.14776, abs=5e-5)
        assert uni == pytest.approx(-0.12608, abs=5e-5)

    def test_signs_on_samples(self):
        y = white_sources(3, n=4, t=100_000)
        m = compute_moments(y, "tanh")
        # mixture() puts the uniform sources first
        np.testing.assert_array_equal(m.signs, [-1.0, -1.0, 1.0, 1.0])
        np.testing.assert_allclose(m.kappa, np.abs(m.k))
        np.testing.assert_allclose(m.k, [-0.12608, -0.12608, 0.14776, 0.14776], atol=0.01)

    def test_sign_of_zero_is_plus(self):
        m = MomentSet.from_k([0.0, -0.0, -1e-300])
        np.testing.assert_array_equal(m.signs, [1.0, 1.0, -1.0])
        assert np.all(m.kappa >= 0)

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_stein_identity_gaussian_null(self, seed):
        t = 100_000
        y = np.random.default_rng(seed).standard_normal((3, t))
        assert np.max(np.abs(compute_moments(y).k)) <= 5 / np.sqrt(t)

    def test_overflow_detected(self):
        with pytest.raises(NumericOverflowError), np.errstate(over="ignore"):
            compute_moments(np.full((2, 4), 1e200), "cube")

    def test_bad_shape(self):
        with pytest.raises(DimensionError):
            compute_moments(np.ones(5))


class TestGradient:
    def test_identity_structure(self):
        y = white_sources(1, n=3, t=2000)
        g = relative_gradient(y, "tanh", np.ones(3)).g
        psi = np.tanh(y)
        expected = psi @ y.T / y.shape[1] - np.eye(3)
        np.testing.assert_allclose(g, expected, atol=1e-14)

    def test_signs_scale_rows(self):
        y = white_sources(2, n=3, t=2000)
        s = np.array([1.0, -1.0, 1.0])
        g_plus = relative_gradient(y, "tanh", np.ones(3)).g + np.eye(3)
        g_s = relative_gradient(y, "tanh", s).g + np.eye(3)
        np.testing.assert_allclose(g_s, s[:, None] * g_plus, atol=1e-15)

    def test_g_minus_skew(self):
        gm = relative_gradient(white_sources(4, n=5, t=3000), "tanh", np.ones(5)).g_minus
        np.testing.assert_array_equal(gm, -gm.T)

    @pytest.mark.parametrize("name", ALL_SCORES)
    def test_directional_derivative(self, name, rng):
        y = rng.standard_normal((4, 4)) @ white_sources(5, n=4, t=5000)
        signs = compute_moments(y, name).signs
        grad = relative_gradient(y, name, signs)
        h = 1e-5
        for _ in range(5):
            e = random_skew(rng, 4)
            fd = (
                surrogate_loss(expm_skew(h * e) @ y, name, signs)
                - surrogate_loss(expm_skew(-h * e) @ y, name, signs)
            ) / (2 * h)
            assert fd == pytest.approx(frobenius_inner(grad.g_minus, e), abs=1e-6)

    def test_wrong_signs_length(self):
        with pytest.raises(DimensionError):
            relative_gradient(np.ones((3, 10)), "tanh", np.ones(2))


class TestLoss:
    def test_loss_change_matches_difference(self, rng):
        y = white_sources(6, n=3, t=3000)
        s = compute_moments(y).signs
        y2 = expm_skew(random_skew(rng, 3, 0.1)) @ y
        assert loss_change(y2, y, "tanh", s) == pytest.approx(
            surrogate_loss(y2, "tanh", s) - surrogate_loss(y, "tanh", s), abs=1e-13
        )

    def test_sign_flip_negates(self):
        y = white_sources(7, n=3, t=1000)
        s = np.array([1.0, -1.0, 1.0])
        assert surrogate_loss(y, "tanh", -s) == pytest.approx(-surrogate_loss(y, "tanh", s))

    def test_separated_sources_are_local_minimum(self, rng):
        y = white_sources(8, n=4, t=50_000)
        s = compute_moments(y).signs
        base = surrogate_loss(y, "tanh", s)
        for _ in range(10):
            e = random_skew(rng, 4, 0.05)
            assert surrogate_loss(expm_skew(e) @ y, "tanh", s) > base - 1e-4


class TestHessian:
    @pytest.mark.parametrize("name", ALL_SCORES)
    def test_second_derivative(self, name, rng):
        y = rng.standard_normal((3, 3)) @ white_sources(9, n=3, t=5000)
        signs = compute_moments(y, name).signs
        h = 1e-4
        f0 = surrogate_loss(y, name, signs)
        for _ in range(5):
            e = random_skew(rng, 3)
            fd = (
                surrogate_loss(expm_skew(h * e) @ y, name, signs)
                - 2 * f0
                + surrogate_loss(expm_skew(-h * e) @ y, name, signs)
            ) / h**2
            he = exact_hessian_apply(y, name, signs, e)
            assert fd == pytest.approx(frobenius_inner(e, he), rel=1e-4, abs=1e-5)

    def test_diagonal_only_on_separated_sources(self, rng):
        # with independent sources the off-diagonal E[psi(y_i) y_j] vanish,
        # so the truncated tensor agrees with the full one up to O(1/sqrt(T))
        y = white_sources(10, n=4, t=100_000)
        s = compute_moments(y).signs
        e = random_skew(rng, 4)
        full = frobenius_inner(e, exact_hessian_apply(y, "tanh", s, e))
        diag = frobenius_inner(e, exact_hessian_apply(y, "tanh", s, e, diagonal_only=True))
        assert diag == pytest.approx(full, rel=0.05)

    def test_quadratic_form_matches_kappa(self, rng):
        y = white_sources(11, n=4, t=100_000)
        m = compute_moments(y)
        g = relative_gradient(y, "tanh", m.signs)
        e = random_skew(rng, 4)
        q = hessian_quadratic_form(g, m, e)
        lin = frobenius_inner(g.g_minus, e)
        iu, ju = np.triu_indices(4, 1)
        quad = np.sum(0.5 * (m.kappa[iu] + m.kappa[ju]) * e[iu, ju] ** 2)
        assert q == pytest.approx(lin + quad, rel=1e-12)
        # the exact second derivative is twice the quadratic term up to O(1/sqrt(T))
        exact = frobenius_inner(e, exact_hessian_apply(y, "tanh", m.signs, e))
        assert exact == pytest.approx(2 * quad, rel=0.05)

    def test_shape_checks(self):
        y = np.ones((3, 10))
        with pytest.raises(DimensionError):
            exact_hessian_apply(y, "tanh", np.ones(3), np.zeros((2, 2)))
        with pytest.raises(DimensionError):
            hessian_quadratic_form(np.zeros((3, 3)), MomentSet.from_k(np.ones(3)), np.zeros((2, 2)))
