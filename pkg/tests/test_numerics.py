import numpy as np
import pytest

from fscil.exceptions import (
    ContractViolationError,
    DegenerateInputError,
    ShapeMismatchError,
    TrainingDivergenceError,
)
from fscil.numerics import (
    GradientPair,
    batch_cosine_ce,
    cosine_ce,
    cosine_similarity,
    finite_difference_gradient,
    grad_cosine_ce,
    log_softmax_ce,
    sample_stochastic_weights,
    sample_stochastic_weights_with_noise,
)
from fscil.optim import OptimizerConfig, OptimizerState, optimizer_step
from fscil.rng import SplitMix64


class TestCosineSimilarity:
    def test_identical_vectors(self):
        assert cosine_similarity([3.0, 4.0], [3.0, 4.0]) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        assert cosine_similarity([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_closed_form_45_degrees(self):
        # independent computation: dot/(norms)
        a, b = np.array([1.0, 1.0]), np.array([1.0, 0.0])
        expected = float(a @ b) / (np.linalg.norm(a) * np.linalg.norm(b))
        assert expected == pytest.approx(1 / np.sqrt(2))
        assert cosine_similarity(a, b) == pytest.approx(0.70710678, abs=1e-8)

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            cosine_similarity([1.0, 0.0], [1.0, 0.0, 0.0])

    def test_zero_norm_rejected(self):
        with pytest.raises(DegenerateInputError):
            cosine_similarity([0.0, 0.0], [1.0, 0.0])

    def test_range_and_scale_invariance(self):
        rng = SplitMix64(4)
        for _ in range(200):
            a = rng.normal(5)
            b = rng.normal(5)
            c = cosine_similarity(a, b)
            assert -1.0 <= c <= 1.0
            for alpha in (1e-6, 3.0, 1e6):
                assert cosine_similarity(alpha * a, b) == pytest.approx(c, abs=1e-12)


class TestLogSoftmaxCe:
    def test_uniform_logits(self):
        for c in (-5.0, 0.0, 123.0):
            assert log_softmax_ce([c] * 4, 0) == pytest.approx(np.log(4.0), abs=1e-12)

    def test_saturated_margin(self):
        assert log_softmax_ce([100.0, 0.0], 0) < 1e-40

    def test_closed_form_two_logits(self):
        # direct summation oracle
        direct = -np.log(np.exp(1.0) / (np.exp(1.0) + np.exp(0.0)))
        assert log_softmax_ce([1.0, 0.0], 0) == pytest.approx(direct, abs=1e-12)
        assert log_softmax_ce([1.0, 0.0], 0) == pytest.approx(0.31326169, abs=1e-8)

    def test_shift_invariance(self):
        rng = SplitMix64(9)
        for _ in range(100):
            z = rng.normal(6) * 10
            base = log_softmax_ce(z, 2)
            assert log_softmax_ce(z + 1234.5, 2) == pytest.approx(base, abs=1e-10)

    def test_non_negative(self):
        rng = SplitMix64(10)
        for _ in range(200):
            z = rng.normal(4) * 5
            assert log_softmax_ce(z, 0) >= 0.0

    def test_bad_index(self):
        with pytest.raises(IndexError):
            log_softmax_ce([1.0, 2.0], 2)

    def test_non_finite_logit(self):
        with pytest.raises(ValueError):
            log_softmax_ce([1.0, np.inf], 0)

    def test_huge_logits_stable(self):
        assert np.isfinite(log_softmax_ce([1e300 / 1e290, 900.0, 899.0], 1))


class TestSampleStochasticWeights:
    def test_zero_sigma_identity_bitwise(self):
        rng = SplitMix64(1)
        mu = rng.normal_matrix((3, 4)) * 2.5
        out = sample_stochastic_weights(mu, np.zeros_like(mu), SplitMix64(2))
        assert np.array_equal(out, mu)

    def test_determinism(self):
        mu = np.ones((2, 3))
        sigma = np.full((2, 3), 0.5)
        a = sample_stochastic_weights(mu, sigma, SplitMix64(77))
        b = sample_stochastic_weights(mu, sigma, SplitMix64(77))
        assert np.array_equal(a, b)

    def test_monte_carlo_moments(self):
        rng = SplitMix64(3)
        mu = np.full((1, 1), 2.0)
        sigma = np.full((1, 1), 3.0)
        draws = sample_stochastic_weights(
            np.tile(mu, (100_000, 1)), np.tile(sigma, (100_000, 1)), rng
        ).ravel()
        assert draws.mean() == pytest.approx(2.0, abs=0.05)
        assert draws.std() == pytest.approx(3.0, abs=0.05)

    def test_row_major_consumption(self):
        mu = np.zeros((2, 3))
        sigma = np.ones((2, 3))
        out = sample_stochastic_weights(mu, sigma, SplitMix64(5))
        flat = SplitMix64(5).normal(6)
        assert np.array_equal(out.reshape(-1), flat)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            sample_stochastic_weights(np.zeros((2, 2)), np.zeros((2, 3)), SplitMix64(0))


class TestGradCosineCe:
    def test_sigma_zero_reduces_to_deterministic(self):
        rng = SplitMix64(8)
        mu = rng.normal_matrix((3, 5))
        sigma = np.zeros_like(mu)
        eps = rng.normal_matrix((3, 5))
        e = rng.normal(5)
        det_loss, det_grad = cosine_ce(e, 1, mu, scale=2.0)
        loss, grads = grad_cosine_ce(e, 1, mu + eps * sigma, mu, sigma, eps, scale=2.0)
        assert loss == pytest.approx(det_loss, abs=1e-15)
        assert np.allclose(grads.d_mu, det_grad, atol=1e-15)
        # d_sigma = eps * d_mu_hat, generally non-zero even at sigma = 0
        assert np.allclose(grads.d_sigma, eps * det_grad, atol=1e-15)

    def test_closed_form_orthogonal(self):
        e = np.array([1.0, 0.0])
        mu_hat = np.array([[1.0, 0.0], [0.0, 1.0]])
        zeros = np.zeros_like(mu_hat)
        loss, _ = grad_cosine_ce(e, 0, mu_hat, mu_hat, zeros, zeros, scale=1.0)
        assert loss == pytest.approx(np.log(1 + np.exp(-1.0)), abs=1e-12)

    def test_contract_violation(self):
        mu = np.ones((2, 2))
        sigma = np.full((2, 2), 0.1)
        eps = np.ones((2, 2))
        with pytest.raises(ContractViolationError):
            grad_cosine_ce(np.array([1.0, 0.0]), 0, mu, mu, sigma, eps)

    def test_matches_finite_differences(self):
        rng = SplitMix64(15)
        for _ in range(25):
            n_classes = 2 + int(rng.integers(1, 5)[0])
            dim = 2 + int(rng.integers(1, 6)[0])
            mu = rng.normal_matrix((n_classes, dim))
            sigma = 0.3 * rng.normal_matrix((n_classes, dim))
            eps = rng.normal_matrix((n_classes, dim))
            e = rng.normal(dim)
            target = int(rng.integers(1, n_classes)[0])
            _, grads = grad_cosine_ce(e, target, mu + eps * sigma, mu, sigma, eps, scale=4.0)

            fd_mu = finite_difference_gradient(
                lambda m: cosine_ce(e, target, m + eps * sigma, scale=4.0)[0], mu
            )
            fd_sigma = finite_difference_gradient(
                lambda s: cosine_ce(e, target, mu + eps * s, scale=4.0)[0], sigma
            )
            assert np.allclose(grads.d_mu, fd_mu, rtol=1e-5, atol=1e-8)
            assert np.allclose(grads.d_sigma, fd_sigma, rtol=1e-5, atol=1e-8)


class TestBatchCosineCe:
    def test_matches_per_sample_mean(self):
        rng = SplitMix64(31)
        X = rng.normal_matrix((6, 4))
        W = rng.normal_matrix((3, 4))
        y = rng.integers(6, 3)
        losses, grads = zip(*(cosine_ce(X[i], int(y[i]), W, 2.0) for i in range(6)))
        loss, d_w = batch_cosine_ce(X, y, W, 2.0)
        assert loss == pytest.approx(np.mean(losses), abs=1e-12)
        assert np.allclose(d_w, np.mean(grads, axis=0), atol=1e-12)


class TestFiniteDifferenceGradient:
    def test_sum_of_squares(self):
        grad = finite_difference_gradient(lambda x: float(np.sum(x**2)), np.array([1.0, 2.0]))
        assert np.allclose(grad, [2.0, 4.0], atol=1e-6)

    def test_constant_function(self):
        grad = finite_difference_gradient(lambda x: 3.5, np.ones((2, 2)))
        assert np.max(np.abs(grad)) < 1e-9

    def test_non_finite_propagates(self):
        with pytest.raises(ValueError):
            finite_difference_gradient(lambda x: float("nan"), np.ones(2))

    def test_bad_step(self):
        with pytest.raises(ValueError):
            finite_difference_gradient(lambda x: 0.0, np.ones(2), h=0.0)


class TestOptimizerStep:
    def test_plain_descent(self):
        cfg = OptimizerConfig(method="sgd", learning_rate=0.1)
        p = np.array([[1.0]])
        out = optimizer_step(p, np.array([[2.0]]), OptimizerState(p.shape), cfg)
        assert out[0, 0] == pytest.approx(0.8, abs=1e-15)

    def test_zero_gradient_no_move(self):
        cfg = OptimizerConfig()
        p = np.array([[1.5, -2.0]])
        out = optimizer_step(p, np.zeros_like(p), OptimizerState(p.shape), cfg)
        assert np.array_equal(out, p)

    def test_momentum_unrolled_two_steps(self):
        lr, g = 0.05, 1.3
        cfg = OptimizerConfig(method="momentum", learning_rate=lr, momentum=0.9)
        p = np.array([[0.0]])
        state = OptimizerState(p.shape)
        p1 = optimizer_step(p, np.array([[g]]), state, cfg)
        p2 = optimizer_step(p1, np.array([[g]]), state, cfg)
        assert (p1 - p2)[0, 0] == pytest.approx(lr * g * 1.9, abs=1e-12)

    def test_adam_moves_toward_minimum(self):
        cfg = OptimizerConfig(method="adam", learning_rate=0.05)
        p = np.array([[4.0]])
        state = OptimizerState(p.shape)
        for _ in range(200):
            p = optimizer_step(p, 2 * p, state, cfg)
        assert abs(p[0, 0]) < 0.5

    def test_nan_gradient_reports_coordinate(self):
        cfg = OptimizerConfig()
        p = np.zeros((2, 2))
        g = np.zeros((2, 2))
        g[1, 0] = np.nan
        with pytest.raises(TrainingDivergenceError, match=r"\(1, 0\)"):
            optimizer_step(p, g, OptimizerState(p.shape), cfg)

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError):
            OptimizerConfig(method="lbfgs")


def test_gradient_pair_arithmetic():
    a = GradientPair(np.ones((2, 2)), np.zeros((2, 2)))
    b = GradientPair(np.ones((2, 2)), np.ones((2, 2)))
    s = (a + b).scaled(0.5)
    assert np.allclose(s.d_mu, 1.0)
    assert np.allclose(s.d_sigma, 0.5)
