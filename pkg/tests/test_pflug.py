import math

import numpy as np
import pytest
import scipy.linalg

from sasa.inference import var_batch_means
from sasa.pflug import (
    PflugSample,
    compare_conditions,
    pflug_residual,
    pflug_sample,
    rhs_coefficient,
)
from sasa.problems import QuadraticProblem, default_logreg
from sasa.sgm import SgmState, sgm_step


class ScriptedOracle:
    """Returns queued gradients and records where they were requested."""

    def __init__(self, grads):
        self.grads = [np.array(g, float) for g in grads]
        self.points = []
        self.dim = self.grads[0].size

    def stochastic_grad(self, x):
        self.points.append(np.array(x, float))
        return self.grads[len(self.points) - 1]


def run_pflug(problem, alpha, beta, burn, n, averaged=True):
    s = SgmState.initial(problem.initial_point() * 0, alpha, beta)
    samples, xs = [], []
    for k in range(burn + n):
        g, smp = pflug_sample(problem, s, averaged)
        if k >= burn:
            samples.append(smp)
            xs.append(s.x[0])
        s = sgm_step(s, g)
    return np.array(samples), np.array(xs)


def stationary_cov(a, alpha, beta, noise_var):
    """Exact stationary covariance of (x, d) for 1-D SGM on a quadratic."""
    t = np.array([[1 - alpha * (1 - beta) * a, -alpha * beta], [(1 - beta) * a, beta]])
    b = np.array([[-alpha * (1 - beta)], [1 - beta]])
    return scipy.linalg.solve_discrete_lyapunov(t, b @ b.T * noise_var)


class TestSampler:
    def test_scripted_draws(self):
        oracle = ScriptedOracle([[2.0], [0.0], [5.0]])
        s = SgmState(x=np.array([1.0]), d=np.array([0.5]), alpha=0.1, beta=0.9)
        g, smp = pflug_sample(oracle, s)
        np.testing.assert_allclose(oracle.points[2], [1.1], rtol=1e-15)
        np.testing.assert_array_equal(g, [1.0])
        assert smp.rg == pytest.approx(5.0) and smp.gd == pytest.approx(0.5)

    def test_unaveraged_steps_with_first_draw(self):
        oracle = ScriptedOracle([[2.0], [0.0], [5.0]])
        g, _ = pflug_sample(oracle, SgmState.initial([0.0], 0.1, 0.9), averaged=False)
        np.testing.assert_array_equal(g, [2.0])

    def test_noiseless(self):
        p = QuadraticProblem(a=np.array([2.0, 3.0]), noise_var=0.0)
        s = SgmState.initial([1.0, -1.0], 0.1, 0.5)
        g, smp = pflug_sample(p, s)
        assert smp.rg == 0.0
        np.testing.assert_array_equal(g, p.full_gradient(s.x))

    def test_trace_identity(self):
        # E<r, g~> = (alpha/2) a sigma^2 = 0.1
        p = QuadraticProblem(a=np.array([2.0]), noise_var=1.0, seed=0)
        samples, xs = run_pflug(p, 0.1, 0.9, 1_000, 100_000)
        rg = samples[:, 1]
        assert rg.mean() == pytest.approx(0.1, rel=0.10)
        assert abs(rg.mean() - 0.1) < 3 * rg.std(ddof=1) / math.sqrt(rg.size)

    def test_noise_direction_uncorrelated_with_iterate(self):
        p = QuadraticProblem(a=np.array([2.0]), noise_var=1.0, seed=1)
        s = SgmState.initial([0.0], 0.1, 0.9)
        rs, xs = [], []
        for k in range(101_000):
            x = s.x
            g1, g2 = p.stochastic_grad(x), p.stochastic_grad(x)
            if k >= 1_000:
                rs.append(0.5 * (g1 - g2)[0])
                xs.append(x[0])
            s = sgm_step(s, 0.5 * (g1 + g2))
        assert abs(np.corrcoef(rs, xs)[0, 1]) < 4 / math.sqrt(len(rs))

    def test_left_statistic_negative(self):
        p = QuadraticProblem(a=np.array([20.0]), noise_var=1.0, seed=2)
        samples, _ = run_pflug(p, 0.01, 0.5, 5_000, 50_000)
        gd = samples[:, 0]
        b = math.isqrt(gd.size)
        se = math.sqrt(var_batch_means(gd, b, b).sigma2_hat / (b * b))
        assert gd.mean() + 3 * se < 0


class TestResidual:
    def test_all_zero(self):
        res = pflug_residual([PflugSample(0.0, 0.0)] * 3, 0.1, 0.9)
        assert res.lhs_mean == 0.0 and res.rhs_mean == 0.0 and res.relative_error == 0.0

    def test_coefficients(self):
        assert rhs_coefficient(0.0) == -0.5
        assert rhs_coefficient(0.0, averaged=False) == -1.0
        assert rhs_coefficient(0.9) == pytest.approx(-0.1 / 3.8)

    def test_array_input(self):
        res = pflug_residual(np.array([[1.0, -2.0], [3.0, -2.0]]), 0.1, 0.0)
        assert res.lhs_mean == 2.0 and res.rhs_mean == 1.0
        assert res.relative_error == pytest.approx(0.5)

    def test_needs_a_sample(self):
        with pytest.raises(ValueError):
            pflug_residual([], 0.1, 0.9)

    @pytest.mark.parametrize("averaged", [True, False])
    def test_relation_against_exact_stationary_law(self, averaged):
        # E<g, d_k> = a cov(x, d); E<r, g~> = alpha a sigma^2 / 2
        a, alpha, beta, sigma2 = 30.0, 0.01, 0.9, 1.0
        step_noise = sigma2 / 2 if averaged else sigma2
        lhs = a * stationary_cov(a, alpha, beta, step_noise)[0, 1]
        rhs = rhs_coefficient(beta, averaged) * alpha * a * sigma2 / 2
        assert abs(lhs - rhs) / abs(rhs) < 0.02

    def test_simulated_relation_small_step(self):
        p = QuadraticProblem(a=np.array([30.0]), noise_var=1.0, seed=0)
        samples, _ = run_pflug(p, 0.01, 0.9, 20_000, 100_000)
        assert pflug_residual(samples, 0.01, 0.9).relative_error <= 0.25


class TestCompareConditions:
    def test_empty_horizon(self):
        assert compare_conditions(default_logreg(), 1.0, 0.9, 0) == []

    def test_checkpoints(self):
        rows = compare_conditions(default_logreg(), 1.0, 0.9, 1_000, seed=0, n_checkpoints=10)
        assert len(rows) == 10
        assert rows[-1].iter == 1_000
        assert all(r.vbar > 0 for r in rows)
        assert [r.iter for r in rows] == sorted(r.iter for r in rows)

    def test_seeded_reproducible(self):
        a = compare_conditions(default_logreg(), 1.0, 0.9, 500, seed=4, n_checkpoints=2)
        b = compare_conditions(default_logreg(), 1.0, 0.9, 500, seed=4, n_checkpoints=2)
        assert a == b
