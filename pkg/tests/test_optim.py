"""Tests for the update rules, learning-rate policy and training loop."""

import math

import numpy as np
import pytest

from bmfisher.data import gen_bas, gen_ising_synthetic
from bmfisher.encoding import Encoding, ModelParams, n_params
from bmfisher.fisher import FimMatrix, fim_from_moments
from bmfisher.gibbs import EmpiricalDistribution, enumerate_distribution, exact_moments, kl_divergence, sample_exact
from bmfisher.optim import (
    TRACE_COLUMNS,
    TrainConfig,
    eta_sgd_policy,
    iterations_to_reach,
    ngd_step,
    sgd_step,
    train,
)
from bmfisher.spectral import Spectrum


def exact_fim(enc, d, theta):
    return fim_from_moments(exact_moments(enumerate_distribution(ModelParams(enc, d, theta)), enc, 4))


class TestSgdStep:
    def test_zero_gradient(self):
        theta = np.array([0.3, -1.0, 2.0])
        np.testing.assert_array_equal(sgd_step(theta, np.zeros(3), 0.1), theta)

    def test_half_step(self):
        np.testing.assert_array_equal(sgd_step(np.zeros(3), np.ones(3), 0.5), [-0.5, -0.5, -0.5])

    def test_invalid(self):
        with pytest.raises(ValueError):
            sgd_step(np.zeros(3), np.zeros(2), 0.1)
        with pytest.raises(ValueError):
            sgd_step(np.zeros(2), np.array([np.inf, 0]), 0.1)
        with pytest.raises(ValueError):
            sgd_step(np.zeros(2), np.zeros(2), 0.0)

    def test_policy_step_on_bas_decreases_kl(self):
        data = gen_bas(2, 450, 0)
        for enc in ("ISING", "QUBO"):
            theta0 = np.zeros(10)
            dist0 = enumerate_distribution(ModelParams(enc, 4, theta0))
            m = exact_moments(dist0, enc, 4)
            from bmfisher.gibbs import data_moments
            from bmfisher.fisher import likelihood_gradient

            g = likelihood_gradient(data_moments(data, enc, 2), m)
            theta1 = sgd_step(theta0, g, eta_sgd_policy(fim_from_moments(m)))
            assert kl_divergence(data, enumerate_distribution(ModelParams(enc, 4, theta1))) < kl_divergence(
                data, dist0
            )


class TestPolicy:
    def test_identity_fim(self):
        assert eta_sgd_policy(exact_fim("ISING", 4, np.zeros(10)), 0.01) == pytest.approx(0.01, abs=1e-15)

    def test_lambda_four(self):
        assert eta_sgd_policy(Spectrum(np.array([4.0, 1.0])), 0.01) == 0.0025

    def test_zero_theta_qubo_d10(self):
        d = 10
        F = exact_fim("QUBO", d, np.zeros(n_params(d)))
        lam = np.linalg.eigvalsh(F.M)[-1]
        assert eta_sgd_policy(F) == pytest.approx(0.01 / lam, rel=1e-12)
        # the policy always satisfies the gradient-descent stability bound
        assert eta_sgd_policy(F) < 2 / lam

    def test_zero_spectrum(self):
        with pytest.raises(ValueError):
            eta_sgd_policy(Spectrum(np.zeros(3)))


class TestNgdStep:
    def test_identity_metric(self):
        rng = np.random.default_rng(0)
        theta, g = rng.normal(size=6), rng.normal(size=6)
        F = FimMatrix(3, Encoding.ISING, np.eye(6))
        np.testing.assert_allclose(ngd_step(theta, g, F, 0.2, 0.0), sgd_step(theta, g, 0.2), atol=1e-15)

    def test_zero_gradient(self):
        F = exact_fim("QUBO", 3, np.zeros(6))
        theta = np.linspace(-1, 1, 6)
        np.testing.assert_array_equal(ngd_step(theta, np.zeros(6), F, 0.01, 0.001), theta)

    @pytest.mark.parametrize("enc", ["ISING", "QUBO"])
    def test_solve_residual(self, enc):
        rng = np.random.default_rng(3)
        theta, g = rng.normal(size=10), rng.normal(size=10)
        F = exact_fim(enc, 4, theta)
        eta, lam = 0.01, 0.001
        delta = (theta - ngd_step(theta, g, F, eta, lam)) / eta
        assert np.linalg.norm((F.M + lam * np.eye(10)) @ delta - g) <= 1e-10

    def test_singular_without_damping(self):
        F = FimMatrix(2, Encoding.QUBO, np.zeros((3, 3)))
        with pytest.raises(np.linalg.LinAlgError):
            ngd_step(np.zeros(3), np.ones(3), F, 0.01, 0.0)


class TestTrainConfig:
    def test_defaults(self):
        c = TrainConfig()
        assert (c.beta, c.iterations, c.eta_ngd, c.eta_sgd_numerator, c.damping, c.n_samples) == (
            1.0, 500, 0.01, 0.01, 0.001, 10_000,
        )

    @pytest.mark.parametrize(
        "kw", [dict(eta_ngd=0), dict(damping=-1), dict(iterations=0), dict(beta=0), dict(optimizer="adam")]
    )
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            TrainConfig(**kw)

    def test_to_dict_strings(self):
        d = TrainConfig(encoding="qubo", optimizer="NGD").to_dict()
        assert d["encoding"] == "QUBO" and d["optimizer"] == "NGD" and d["schedule"]["sweeps_anneal"] == 100


class TestTrain:
    def test_trace_shape_and_invariants(self):
        trace = train(gen_bas(2, 450, 0), TrainConfig(iterations=20, trace_every=5))
        np.testing.assert_array_equal(trace.iters, [0, 5, 10, 15, 20])
        assert set(trace.rows[0]) == set(TRACE_COLUMNS)
        assert np.all(trace.kl >= 0)
        assert len(trace.eigenvalues) == len(trace.thetas) == 5
        assert trace.meta["kl_direction"] == "D(p_data || p_model)"
        np.testing.assert_array_equal(trace.thetas[0], 0.0)

    def test_sgd_eta_column(self):
        trace = train(gen_bas(2, 450, 0), TrainConfig(iterations=10))
        np.testing.assert_allclose(trace.column("eta"), 0.01 / trace.column("lambda_max"), rtol=1e-15)

    def test_already_optimal(self):
        d = 4
        data = sample_exact(enumerate_distribution(ModelParams.zeros("ISING", d)), 20_000, seed=0)
        from bmfisher.gibbs import bits_to_index

        trace = train(EmpiricalDistribution(d, bits_to_index(data.bits())), TrainConfig(iterations=50))
        assert trace.column("grad_norm")[0] < 5 * math.sqrt(n_params(d) / 20_000)
        assert abs(trace.kl[-1] - trace.kl[0]) <= trace.kl[0]

    def test_bas_ngd_300(self):
        # ratios read off the exact-moment run and frozen
        data = gen_bas(2, 450, 0)
        expected = {"ISING": 0.053449118911473824, "QUBO": 0.07779598266476277}
        for enc, ratio in expected.items():
            trace = train(data, TrainConfig(encoding=enc, optimizer="NGD", iterations=300))
            assert trace.kl[-1] / trace.kl[0] == pytest.approx(ratio, rel=1e-6)
            assert trace.kl[-1] < 0.08 * trace.kl[0]

    def test_sgd_ordering_single_seed(self):
        data, _ = gen_ising_synthetic(10, 1.0, 2000, 0)
        ti = train(data, TrainConfig(encoding="ISING", iterations=500))
        tq = train(data, TrainConfig(encoding="QUBO", iterations=500))
        hit = iterations_to_reach(ti, tq.kl[-1])
        assert hit is not None and hit < 500

    def test_sa_mode_deterministic(self):
        data = gen_bas(2, 450, 1)
        cfg = TrainConfig(encoding="QUBO", optimizer="NGD", moment_source="SA", fim_source="SA", iterations=3,
                          n_samples=500, seed=5)
        a, b = train(data, cfg), train(data, cfg)
        np.testing.assert_array_equal(np.array(a.thetas), np.array(b.thetas))
        assert a.kl[-1] < a.kl[0]

    def test_keep_snapshots(self):
        trace = train(gen_bas(2, 450, 0), TrainConfig(iterations=4), keep_moments_at=(2,), keep_fim_at=(3,))
        assert set(trace.moments) == {2} and set(trace.fims) == {3}
        assert trace.moments[2].max_order == 4

    def test_divergence_guard(self):
        cfg = TrainConfig(optimizer="NGD", eta_ngd=500.0, damping=0.0, iterations=50)
        trace = train(gen_bas(2, 450, 0), cfg)
        assert trace.aborted is not None
        assert trace.meta["aborted"] == trace.aborted
        assert len(trace.rows) < 51

    def test_final_params(self):
        trace = train(gen_bas(2, 450, 0), TrainConfig(iterations=3))
        assert trace.final_params.d == 4
        np.testing.assert_array_equal(trace.final_params.theta, trace.thetas[-1])

    def test_iterations_to_reach_none(self):
        trace = train(gen_bas(2, 450, 0), TrainConfig(iterations=3))
        assert iterations_to_reach(trace, -1.0) is None
        assert iterations_to_reach(trace, trace.kl[0]) == 0
