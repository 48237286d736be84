"""Property-based tests of the invariants that hold for every parameter setting."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bmfisher import oracles
from bmfisher.encoding import ModelParams, ising_to_qubo, n_params, parse_params, format_params, qubo_to_ising
from bmfisher.fisher import fim_from_moments, offblock_ratio
from bmfisher.gibbs import enumerate_distribution, exact_moments, kl_divergence
from bmfisher.optim import ngd_step
from bmfisher.spectral import fim_spectrum, schur_bound, spectral_entropy

FLOATS = st.floats(-2.0, 2.0, allow_nan=False, allow_subnormal=False)


@st.composite
def models(draw, max_d=6, encodings=("ISING", "QUBO")):
    d = draw(st.integers(1, max_d))
    enc = draw(st.sampled_from(encodings))
    theta = draw(arrays(np.float64, n_params(d), elements=FLOATS))
    return ModelParams(enc, d, theta)


SETTINGS = settings(max_examples=40, deadline=None)


class TestGibbsProperties:
    @SETTINGS
    @given(models(max_d=10), st.floats(0.1, 3.0))
    def test_normalized(self, p, beta):
        dist = enumerate_distribution(p, beta)
        assert abs(np.exp(dist.logp).sum() - 1) <= 1e-12

    @SETTINGS
    @given(models(encodings=("QUBO",)))
    def test_encoding_map_preserves_distribution(self, q):
        i, _ = qubo_to_ising(q)
        np.testing.assert_allclose(enumerate_distribution(q).p, enumerate_distribution(i).p, atol=1e-12)

    @SETTINGS
    @given(models(encodings=("ISING",)))
    def test_round_trip(self, i):
        back, _ = qubo_to_ising(ising_to_qubo(i)[0])
        np.testing.assert_allclose(back.theta, i.theta, atol=1e-14)

    @SETTINGS
    @given(models(max_d=5), st.integers(0, 2**31 - 1))
    def test_kl_nonnegative(self, p, seed):
        other = ModelParams(p.encoding, p.d, np.random.default_rng(seed).normal(size=n_params(p.d)))
        a, b = enumerate_distribution(p), enumerate_distribution(other)
        assert kl_divergence(a, b) >= 0
        assert kl_divergence(a, a) == 0


class TestFimProperties:
    @SETTINGS
    @given(models(max_d=4))
    def test_matches_covariance(self, p):
        F = fim_from_moments(exact_moments(enumerate_distribution(p), p.encoding, 4))
        np.testing.assert_allclose(F.M, oracles.direct_covariance(p.theta, p.d, p.encoding.value == "ISING"),
                                   atol=1e-12)

    @SETTINGS
    @given(models(max_d=5))
    def test_psd_and_entropy_bounds(self, p):
        F = fim_from_moments(exact_moments(enumerate_distribution(p), p.encoding, 4))
        spec = fim_spectrum(F)
        assert spec.lambda_min >= -1e-9
        assert np.all(np.diff(spec.eigenvalues) <= 0)
        if spec.lambda_max > 0:
            assert -1e-12 <= spectral_entropy(spec) <= np.log(n_params(p.d)) + 1e-12
        assert 0 <= offblock_ratio(F) <= 1

    @SETTINGS
    @given(models(max_d=5))
    def test_schur_bound(self, p):
        F = fim_from_moments(exact_moments(enumerate_distribution(p), p.encoding, 4))
        if p.d >= 2:
            assert schur_bound(F).holds

    @SETTINGS
    @given(models(max_d=4), st.integers(0, 2**31 - 1))
    def test_ngd_residual(self, p, seed):
        F = fim_from_moments(exact_moments(enumerate_distribution(p), p.encoding, 4))
        g = np.random.default_rng(seed).normal(size=n_params(p.d))
        delta = (p.theta - ngd_step(p.theta, g, F, 1.0, 1e-3)) / 1.0
        assert np.linalg.norm((F.M + 1e-3 * np.eye(g.size)) @ delta - g) <= 1e-8 * max(1.0, np.linalg.norm(g))


class TestFileProperties:
    @SETTINGS
    @given(models(max_d=8))
    def test_params_text_round_trip(self, p):
        back = parse_params(format_params(p))
        assert back.encoding is p.encoding and back.d == p.d
        np.testing.assert_array_equal(back.theta, p.theta)
