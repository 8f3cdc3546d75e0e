import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from energy_park_voi.uncertainty import (
    DEFAULT_CATALOGUE,
    McmcSettings,
    MeasurementModel,
    TruncatedGaussianSpec,
    conjugate_posterior,
    mcmc_posterior_samples,
    measure_and_update,
    posterior_moments_by_quadrature,
    sample_measurement,
    sample_truncated_gaussian,
)


def test_nas_cost_samples_inside_support():
    spec = DEFAULT_CATALOGUE["NaS"].cost
    x = sample_truncated_gaussian(spec, np.random.default_rng(0), size=20_000)
    assert x.min() >= 100 and x.max() <= 250
    assert (spec.lower, spec.upper) == (100, 250)


def test_tiny_std_returns_mean():
    x = sample_truncated_gaussian(TruncatedGaussianSpec(3.0, 1e-9), np.random.default_rng(0))
    assert abs(x - 3.0) < 1e-6


def test_truncated_variance_matches_closed_form():
    closed = 1 - 2 * stats.norm.pdf(2) * 2 / (2 * stats.norm.cdf(2) - 1)
    assert closed == pytest.approx(0.7737, abs=1e-4)
    x = sample_truncated_gaussian(TruncatedGaussianSpec(0.0, 1.0), np.random.default_rng(1), size=100_000)
    assert abs(np.var(x) - closed) < 0.01
    assert TruncatedGaussianSpec(0.0, 1.0).moments()[1] ** 2 == pytest.approx(closed, rel=1e-9)


def test_density_integrates_to_one():
    assert TruncatedGaussianSpec(0.8, 0.05).total_mass() == pytest.approx(1.0, abs=1e-9)


def test_spec_validation():
    with pytest.raises(ValueError):
        TruncatedGaussianSpec(1.0, 0.0)
    with pytest.raises(ValueError):
        TruncatedGaussianSpec(1.0, 1.0, lower=2.0, upper=1.0)


def test_noiseless_measurement():
    prior = TruncatedGaussianSpec(80, 5)
    z = sample_measurement(81.0, prior, MeasurementModel(1e-9, 5), np.random.default_rng(0))
    assert abs(z - 81.0) < 1e-6


def test_measurement_spread():
    prior = TruncatedGaussianSpec(80, 5)
    model = MeasurementModel(0.25, 5)
    rng = np.random.default_rng(2)
    z = np.array([sample_measurement(80.0, prior, model, rng) for _ in range(10_000)])
    assert abs(z.std() - 1.25) < 0.05


def test_measurement_deterministic_and_checked():
    prior = TruncatedGaussianSpec(80, 5)
    model = MeasurementModel(0.25, 5)
    a = sample_measurement(80.0, prior, model, np.random.default_rng(9))
    b = sample_measurement(80.0, prior, model, np.random.default_rng(9))
    assert a == b
    with pytest.raises(ValueError):
        sample_measurement(80.0, prior, MeasurementModel(0.25, 4), np.random.default_rng(0))
    with pytest.raises(ValueError):
        MeasurementModel(0.0, 5)


def test_conjugate_worked_example():
    post = conjugate_posterior(TruncatedGaussianSpec(75, 5), 80, MeasurementModel(0.25, 5))
    assert post.mean == pytest.approx(79.7059, abs=1e-4)
    assert post.std == pytest.approx(1.2127, abs=1e-4)
    assert (post.lower, post.upper) == (65, 85)


@given(st.floats(0.01, 10), st.floats(-100, 100), st.floats(0.1, 50))
def test_symmetric_measurement(r, mu, sigma):
    post = conjugate_posterior(TruncatedGaussianSpec(mu, sigma), mu, MeasurementModel(r, sigma))
    assert post.mean == pytest.approx(mu, abs=1e-9 * max(1, abs(mu)))
    assert post.std == pytest.approx(sigma * r / math.sqrt(1 + r * r), rel=1e-9)


def test_uninformative_limit():
    post = conjugate_posterior(TruncatedGaussianSpec(75, 5), 90, MeasurementModel(1e3, 5))
    assert post.mean == pytest.approx(75, abs=1e-4)
    assert post.std == pytest.approx(5, rel=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.floats(50, 100), st.floats(1, 10), st.floats(-3, 3), st.floats(0.05, 3))
def test_conjugate_agrees_with_quadrature(mu, sigma, dz, r):
    prior = TruncatedGaussianSpec(mu, sigma)
    model = MeasurementModel(r, sigma)
    z = mu + dz * sigma
    m_q, s_q = posterior_moments_by_quadrature(prior, z, model)
    m_c, s_c = conjugate_posterior(prior, z, model).moments()
    assert m_c == pytest.approx(m_q, abs=1e-6 * sigma)
    assert s_c == pytest.approx(s_q, rel=1e-5)


def test_mcmc_worked_example():
    prior = TruncatedGaussianSpec(75, 5)
    res = mcmc_posterior_samples(prior, 80, MeasurementModel(0.25, 5),
                                 McmcSettings(n_samples=10_000), np.random.default_rng(4))
    assert len(res.samples) == 10_000
    assert abs(res.samples.mean() - 79.71) < 0.1
    assert abs(res.samples.std() - 1.21) < 0.1
    assert res.samples.min() >= 65 and res.samples.max() <= 85


def test_mcmc_uninformative_matches_prior():
    prior = TruncatedGaussianSpec(0.0, 1.0)
    res = mcmc_posterior_samples(prior, 0.3, MeasurementModel(1e3, 1.0),
                                 McmcSettings(n_samples=10_000), np.random.default_rng(5))
    m, s = prior.moments()
    se = s / math.sqrt(10_000) * 3  # thinned chain is close to independent
    assert abs(res.samples.mean() - m) < 4 * se
    assert abs(res.samples.std() / s - 1) < 0.05


def test_mcmc_low_acceptance_warns():
    prior = TruncatedGaussianSpec(0.0, 1.0)
    with pytest.warns(RuntimeWarning, match="acceptance"):
        res = mcmc_posterior_samples(prior, 0.0, MeasurementModel(1e-4, 1.0),
                                     McmcSettings(n_samples=50), np.random.default_rng(0))
    assert res.warnings


def test_mcmc_settings_validation():
    with pytest.raises(ValueError):
        McmcSettings(thinning=0)
    with pytest.raises(ValueError):
        McmcSettings(proposal_std=-1)


def test_catalogue_defaults():
    li = DEFAULT_CATALOGUE["Li-ion"]
    assert (li.cost.mean, li.cost.std, li.efficiency.mean, li.depth_of_discharge, li.discharge_ratio) == (
        200, 50, 0.92, 0.9, 2.0)
    caes = DEFAULT_CATALOGUE["CAES"]
    assert (caes.efficiency.lower, caes.efficiency.upper) == pytest.approx((0.55, 0.65))


def test_measure_and_update_keeps_support_and_is_deterministic():
    tech = DEFAULT_CATALOGUE["VRFB"]
    a = measure_and_update(tech, 0.25, np.random.default_rng(3))
    b = measure_and_update(tech, 0.25, np.random.default_rng(3))
    assert a[1] == b[1] and a[2] == b[2]
    post = a[0]
    for p in ("cost", "lifetime", "efficiency"):
        assert post.spec(p).lower == tech.spec(p).lower
        assert post.spec(p).std < tech.spec(p).std
        assert tech.spec(p).lower <= a[1][p] <= tech.spec(p).upper
