"""Estimator front door: sklearn conventions and fitted attributes."""

import numpy as np
import pytest
from sklearn.base import clone

from pmcmc.estimator import ParticleMetropolisHastings


def test_get_set_params_round_trip(lgss_model):
    est = ParticleMetropolisHastings(model=lgss_model, theta_init=[0.5, 1.0], step_size=0.1)
    params = est.get_params()
    assert params["step_size"] == 0.1
    assert params["variant"] == "pmh2"
    est.set_params(variant="pmh0", n_iter=123)
    assert est.variant == "pmh0" and est.n_iter == 123


def test_clone_preserves_configuration(lgss_model):
    est = ParticleMetropolisHastings(model=lgss_model, theta_init=[0.5, 1.0], seed=3, lag=7)
    copy = clone(est)
    assert copy.lag == 7 and copy.seed == 3
    # non-estimator params are deep-copied by clone; configuration carries over
    assert copy.model.sigma_e == lgss_model.sigma_e
    assert copy.model.param_names == lgss_model.param_names


def test_fit_sets_attributes(lgss_model, lgss_data):
    _, _, observations = lgss_data
    est = ParticleMetropolisHastings(
        model=lgss_model, theta_init=[0.5, 1.0], variant="pmh1", step_size=0.075,
        n_particles=25, filter_variant="fully_adapted", lag=5, n_iter=60, burn_in=20, seed=4,
    )
    result = est.fit(observations[:20])
    assert result is est
    assert est.samples_.shape == (40, 2)
    assert 0.0 <= est.acceptance_rate_ <= 1.0
    assert est.posterior_mean_.shape == (2,)
    assert est.trace_.n_filter_runs == est.n_filter_runs_


def test_fit_deterministic_given_seed(lgss_model, lgss_data):
    _, _, observations = lgss_data
    kwargs = dict(model=lgss_model, theta_init=[0.5, 1.0], variant="pmh0", step_size=0.1,
                  n_particles=10, n_iter=40, burn_in=0, seed=11)
    a = ParticleMetropolisHastings(**kwargs).fit(observations[:15])
    b = ParticleMetropolisHastings(**kwargs).fit(observations[:15])
    assert np.array_equal(a.samples_, b.samples_)


def test_fit_validates_inputs(lgss_model):
    with pytest.raises(ValueError, match="model"):
        ParticleMetropolisHastings(theta_init=[0.5, 1.0]).fit(np.ones(5))
    with pytest.raises(ValueError, match="theta_init"):
        ParticleMetropolisHastings(model=lgss_model).fit(np.ones(5))
    est = ParticleMetropolisHastings(model=lgss_model, theta_init=[0.5, 1.0], n_iter=10, burn_in=20)
    with pytest.raises(ValueError, match="burn_in"):
        est.fit(np.ones(5))
    est = ParticleMetropolisHastings(model=lgss_model, theta_init=[0.5, 1.0], n_iter=10, burn_in=0)
    with pytest.raises(ValueError, match="one-dimensional"):
        est.fit(np.ones((5, 2)))
    with pytest.raises(ValueError, match="policy"):
        ParticleMetropolisHastings(
            model=lgss_model, theta_init=[0.5, 1.0], policy="ridge", n_iter=10, burn_in=0
        ).fit(np.ones(5))
