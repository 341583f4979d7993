"""Linear Gaussian model: closed forms, simulation, dataset round trip."""

import numpy as np
import pytest
from scipy.integrate import quad

from pmcmc.filtering import FilterConfig, run_filter
from pmcmc.models.lgss import (
    LgssParams,
    load_observations,
    make_lgss,
    save_observations,
    simulate_lgss,
)


def test_lgss_params_validation():
    with pytest.raises(ValueError):
        LgssParams(0.5, -1.0, 0.1)
    with pytest.raises(ValueError):
        make_lgss(sigma_e=0.0)


def test_predictive_matches_convolution(lgss_model):
    """p(y' | x) at x = 0 equals N(0; 0, sigma_v^2 + sigma_e^2), and the
    closed form agrees with numerically integrating transition times
    observation density over the next state."""
    theta = np.array([0.5, 1.0])
    value = lgss_model.fully_adapted.log_predictive(theta, 0.0, 0.0)
    expected = -0.5 * np.log(2 * np.pi * 1.01)
    assert value == pytest.approx(expected, rel=1e-12)

    def integrand(x_next):
        return np.exp(
            lgss_model.log_transition(theta, 0.0, x_next)
            + lgss_model.log_observation(theta, x_next, 0.0)
        )

    numeric, _ = quad(integrand, -12, 12, epsabs=1e-12)
    assert np.exp(value) == pytest.approx(numeric, rel=1e-9)


def test_rescaled_parameterization_identity(lgss_rescaled, lgss_model):
    """Densities at (phi, s) under the rescaled model equal densities at
    (phi, 10 s) under the plain one."""
    rng = np.random.default_rng(0)
    for _ in range(20):
        phi, s = rng.uniform(-0.9, 0.9), rng.uniform(0.05, 0.25)
        xp, xc, y = rng.normal(size=3)
        a = lgss_rescaled.log_transition(np.array([phi, s]), xp, xc)
        b = lgss_model.log_transition(np.array([phi, 10 * s]), xp, xc)
        assert a == pytest.approx(b, rel=1e-13)
        fa_r = lgss_rescaled.fully_adapted.log_predictive(np.array([phi, s]), xc, y)
        fa = lgss_model.fully_adapted.log_predictive(np.array([phi, 10 * s]), xc, y)
        assert fa_r == pytest.approx(fa, rel=1e-13)


def test_noise_score_at_zero_residual(lgss_model):
    # d/d sigma_v of log transition at residual 0, sigma_v = 1 is -1
    g = lgss_model.grad_log_transition(np.array([0.5, 1.0]), 2.0, 1.0)
    assert g[1] == pytest.approx(-1.0, rel=1e-12)


def test_simulate_known_zero_initial_state(lgss_model):
    states, obs = simulate_lgss(lgss_model, np.array([0.5, 1.0]), 10, np.random.default_rng(1))
    assert states[0] == 0.0
    assert states.shape == (11,)
    assert obs.shape == (10,)


def test_simulate_degenerate_noise(lgss_model):
    states, _ = simulate_lgss(lgss_model, np.array([0.5, 1e-12]), 50, np.random.default_rng(2))
    assert np.max(np.abs(states)) < 1e-10


def test_simulate_stationary_variance(lgss_model):
    _, obs = simulate_lgss(lgss_model, np.array([0.5, 1.0]), 100_000, np.random.default_rng(3))
    states_var = np.var(obs) - 0.01  # observation noise variance removed
    assert states_var == pytest.approx(1.0 / (1.0 - 0.25), rel=0.05)


def test_simulate_deterministic(lgss_model):
    a = simulate_lgss(lgss_model, np.array([0.5, 1.0]), 25, np.random.default_rng(7))
    b = simulate_lgss(lgss_model, np.array([0.5, 1.0]), 25, np.random.default_rng(7))
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_fully_adapted_weights_constant(lgss_model, lgss_data):
    """With the optimal proposal and predictive auxiliary weights the
    importance weights are exactly one for every particle."""
    theta, _, observations = lgss_data
    out = run_filter(lgss_model, theta, observations, FilterConfig(64, "fully_adapted", seed=5))
    assert not out.log_weights.any()


def test_observation_csv_round_trip(tmp_path, lgss_model):
    _, obs = simulate_lgss(lgss_model, np.array([0.5, 1.0]), 40, np.random.default_rng(11))
    path = tmp_path / "obs.csv"
    save_observations(path, obs)
    loaded = load_observations(path)
    assert np.array_equal(loaded, obs)  # 17 significant digits: bit-exact
    assert (path.read_text().splitlines()[0]) == "t,y"


def test_load_observations_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("time,value\n1,2.0\n")
    with pytest.raises(ValueError, match="header"):
        load_observations(path)
