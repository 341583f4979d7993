"""Poisson count model and the earthquake data loader."""

import numpy as np
import pytest
from scipy.special import gammaln

from pmcmc.models.poisson import load_earthquake_data, simulate_counts
from pmcmc.oracle import finite_diff

from conftest import rel_err

DATA_PATH = "data/earthquakes.csv"


def test_log_observation_zero_count(poisson_model):
    theta = np.array([0.5, 0.5, 2.0])
    assert poisson_model.log_observation(theta, 1.3, 0.0) == pytest.approx(
        -2.0 * np.exp(1.3), rel=1e-12
    )


def test_beta_score_zero_at_match(poisson_model):
    g = poisson_model.grad_log_observation(np.array([0.5, 0.5, 3.0]), 0.0, 3.0)
    assert g[2] == pytest.approx(0.0, abs=1e-14)


def test_beta_curvature_hand_value(poisson_model):
    h = poisson_model.hess_log_observation(np.array([0.5, 0.5, 3.0]), 0.0, 3.0)
    assert h[2, 2] == pytest.approx(-1.0 / 3.0, rel=1e-12)


def test_log_factorial_cancels_in_derivatives(poisson_model):
    """The log y! term is parameter-free: differencing the full log-pmf
    (including the term) matches the analytic scores exactly."""
    theta = np.array([0.6, 0.4, 8.0])
    x, y = 0.7, 12.0

    def with_term(th):
        return float(poisson_model.log_observation(th, x, y))

    def without_term(th):
        return float(poisson_model.log_observation(th, x, y) + gammaln(y + 1.0))

    fd_with = finite_diff(with_term, theta)
    fd_without = finite_diff(without_term, theta)
    assert np.array_equal(fd_with, fd_without)
    assert rel_err(poisson_model.grad_log_observation(theta, x, y), fd_with) < 1e-4


def test_stationary_initial_state(poisson_model):
    rng = np.random.default_rng(5)
    theta = np.array([0.8, 0.5, 10.0])
    draws = poisson_model.sample_initial(theta, 200_000, rng)
    assert np.std(draws) == pytest.approx(0.5 / np.sqrt(1 - 0.64), rel=0.02)


def test_simulate_counts_shapes(poisson_model):
    states, counts = simulate_counts(poisson_model, np.array([0.8, 0.2, 15.0]), 30, np.random.default_rng(1))
    assert states.shape == (31,) and counts.shape == (30,)
    assert np.all(counts >= 0) and np.all(counts == np.round(counts))


def test_load_earthquake_data():
    counts = load_earthquake_data(DATA_PATH)
    assert counts.shape == (115,)
    assert np.all(counts >= 0)
    assert counts[0] == 13.0  # year 1900


def test_loader_rejects_empty(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(ValueError):
        load_earthquake_data(path)


def test_loader_rejects_negative_count(tmp_path):
    path = tmp_path / "neg.csv"
    path.write_text("year,count\n1900,5\n1901,-2\n")
    with pytest.raises(ValueError, match="line 3"):
        load_earthquake_data(path)


def test_loader_rejects_non_contiguous_years(tmp_path):
    path = tmp_path / "gap.csv"
    path.write_text("year,count\n1900,5\n1902,3\n")
    with pytest.raises(ValueError, match="contiguous"):
        load_earthquake_data(path)


def test_loader_reports_parse_error_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("year,count\n1900,5\n1901,many\n")
    with pytest.raises(ValueError, match="line 3"):
        load_earthquake_data(path)


def test_loader_warns_on_unexpected_length(tmp_path):
    path = tmp_path / "short.csv"
    rows = "\n".join(f"{1900 + i},{10 + i % 3}" for i in range(20))
    path.write_text("year,count\n" + rows + "\n")
    with pytest.warns(UserWarning, match="expected 115"):
        counts = load_earthquake_data(path)
    assert counts.shape == (20,)
