"""Poisson count model with a log-AR(1) latent intensity.

    x_{t+1} | x_t ~ N(phi * x_t, sigma^2)
    y_t     | x_t ~ Poisson(beta * exp(x_t))

Parameters are theta = (phi, sigma, beta) with uniform priors over
|phi| < 1, sigma > 0 and beta > 0.  The initial state is drawn from the
stationary distribution N(0, sigma^2 / (1 - phi^2)) of the latent AR(1).
No closed-form optimal proposal exists, so only the bootstrap filter
applies.

The Poisson log-pmf is evaluated through log-gamma for stability at large
counts; its log y! term is parameter-free and therefore absent from every
derivative.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.special import gammaln

from .base import StateSpaceModel

_LOG_2PI = float(np.log(2.0 * np.pi))

EXPECTED_YEARS = (1900, 2014)


class PoissonCountModel(StateSpaceModel):

    dim_theta = 3
    param_names = ("phi", "sigma", "beta")
    fully_adapted = None

    # -- densities ---------------------------------------------------------

    def log_transition(self, theta, x_prev, x_curr, t=0):
        sigma = float(theta[1])
        r = np.asarray(x_curr) - theta[0] * np.asarray(x_prev)
        return -0.5 * _LOG_2PI - np.log(sigma) - 0.5 * (r / sigma) ** 2

    def log_observation(self, theta, x_curr, y, t=0):
        beta = float(theta[2])
        x = np.asarray(x_curr, dtype=float)
        y = np.asarray(y, dtype=float)
        log_rate = np.log(beta) + x
        return y * log_rate - beta * np.exp(x) - gammaln(y + 1.0)

    # -- parameter derivatives ----------------------------------------------

    def grad_log_transition(self, theta, x_prev, x_curr, t=0):
        sigma = float(theta[1])
        x_prev = np.asarray(x_prev, dtype=float)
        r = np.asarray(x_curr) - theta[0] * x_prev
        shape = np.broadcast_shapes(x_prev.shape, np.shape(x_curr))
        out = np.zeros(shape + (3,))
        out[..., 0] = r * x_prev / sigma**2
        out[..., 1] = -1.0 / sigma + r**2 / sigma**3
        return out

    def grad_log_observation(self, theta, x_curr, y, t=0):
        beta = float(theta[2])
        x = np.asarray(x_curr, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast_shapes(x.shape, y.shape)
        out = np.zeros(shape + (3,))
        out[..., 2] = y / beta - np.exp(x)
        return out

    def hess_log_transition(self, theta, x_prev, x_curr, t=0):
        sigma = float(theta[1])
        x_prev = np.asarray(x_prev, dtype=float)
        r = np.asarray(x_curr) - theta[0] * x_prev
        shape = np.broadcast_shapes(x_prev.shape, np.shape(x_curr))
        out = np.zeros(shape + (3, 3))
        h_ps = -2.0 * r * x_prev / sigma**3
        out[..., 0, 0] = -(x_prev**2) / sigma**2
        out[..., 0, 1] = h_ps
        out[..., 1, 0] = h_ps
        out[..., 1, 1] = 1.0 / sigma**2 - 3.0 * r**2 / sigma**4
        return out

    def hess_log_observation(self, theta, x_curr, y, t=0):
        beta = float(theta[2])
        x = np.asarray(x_curr, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast_shapes(x.shape, y.shape)
        out = np.zeros(shape + (3, 3))
        out[..., 2, 2] = -y / beta**2 + np.zeros(shape)
        return out

    # -- samplers ------------------------------------------------------------

    def sample_initial(self, theta, n, rng):
        sd = float(theta[1]) / np.sqrt(1.0 - theta[0] ** 2)
        return sd * rng.standard_normal(n)

    def sample_transition(self, theta, x_prev, rng):
        x_prev = np.asarray(x_prev, dtype=float)
        return self.transition_from_noise(theta, x_prev, rng.standard_normal(x_prev.shape))

    def transition_from_noise(self, theta, x_prev, z):
        return theta[0] * np.asarray(x_prev, dtype=float) + theta[1] * np.asarray(z)

    # -- compiled fast paths ----------------------------------------------------

    def filter_loop(self, variant: str):
        if variant != "bootstrap":
            return None
        from . import _poisson_numba as nb

        def loop(theta, y, x0, us, zs, particles, ancestors, log_weights, log_aux):
            return nb.bpf_loop(
                float(theta[0]), float(theta[1]), float(theta[2]),
                y, x0, us, zs, particles, ancestors, log_weights, log_aux,
            )

        return loop

    def smoother_terms(self):
        from . import _poisson_numba as nb

        def grad_fn(theta, output, wbar, idx_curr):
            g0, g1, g2 = nb.grad_terms(
                float(theta[0]), float(theta[1]), float(theta[2]),
                output.particles, output.ancestors, output.observations, wbar, idx_curr,
            )
            return np.array([g0, g1, g2])

        def info_fn(theta, output, wbar, idx_curr):
            return nb.info_terms(
                float(theta[0]), float(theta[1]), float(theta[2]),
                output.particles, output.ancestors, output.observations, wbar, idx_curr,
            )

        return grad_fn, info_fn

    # -- prior ----------------------------------------------------------------

    def in_support(self, theta) -> bool:
        return bool(abs(theta[0]) < 1.0 and theta[1] > 0.0 and theta[2] > 0.0)

    def log_prior(self, theta) -> float:
        return 0.0 if self.in_support(theta) else -np.inf

    def grad_log_prior(self, theta):
        return np.zeros(3)

    def hess_log_prior(self, theta):
        return np.zeros((3, 3))


def make_poisson_model() -> PoissonCountModel:
    """Build the count model over theta = (phi, sigma, beta)."""
    return PoissonCountModel()


def simulate_counts(model: PoissonCountModel, theta, n_steps: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Simulate the latent intensity path and Poisson counts."""
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    states = np.empty(n_steps + 1)
    states[0] = model.sample_initial(theta, 1, rng)[0]
    for t in range(1, n_steps + 1):
        states[t] = model.sample_transition(theta, states[t - 1 : t], rng)[0]
    counts = rng.poisson(theta[2] * np.exp(states[1:]))
    return states, counts.astype(float)


def load_earthquake_data(path) -> np.ndarray:
    """Load the annual earthquake counts as a float array in year order.

    The file must be a two-column CSV with header ``year,count``, strictly
    consecutive years and non-negative integer counts.  A length other
    than the expected 115 rows (1900 to 2014) is reported as a warning
    only, since revisions of the underlying catalogue exist.
    """
    years: list[int] = []
    counts: list[int] = []
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != "year,count":
            raise ValueError(f"expected header 'year,count', got {header!r}")
        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 2:
                raise ValueError(f"line {line_no}: expected two columns, got {len(fields)}")
            try:
                year = int(fields[0])
                count = int(fields[1])
            except ValueError as exc:
                raise ValueError(f"line {line_no}: {exc}") from exc
            if count < 0:
                raise ValueError(f"line {line_no}: negative count {count}")
            if years and year != years[-1] + 1:
                raise ValueError(f"line {line_no}: year {year} not contiguous with {years[-1]}")
            years.append(year)
            counts.append(count)
    if not counts:
        raise ValueError("earthquake data file contains no rows")
    expected = EXPECTED_YEARS[1] - EXPECTED_YEARS[0] + 1
    if len(counts) != expected:
        warnings.warn(
            f"expected {expected} annual counts ({EXPECTED_YEARS[0]}-{EXPECTED_YEARS[1]}), "
            f"got {len(counts)}; dataset revision assumed",
            stacklevel=2,
        )
    return np.asarray(counts, dtype=float)
