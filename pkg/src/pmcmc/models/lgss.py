"""Linear Gaussian state space model with analytic derivatives.

    x_{t+1} | x_t ~ N(phi * x_t, sigma_v^2)
    y_t     | x_t ~ N(x_t, sigma_e^2)

The inferred parameters are theta = (phi, sigma_v); the observation noise
sigma_e is fixed at construction.  With ``rescale=True`` the second
parameter is sigma_v / 10, i.e. the model is expressed in a coordinate
system where the state noise axis is stretched by a factor ten.  The
initial state is a known zero (a Dirac mass at 0), so the first transition
starts from x_0 = 0.

The optimal one-step proposal and the one-step observation predictive are
Gaussian and available in closed form, so this model supports the fully
adapted filter variant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import FullyAdapted, StateSpaceModel

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class LgssParams:
    """Natural-scale parameters: |phi| < 1, sigma_v > 0, sigma_e > 0."""

    phi: float
    sigma_v: float
    sigma_e: float

    def __post_init__(self):
        if self.sigma_v <= 0 or self.sigma_e <= 0:
            raise ValueError("sigma_v and sigma_e must be positive")


class LinearGaussianModel(StateSpaceModel):
    """AR(1) state with additive Gaussian observation noise."""

    dim_theta = 2

    def __init__(self, sigma_e: float, rescale: bool = False):
        if sigma_e <= 0:
            raise ValueError("sigma_e must be positive")
        self.sigma_e = float(sigma_e)
        self.noise_scale = 10.0 if rescale else 1.0
        self.rescaled = bool(rescale)
        self.param_names = ("phi", "sigma_v_over_10" if rescale else "sigma_v")
        self.fully_adapted = FullyAdapted(
            sample_optimal_proposal=self._sample_optimal_proposal,
            log_optimal_proposal=self._log_optimal_proposal,
            log_predictive=self._log_predictive,
            proposal_from_noise=self._proposal_from_noise,
        )

    def _sigma_v(self, theta) -> float:
        return self.noise_scale * float(theta[1])

    # -- densities ---------------------------------------------------------

    def log_transition(self, theta, x_prev, x_curr, t=0):
        sv = self._sigma_v(theta)
        r = np.asarray(x_curr) - theta[0] * np.asarray(x_prev)
        return -0.5 * _LOG_2PI - np.log(sv) - 0.5 * (r / sv) ** 2

    def log_observation(self, theta, x_curr, y, t=0):
        se = self.sigma_e
        r = np.asarray(y) - np.asarray(x_curr)
        return -0.5 * _LOG_2PI - np.log(se) - 0.5 * (r / se) ** 2

    # -- parameter derivatives ----------------------------------------------

    def grad_log_transition(self, theta, x_prev, x_curr, t=0):
        sv = self._sigma_v(theta)
        x_prev = np.asarray(x_prev, dtype=float)
        r = np.asarray(x_curr) - theta[0] * x_prev
        shape = np.broadcast_shapes(x_prev.shape, np.shape(x_curr))
        out = np.empty(shape + (2,))
        out[..., 0] = r * x_prev / sv**2
        out[..., 1] = self.noise_scale * (-1.0 / sv + r**2 / sv**3)
        return out

    def grad_log_observation(self, theta, x_curr, y, t=0):
        shape = np.broadcast_shapes(np.shape(x_curr), np.shape(y))
        return np.zeros(shape + (2,))

    def hess_log_transition(self, theta, x_prev, x_curr, t=0):
        sv = self._sigma_v(theta)
        c = self.noise_scale
        x_prev = np.asarray(x_prev, dtype=float)
        r = np.asarray(x_curr) - theta[0] * x_prev
        shape = np.broadcast_shapes(x_prev.shape, np.shape(x_curr))
        out = np.empty(shape + (2, 2))
        h_ps = c * (-2.0 * r * x_prev / sv**3)
        out[..., 0, 0] = -(x_prev**2) / sv**2
        out[..., 0, 1] = h_ps
        out[..., 1, 0] = h_ps
        out[..., 1, 1] = c**2 * (1.0 / sv**2 - 3.0 * r**2 / sv**4)
        return out

    def hess_log_observation(self, theta, x_curr, y, t=0):
        shape = np.broadcast_shapes(np.shape(x_curr), np.shape(y))
        return np.zeros(shape + (2, 2))

    # -- samplers ------------------------------------------------------------

    def sample_initial(self, theta, n, rng):
        return np.zeros(n)

    def sample_transition(self, theta, x_prev, rng):
        x_prev = np.asarray(x_prev, dtype=float)
        return self.transition_from_noise(theta, x_prev, rng.standard_normal(x_prev.shape))

    def transition_from_noise(self, theta, x_prev, z):
        sv = self._sigma_v(theta)
        return theta[0] * np.asarray(x_prev, dtype=float) + sv * np.asarray(z)

    # -- prior ----------------------------------------------------------------
    # Uniform over |phi| < 1, sigma_v > 0 (improper on the positive half-line).

    def in_support(self, theta) -> bool:
        return bool(abs(theta[0]) < 1.0 and theta[1] > 0.0)

    def log_prior(self, theta) -> float:
        return 0.0 if self.in_support(theta) else -np.inf

    def grad_log_prior(self, theta):
        return np.zeros(2)

    def hess_log_prior(self, theta):
        return np.zeros((2, 2))

    # -- fully adapted quantities ---------------------------------------------

    def _posterior_moments(self, theta, x_prev, y_t):
        sv = self._sigma_v(theta)
        se = self.sigma_e
        var = 1.0 / (1.0 / sv**2 + 1.0 / se**2)
        mean = var * (theta[0] * np.asarray(x_prev) / sv**2 + np.asarray(y_t) / se**2)
        return mean, var

    def _sample_optimal_proposal(self, theta, x_prev, y_t, rng):
        return self._proposal_from_noise(theta, x_prev, y_t, rng.standard_normal(np.shape(x_prev)))

    def _proposal_from_noise(self, theta, x_prev, y_t, z):
        mean, var = self._posterior_moments(theta, x_prev, y_t)
        return mean + np.sqrt(var) * np.asarray(z)

    def _log_optimal_proposal(self, theta, x_prev, x_curr, y_t):
        mean, var = self._posterior_moments(theta, x_prev, y_t)
        r = np.asarray(x_curr) - mean
        return -0.5 * _LOG_2PI - 0.5 * np.log(var) - 0.5 * r**2 / var

    def _log_predictive(self, theta, x_curr, y_next):
        sv = self._sigma_v(theta)
        var = sv**2 + self.sigma_e**2
        r = np.asarray(y_next) - theta[0] * np.asarray(x_curr)
        return -0.5 * _LOG_2PI - 0.5 * np.log(var) - 0.5 * r**2 / var

    # -- compiled fast paths ----------------------------------------------------

    def filter_loop(self, variant: str):
        from . import _lgss_numba as nb

        kernel = nb.fapf_loop if variant == "fully_adapted" else nb.bpf_loop

        def loop(theta, y, x0, us, zs, particles, ancestors, log_weights, log_aux):
            return kernel(
                float(theta[0]), self._sigma_v(theta), self.sigma_e,
                y, x0, us, zs, particles, ancestors, log_weights, log_aux,
            )

        return loop

    def smoother_terms(self):
        from . import _lgss_numba as nb

        def grad_fn(theta, output, wbar, idx_curr):
            g0, g1 = nb.grad_terms(
                float(theta[0]), self._sigma_v(theta), self.noise_scale,
                output.particles, output.ancestors, output.observations, wbar, idx_curr,
            )
            return np.array([g0, g1])

        def info_fn(theta, output, wbar, idx_curr):
            g0, g1, c00, c01, c11, q00, q01, q11 = nb.info_terms(
                float(theta[0]), self._sigma_v(theta), self.noise_scale,
                output.particles, output.ancestors, output.observations, wbar, idx_curr,
            )
            grad = np.array([g0, g1])
            curvature = np.array([[c00, c01], [c01, c11]])
            quadratic = np.array([[q00, q01], [q01, q11]])
            return grad, curvature, quadratic

        return grad_fn, info_fn


def make_lgss(sigma_e: float, rescale: bool = False) -> LinearGaussianModel:
    """Build the model over theta = (phi, sigma_v), or (phi, sigma_v / 10)."""
    return LinearGaussianModel(sigma_e=sigma_e, rescale=rescale)


def simulate_lgss(model: LinearGaussianModel, theta, n_steps: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Simulate states x_0..x_T (x_0 = 0 exactly) and observations y_1..y_T."""
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    phi = float(theta[0])
    sv = model._sigma_v(theta)
    states = np.empty(n_steps + 1)
    states[0] = 0.0
    noise = rng.standard_normal(n_steps)
    for t in range(1, n_steps + 1):
        states[t] = phi * states[t - 1] + sv * noise[t - 1]
    observations = states[1:] + model.sigma_e * rng.standard_normal(n_steps)
    return states, observations


def save_observations(path, observations) -> None:
    """Write observations as a (t, y) CSV, 17 significant digits."""
    y = np.asarray(observations, dtype=float)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("t,y\n")
        for t, value in enumerate(y, start=1):
            fh.write(f"{t},{value:.17g}\n")


def load_observations(path) -> np.ndarray:
    """Read a (t, y) CSV written by save_observations."""
    values = []
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != "t,y":
            raise ValueError(f"unexpected observation header {header!r}")
        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 2:
                raise ValueError(f"line {line_no}: expected two columns")
            values.append(float(fields[1]))
    if not values:
        raise ValueError("observation file contains no rows")
    return np.asarray(values)
