"""Delay-based frequency estimation of a measured sinusoid.

For ``y(t) = A sin(w t + phi)`` and a delay ``tau`` the samples satisfy

    (y(t) + y(t - 2 tau)) / 2 = y(t - tau) * cos(w tau)

which is a scalar linear regression ``z = phi * theta`` with
``theta = cos(w tau)``.  A gradient estimator runs on it together with a
decaying weight ``w`` that lets the initial guess be subtracted out, giving
an estimate that is exact once ``w < 1``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .signals import DelayBuffer

log = logging.getLogger(__name__)


class EstimatorConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EstimatorConfig:
    gain_K: float = 1.0
    tau: float = 0.1
    theta0: float | None = None
    warmup: float = 2.0
    w_threshold: float = 0.9
    omega_min: float = 0.5
    omega_max: float = 10.0

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise EstimatorConfigError("; ".join(problems))
        if self.theta0 is None:
            object.__setattr__(self, "theta0", math.cos(self.omega_min * self.tau))

    def violations(self) -> list[str]:
        out = []
        if not self.gain_K > 0:
            out.append("gain_K must be positive")
        if not self.tau > 0:
            out.append("tau must be positive")
        if not 0 < self.omega_min < self.omega_max:
            out.append("need 0 < omega_min < omega_max")
        elif not self.tau * self.omega_max < math.pi:
            out.append("tau * omega_max must be below pi")
        if not 0 < self.w_threshold < 1:
            out.append("w_threshold must lie in (0, 1)")
        if self.warmup < 0:
            out.append("warmup must be nonnegative")
        return out


@dataclass
class EstimatorState:
    theta_hat: float
    w: float = 1.0
    active: bool = False

    @classmethod
    def initial(cls, config: EstimatorConfig) -> EstimatorState:
        return cls(theta_hat=config.theta0)


def regression_pair(buf: DelayBuffer, t: float, tau: float) -> tuple[float, float]:
    """``(z, phi)`` at time ``t``; raises InsufficientHistory before ``t - 2 tau``."""
    y0 = buf.sample(t)
    y1 = buf.sample(t - tau)
    y2 = buf.sample(t - 2 * tau)
    return 0.5 * (y0 + y2), y1


def estimator_rhs(theta_hat: float, w: float, z: float, phi: float, K: float):
    return K * phi * (z - phi * theta_hat), -K * phi * phi * w


def estimator_step(state: EstimatorState, z: float, phi: float, dt: float, config: EstimatorConfig):
    """One RK4 step of the gradient law and the weight, with ``z, phi`` held."""
    K = config.gain_K
    th, w = state.theta_hat, state.w
    a1, b1 = estimator_rhs(th, w, z, phi, K)
    a2, b2 = estimator_rhs(th + 0.5 * dt * a1, w + 0.5 * dt * b1, z, phi, K)
    a3, b3 = estimator_rhs(th + 0.5 * dt * a2, w + 0.5 * dt * b2, z, phi, K)
    a4, b4 = estimator_rhs(th + dt * a3, w + dt * b3, z, phi, K)
    state.theta_hat = th + dt / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
    state.w = w + dt / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4)


def finite_time_estimate(state: EstimatorState, config: EstimatorConfig) -> float | None:
    """Finite-time estimate of ``cos(w tau)``, or None until ``w`` has decayed."""
    w = state.w
    if not w < config.w_threshold:
        return None
    return (state.theta_hat - w * config.theta0) / (1.0 - w)


def recover_frequency(theta_F: float, tau: float, config: EstimatorConfig) -> float:
    lo = math.cos(config.omega_max * tau)
    hi = math.cos(config.omega_min * tau)
    clamped = min(max(theta_F, lo), hi)
    if clamped != theta_F:
        log.warning("theta estimate %.8g clamped to [%.8g, %.8g]", theta_F, lo, hi)
    omega = math.acos(clamped) / tau
    return min(max(omega, config.omega_min), config.omega_max)
