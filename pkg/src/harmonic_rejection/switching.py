"""Single-switch substitution of the estimated frequency into the controller.

The controller runs with ``omega_min`` until the finite-time estimate has
settled (its spread over a trailing window drops below a tolerance); then
the recovered frequency is written into the internal model exactly once.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .controller import Compensator
from .estimator import EstimatorConfig, EstimatorState, finite_time_estimate, recover_frequency


class SingleSwitchViolation(RuntimeError):
    pass


@dataclass(frozen=True)
class SwitchingConfig:
    dwell_window: float = 0.5
    stability_tol: float = 1e-4
    t_min_switch: float | None = None

    def __post_init__(self):
        if not self.dwell_window > 0:
            raise ValueError("dwell_window must be positive")
        if not self.stability_tol > 0:
            raise ValueError("stability_tol must be positive")

    def earliest(self, est: EstimatorConfig) -> float:
        if self.t_min_switch is not None:
            return self.t_min_switch
        return est.warmup + 2 * est.tau


@dataclass
class SwitchState:
    switched: bool = False
    switch_time: float | None = None
    omega_hat: float | None = None
    theta_at_switch: float | None = None
    history: deque = field(default_factory=deque)

    def record(self, t: float, theta_F: float | None, window: float) -> None:
        if theta_F is None:
            self.history.clear()
            return
        self.history.append((t, theta_F))
        while self.history and self.history[0][0] < t - window - 1e-12:
            self.history.popleft()

    def spread(self) -> float:
        vals = [v for _, v in self.history]
        return max(vals) - min(vals)


def should_switch(
    state: SwitchState,
    est_state: EstimatorState,
    est_config: EstimatorConfig,
    t: float,
    config: SwitchingConfig,
) -> bool:
    """Update the trailing window with the current estimate and test it.

    The window must actually span ``dwell_window`` of ready estimates;
    a partially filled window never passes.
    """
    if state.switched:
        return False
    theta_F = finite_time_estimate(est_state, est_config)
    state.record(t, theta_F, config.dwell_window)
    if theta_F is None or t < config.earliest(est_config):
        return False
    t_first = state.history[0][0]
    if t - t_first < config.dwell_window - 1e-12:
        return False
    return state.spread() <= config.stability_tol


def apply_switch(
    state: SwitchState,
    compensator: Compensator,
    est_state: EstimatorState,
    est_config: EstimatorConfig,
    t: float,
) -> float:
    if state.switched:
        raise SingleSwitchViolation("single-switch violated: controller already retuned")
    theta_F = finite_time_estimate(est_state, est_config)
    if theta_F is None:
        raise RuntimeError("finite-time estimate is not ready")
    omega_hat = recover_frequency(theta_F, est_config.tau, est_config)
    omega_used = compensator.retune(omega_hat)
    state.switched = True
    state.switch_time = t
    state.omega_hat = omega_used
    state.theta_at_switch = theta_F
    return omega_used
