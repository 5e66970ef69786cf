"""Ball-and-plate dynamics: servo link, nonlinear and linearized ball motion."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .lti import Polynomial, StateSpaceModel, TransferFunction, tf_to_statespace


@dataclass(frozen=True)
class BallPlateParams:
    m_b: float = 0.05  # kg
    r_b: float = 0.0125  # m
    I_b: float = 3.13e-5  # kg m^2
    g: float = 9.81  # m/s^2
    L: float = 0.11  # m, plate side
    d: float = 0.02  # m, servo arm
    K_m: float = 0.25
    T_m: float = 0.018  # s

    def __post_init__(self):
        bad = [f.name for f in fields(self) if not getattr(self, f.name) > 0 and f.name != "K_m"]
        if self.K_m < 0:
            bad.append("K_m")
        if bad:
            raise ValueError(f"parameters must be positive: {', '.join(bad)}")

    def consistency_warnings(self) -> list[str]:
        """Soft checks that never reject a parameter set."""
        out = []
        solid = 0.4 * self.m_b * self.r_b**2
        if self.I_b > 1.1 * solid:
            out.append(
                f"I_b={self.I_b:.4g} exceeds the solid-sphere value {solid:.4g} by more than 10%"
            )
        return out

    @property
    def effective_mass(self) -> float:
        return self.m_b + self.I_b / self.r_b**2

    @property
    def linear_gain(self) -> float:
        """Ball acceleration per radian of servo angle in the linearized model."""
        return 2 * self.m_b * self.g * self.d / self.L / self.effective_mass


PROFILES = {"paper": BallPlateParams()}


@dataclass
class BallPlateState:
    x_b: float = 0.0
    y_b: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    Qx: float = 0.0
    Qy: float = 0.0

    def on_plate(self, params: BallPlateParams) -> bool:
        half = params.L / 2
        return abs(self.x_b) <= half and abs(self.y_b) <= half


def servo_to_plate_angle(Q: float, params: BallPlateParams) -> float:
    return params.d / params.L * Q


def servo_rate(Q: float, u: float, params: BallPlateParams) -> float:
    return (params.K_m * u - Q) / params.T_m


def plate_rates(state: BallPlateState, params: BallPlateParams, ux: float = 0.0, uy: float = 0.0):
    k = params.d / params.L
    return k * servo_rate(state.Qx, ux, params), k * servo_rate(state.Qy, uy, params)


def nonlinear_accel(
    state: BallPlateState,
    params: BallPlateParams,
    rates: tuple[float, float] | None = None,
    u: tuple[float, float] = (0.0, 0.0),
) -> tuple[float, float]:
    """Ball accelerations from the Euler-Lagrange model.

    Plate rates come from the servo chain driven by ``u`` unless given
    explicitly.
    """
    if rates is None:
        rates = plate_rates(state, params, *u)
    da, db = rates
    m, M = params.m_b, params.effective_mass
    ax = (m * (state.x_b * da**2 + state.y_b * (da * db)) - m * params.g * math.sin(state.alpha)) / M
    ay = (m * (state.y_b * db**2 + state.x_b * (da * db)) - m * params.g * math.sin(state.beta)) / M
    return ax, ay


def linearized_accel(state: BallPlateState, params: BallPlateParams) -> tuple[float, float]:
    G = params.linear_gain
    return G * state.Qx, G * state.Qy


def servo_step(Q: float, u: float, dt: float, params: BallPlateParams) -> float:
    """Advance ``T_m Q' = -Q + K_m u`` by ``dt`` (exact for constant ``u``)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    target = params.K_m * u
    return target + (Q - target) * math.exp(-dt / params.T_m)


def linearized_tf(params: BallPlateParams) -> TransferFunction:
    """b(p)/a(p) of one plate axis, input to ball position."""
    p = params
    b = Polynomial([2 * p.m_b * p.g * p.d * p.r_b**2 * p.K_m])
    a = Polynomial([0.0, 0.0, p.L * p.I_b, p.L * p.m_b * p.r_b**2 * p.T_m])
    return TransferFunction(b, a)


def series_tf(params: BallPlateParams) -> TransferFunction:
    """Servo lag in series with the linearized ball double integrator."""
    servo = TransferFunction(Polynomial([params.K_m]), Polynomial([1.0, params.T_m]))
    ball = TransferFunction(Polynomial([params.linear_gain]), Polynomial([0.0, 0.0, 1.0]))
    return servo * ball


class LinearPlant:
    """Controllable-canonical realization of ``scale * b(p)/a(p)``.

    ``scale`` converts the model's position (metres) into measurement units.
    """

    def __init__(self, tf: TransferFunction, output_scale: float = 1.0):
        scaled = TransferFunction(tf.num * output_scale, tf.den)
        self.ss: StateSpaceModel = tf_to_statespace(scaled)
        if self.ss.d != 0.0:
            raise ValueError("plant must be strictly proper")
        self.output_scale = output_scale

    @property
    def n_states(self) -> int:
        return self.ss.order

    def deriv(self, x: np.ndarray, v: float) -> np.ndarray:
        return self.ss.A @ x + self.ss.b * v

    def output(self, x: np.ndarray) -> float:
        return float(self.ss.c @ x)

    def position(self, x: np.ndarray) -> float:
        return self.output(x) / self.output_scale


class NonlinearAxisPlant:
    """One plate axis with the servo link and the nonlinear ball equation.

    States are ``(x_b, vx, Qx)``; the other axis is held level with the ball
    on its centre line, which removes the cross-coupling terms.  The output
    is measured along the downhill direction, ``y = -scale * x_b``, so that a
    positive command moves the output the same way as in the linearized
    transfer function.
    """

    n_states = 3

    def __init__(self, params: BallPlateParams, output_scale: float = 1.0):
        self.params = params
        self.output_scale = output_scale

    def deriv(self, x: np.ndarray, v: float) -> np.ndarray:
        p = self.params
        xb, vx, Q = x
        dQ = servo_rate(Q, v, p)
        da = p.d / p.L * dQ
        alpha = p.d / p.L * Q
        ax = (p.m_b * xb * da**2 - p.m_b * p.g * math.sin(alpha)) / p.effective_mass
        return np.array([vx, ax, dQ])

    def output(self, x: np.ndarray) -> float:
        return float(-self.output_scale * x[0])

    def position(self, x: np.ndarray) -> float:
        return float(x[0])
