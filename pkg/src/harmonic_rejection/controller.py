"""Consecutive-compensator output feedback with an internal-model filter.

The control law is

    u = -k * F(p) xi_1,      F(p) = alpha(p) (p + 1)^r / D(p)

where ``D(p) = p (p^2 + w^2)`` (default) or ``p^2 + w^2``, and ``xi`` is the
state of the high-gain chain ``xi' = sigma (Gamma xi + d y)``.  When F is not
strictly proper its polynomial part acts on derivatives of ``xi_1``; those
are read off the chain itself (``xi_1^(j) = sigma^j xi_{j+1}``), so no
numerical differentiation is involved.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .lti import Polynomial, StateSpaceModel, TransferFunction, is_hurwitz, tf_to_statespace

log = logging.getLogger(__name__)


class ControllerConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CompensatorConfig:
    k: float
    sigma: float
    observer_gains: tuple[float, ...]
    alpha: Polynomial
    internal_model_freq: float
    rho: int
    omega_min: float = 0.5
    omega_max: float = 10.0
    lead_power: int = 2
    integrator: bool = True
    fade_steps: int = 10

    def __post_init__(self):
        object.__setattr__(self, "observer_gains", tuple(float(g) for g in self.observer_gains))
        if not isinstance(self.alpha, Polynomial):
            object.__setattr__(self, "alpha", Polynomial(self.alpha))
        problems = self.violations()
        if problems:
            raise ControllerConfigError("; ".join(problems))

    def violations(self) -> list[str]:
        out = []
        if not self.k > 0:
            out.append("k must be positive")
        if not self.sigma > self.k:
            out.append("sigma must exceed k")
        if self.rho < 1:
            out.append("rho must be at least 1")
        if len(self.observer_gains) != max(self.rho - 1, 0):
            out.append(f"need {self.rho - 1} observer gains, got {len(self.observer_gains)}")
        if self.alpha.degree != self.rho - 1:
            out.append(f"alpha must have degree rho-1={self.rho - 1}")
        elif self.alpha.degree >= 1 and not is_hurwitz(self.alpha):
            out.append("alpha must be Hurwitz")
        elif self.alpha.degree == 0 and self.alpha.leading <= 0:
            out.append("alpha must be a positive constant when rho=1")
        if not 0 < self.omega_min < self.omega_max:
            out.append("need 0 < omega_min < omega_max")
        if self.internal_model_freq <= 0:
            out.append("internal model frequency must be positive")
        if self.lead_power < 0:
            out.append("lead_power must be nonnegative")
        return out


def build_observer_matrices(config: CompensatorConfig):
    """Return ``(Gamma, d, h)`` for the chain ``xi' = sigma (Gamma xi + d y)``."""
    n = config.rho - 1
    if n < 1:
        raise ControllerConfigError("observer is empty for rho=1")
    gains = np.asarray(config.observer_gains, dtype=float)
    Gamma = np.zeros((n, n))
    Gamma[:-1, 1:] = np.eye(n - 1)
    Gamma[-1, :] = -gains
    d = np.zeros(n)
    d[-1] = gains[0]
    h = np.zeros(n)
    h[0] = 1.0
    if not np.all(np.linalg.eigvals(Gamma).real < 0):
        raise ControllerConfigError("bad observer gains: Gamma is not Hurwitz")
    assert np.array_equal(d, -Gamma @ h)
    return Gamma, d, h


@dataclass(frozen=True)
class InternalModelFilter:
    """F(p) split as ``quotient(p) + realization``.

    ``quotient[j]`` multiplies the j-th derivative of the filter input; the
    strictly proper remainder is realized in controllable canonical form.
    """

    omega: float
    num: Polynomial
    den: Polynomial
    quotient: np.ndarray
    realization: StateSpaceModel

    def freqresp(self, omega) -> np.ndarray:
        s = 1j * np.asarray(omega, dtype=float)
        return self.num(s) / self.den(s)

    def realized_freqresp(self, omega) -> np.ndarray:
        s = 1j * np.asarray(omega, dtype=float)
        poly = np.polynomial.polynomial.polyval(s, self.quotient)
        return poly + self.realization.freqresp(omega)


def filter_polynomials(config: CompensatorConfig, omega: float) -> tuple[Polynomial, Polynomial]:
    num = config.alpha * Polynomial([1.0, 1.0]) ** config.lead_power
    if config.integrator:
        den = Polynomial([0.0, omega**2, 0.0, 1.0])
    else:
        den = Polynomial([omega**2, 0.0, 1.0])
    return num, den


def build_internal_model_filter(config: CompensatorConfig, omega: float | None = None):
    omega = config.internal_model_freq if omega is None else omega
    if omega <= 0:
        raise ControllerConfigError("internal model frequency must be positive")
    num, den = filter_polynomials(config, omega)
    q, r = np.polynomial.polynomial.polydiv(num.coeffs, den.coeffs)
    q = np.atleast_1d(q)
    if np.all(q == 0):
        q = np.zeros(1)
    if len(q) - 1 > config.rho - 1:
        raise ControllerConfigError(
            f"filter needs derivative of order {len(q) - 1} but the observer "
            f"only provides up to {config.rho - 1}"
        )
    # pad the remainder to deg(den) - 1 so the realization keeps a fixed order
    r = np.concatenate([r, np.zeros(max(den.degree - len(r), 0))])
    rem = TransferFunction(Polynomial(r), den)
    ss = tf_to_statespace(rem)
    if ss.order != den.degree:
        raise AssertionError("unexpected realization order")
    return InternalModelFilter(omega, num, den, q, ss)


@dataclass
class CompensatorState:
    xi: np.ndarray
    filter_state: np.ndarray
    last_y: float = 0.0
    fade_state: np.ndarray | None = None
    fade_filter: InternalModelFilter | None = None
    fade_left: int = 0

    @classmethod
    def zeros(cls, config: CompensatorConfig, filter_order: int) -> CompensatorState:
        return cls(np.zeros(max(config.rho - 1, 0)), np.zeros(filter_order))


@dataclass(frozen=True)
class LinearMaps:
    """Affine maps of one compensator phase, in terms of ``(xi, xf, y)``.

    ``xi' = A_xi xi + b_xi y``, ``xf' = A_f xf + b_f (in_xi.xi + in_y y)``,
    ``u = g_xi.xi + g_f.xf + g_y y``.
    """

    A_xi: np.ndarray
    b_xi: np.ndarray
    A_f: np.ndarray
    b_f: np.ndarray
    in_xi: np.ndarray
    in_y: float
    g_xi: np.ndarray
    g_f: np.ndarray
    g_y: float


class Compensator:
    """Runtime controller: config, derived matrices, and mutable state."""

    def __init__(self, config: CompensatorConfig):
        self.config = config
        n = config.rho - 1
        if n >= 1:
            self.Gamma, self.d, self.h = build_observer_matrices(config)
        else:
            self.Gamma, self.d, self.h = np.zeros((0, 0)), np.zeros(0), np.zeros(0)
        self.filter = build_internal_model_filter(config)
        self.state = CompensatorState.zeros(config, self.filter.realization.order)
        self.warnings: list[str] = []

    # -- linear structure -------------------------------------------------
    def maps(self, filt: InternalModelFilter | None = None) -> LinearMaps:
        cfg = self.config
        filt = self.filter if filt is None else filt
        n = cfg.rho - 1
        sigma = cfg.sigma
        A_xi = sigma * self.Gamma
        b_xi = sigma * self.d
        if n >= 1:
            in_xi, in_y = self.h.copy(), 0.0
        else:
            in_xi, in_y = np.zeros(0), 1.0
        # derivative j of the filter input as an affine map of (xi, y)
        g_xi = np.zeros(n)
        g_y = 0.0
        for j, qj in enumerate(filt.quotient):
            if qj == 0.0:
                continue
            if n == 0:
                g_y += qj
            elif j < n:
                g_xi[j] += qj * sigma**j
            else:
                g_xi += qj * sigma**n * (-np.asarray(cfg.observer_gains))
                g_y += qj * sigma**n * cfg.observer_gains[0]
        ss = filt.realization
        return LinearMaps(
            A_xi=A_xi,
            b_xi=b_xi,
            A_f=ss.A,
            b_f=ss.b,
            in_xi=in_xi,
            in_y=in_y,
            g_xi=-cfg.k * g_xi,
            g_f=-cfg.k * ss.c,
            g_y=-cfg.k * g_y,
        )

    # -- stepping ---------------------------------------------------------
    def observer_step(self, y: float, dt: float) -> None:
        """Advance ``xi`` one RK4 step with ``y`` held over the step."""
        if dt <= 0:
            raise ValueError("dt must be positive")
        st = self.state
        st.last_y = float(y)
        if self.config.rho < 2:
            return
        m = self.maps()

        def f(x):
            return m.A_xi @ x + m.b_xi * y

        st.xi = _rk4_autonomous(f, st.xi, dt)

    def xi1(self) -> float:
        if self.config.rho < 2:
            return self.state.last_y
        return float(self.state.xi[0])

    def _filter_output(self, m: LinearMaps, xf: np.ndarray) -> float:
        st = self.state
        return float(m.g_xi @ st.xi + m.g_f @ xf + m.g_y * st.last_y)

    def control_output(self, dt: float) -> float:
        """Return u for the current tick, then advance the filter state(s)."""
        st = self.state
        m = self.maps()
        u = self._filter_output(m, st.filter_state)
        if st.fade_filter is not None and st.fade_left > 0:
            m_old = self.maps(st.fade_filter)
            u_old = self._filter_output(m_old, st.fade_state)
            lam = 1.0 - st.fade_left / self.config.fade_steps
            u = (1.0 - lam) * u_old + lam * u
            st.fade_state = _advance_filter(m_old, st.fade_state, st.xi, st.last_y, dt)
            st.fade_left -= 1
            if st.fade_left == 0:
                st.fade_filter, st.fade_state = None, None
        st.filter_state = _advance_filter(m, st.filter_state, st.xi, st.last_y, dt)
        return u

    def retune(self, new_omega: float) -> float:
        """Swap the internal model to ``new_omega``; returns the frequency used.

        The new realization starts from a zero state and the old one keeps
        running for ``fade_steps`` ticks while u is cross-faded between them.
        """
        cfg = self.config
        lo, hi = cfg.omega_min, cfg.omega_max
        if not lo <= new_omega <= hi:
            clamped = min(max(new_omega, lo), hi)
            msg = f"internal model frequency {new_omega:.6g} clamped to {clamped:.6g}"
            log.warning(msg)
            self.warnings.append(msg)
            new_omega = clamped
        if new_omega == cfg.internal_model_freq:
            return new_omega
        st = self.state
        st.fade_filter = self.filter
        st.fade_state = st.filter_state.copy()
        st.fade_left = cfg.fade_steps
        self.config = replace(cfg, internal_model_freq=new_omega)
        self.filter = build_internal_model_filter(self.config)
        st.filter_state = np.zeros(self.filter.realization.order)
        return new_omega


def _advance_filter(m: LinearMaps, xf, xi, y, dt):
    inp = float(m.in_xi @ xi + m.in_y * y)

    def f(x):
        return m.A_f @ x + m.b_f * inp

    return _rk4_autonomous(f, xf, dt)


def _rk4_autonomous(f, x, h):
    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
