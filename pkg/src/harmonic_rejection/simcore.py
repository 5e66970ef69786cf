"""Fixed-step simulation of the estimator alone and of the full closed loop."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Callable

import numpy as np

from .controller import Compensator, LinearMaps
from .plants import LinearPlant
from .estimator import EstimatorConfig, EstimatorState, estimator_step, finite_time_estimate
from .signals import DelayBuffer, HarmonicDisturbance, InsufficientHistory
from .switching import SwitchingConfig, SwitchState, apply_switch, should_switch

if TYPE_CHECKING:
    from .scenario import Scenario

Y_LIMIT = 1e3

CHANNELS = (
    "t",
    "y",
    "u",
    "delta",
    "xi1",
    "theta_hat",
    "theta_F",
    "w",
    "omega_bar",
    "switch",
)


class DivergenceError(FloatingPointError):
    pass


@dataclass(frozen=True)
class SimConfig:
    step: float = 1e-3
    duration: float = 30.0
    noise_std: float = 0.0
    rng_seed: int = 0
    strict_delay: bool = True

    def violations(self, tau: float | None = None) -> list[str]:
        out = []
        if not self.step > 0:
            out.append("step must be positive")
        elif not self.duration >= self.step:
            out.append("duration must be at least one step")
        if self.noise_std < 0:
            out.append("noise_std must be nonnegative")
        if tau is not None and self.strict_delay and self.step > 0:
            m = tau / self.step
            if abs(m - round(m)) > 1e-9 * max(1.0, m):
                out.append("tau must be an integer multiple of step in strict-delay mode")
        return out

    @property
    def n_steps(self) -> int:
        return max(int(round(self.duration / self.step)), 1)


def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], x: np.ndarray, t: float, h: float):
    """Classical fourth-order Runge-Kutta step."""
    if not h > 0:
        raise ValueError("step must be positive")
    k1 = f(t, x)
    k2 = f(t + 0.5 * h, x + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, x + 0.5 * h * k2)
    k4 = f(t + h, x + h * k3)
    out = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise DivergenceError(f"divergence: non-finite state at t={t + h:.6g}")
    return out


@dataclass
class TraceLog:
    channels: dict[str, np.ndarray]
    events: list[dict] = field(default_factory=list)
    status: str = "ok"
    diagnostic: str = ""

    def __getitem__(self, name: str) -> np.ndarray:
        return self.channels[name]

    def __len__(self) -> int:
        return len(self.channels["t"])

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_csv(self, path: str | Path) -> None:
        names = list(self.channels)
        cols = [self.channels[n] for n in names]
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(names)
            for row in zip(*cols):
                wr.writerow([format(float(v), ".17g") for v in row])

    @classmethod
    def from_csv(cls, path: str | Path) -> TraceLog:
        with open(path, newline="") as fh:
            rd = csv.reader(fh)
            names = next(rd)
            rows = [[float(v) for v in r] for r in rd]
        data = np.array(rows, dtype=float).reshape(len(rows), len(names))
        return cls({n: data[:, i].copy() for i, n in enumerate(names)})


class _Recorder:
    def __init__(self, n: int):
        self.buf = {c: np.full(n, np.nan) for c in CHANNELS}
        self.n = 0

    def add(self, **vals):
        i = self.n
        for k, v in vals.items():
            self.buf[k][i] = v
        self.n += 1

    def finish(self, events, status="ok", diagnostic="") -> TraceLog:
        chans = {k: v[: self.n].copy() for k, v in self.buf.items()}
        return TraceLog(chans, events, status, diagnostic)


def _lags(est: EstimatorConfig, sim: SimConfig) -> int | None:
    m = est.tau / sim.step
    if abs(m - round(m)) <= 1e-9 * max(1.0, m):
        return int(round(m))
    return None


def _regressor(buf: DelayBuffer, t: float, lag: int | None, tau: float):
    if lag is not None:
        y0, y1, y2 = buf.lag(0), buf.lag(lag), buf.lag(2 * lag)
    else:
        y0, y1, y2 = buf.sample(t), buf.sample(t - tau), buf.sample(t - 2 * tau)
    return 0.5 * (y0 + y2), y1


def run_open_loop_estimation(
    disturbance: HarmonicDisturbance,
    est_config: EstimatorConfig,
    sim: SimConfig,
) -> TraceLog:
    """Estimate the frequency of a directly measured disturbance."""
    n = sim.n_steps
    h = sim.step
    rng = np.random.default_rng(sim.rng_seed)
    buf = DelayBuffer.for_delay(est_config.tau, h)
    lag = _lags(est_config, sim)
    est = EstimatorState.initial(est_config)
    rec = _Recorder(n)
    for i in range(n):
        t = i * h
        delta = float(disturbance(t))
        y = delta + (rng.normal(0.0, sim.noise_std) if sim.noise_std > 0 else 0.0)
        buf.push(t, y)
        zp = None
        if t >= est_config.warmup - 1e-12:
            try:
                zp = _regressor(buf, t, lag, est_config.tau)
            except InsufficientHistory:
                zp = None
        est.active = zp is not None
        theta_F = finite_time_estimate(est, est_config)
        rec.add(
            t=t,
            y=y,
            u=0.0,
            delta=delta,
            xi1=np.nan,
            theta_hat=est.theta_hat,
            theta_F=np.nan if theta_F is None else theta_F,
            w=est.w,
            omega_bar=np.nan,
            switch=0.0,
        )
        if zp is not None:
            estimator_step(est, zp[0], zp[1], h, est_config)
    return rec.finish([])


class _Loop:
    """Augmented-state vector field for one controller phase.

    State layout: plant | xi | filter | fading filter | theta_hat, w.  With a
    linear plant everything except the estimator collapses into one matrix.
    """

    def __init__(self, plant, comp: Compensator, n_filter: int):
        self.plant = plant
        self.npl = plant.n_states
        self.nxi = comp.config.rho - 1
        self.nf = n_filter
        o = self.npl
        self.s_p = slice(0, o)
        self.s_xi = slice(o, o + self.nxi)
        self.s_f = slice(o + self.nxi, o + self.nxi + n_filter)
        self.s_fo = slice(o + self.nxi + n_filter, o + self.nxi + 2 * n_filter)
        self.n_lin = o + self.nxi + 2 * n_filter
        self.i_th = self.n_lin
        self.i_w = self.n_lin + 1
        self.size = self.n_lin + 2
        self.linear = isinstance(plant, LinearPlant)
        self.set_phase(comp.maps(), None)

    def _ctrl(self, m: LinearMaps, s_f: slice):
        """Controller pieces acting on the linear part for one filter slot."""
        n = self.n_lin
        M = np.zeros((n, n))
        ycol = np.zeros(n)
        M[s_f, s_f] = m.A_f
        M[s_f, self.s_xi] = np.outer(m.b_f, m.in_xi)
        ycol[s_f] = m.b_f * m.in_y
        row = np.zeros(n)
        row[self.s_xi] = m.g_xi
        row[s_f] = m.g_f
        return M, ycol, row, m.g_y

    def set_phase(self, new: LinearMaps, old: LinearMaps | None, t0=0.0, length=0.0):
        self.new, self.old = new, old
        self.fade_start, self.fade_len = t0, length
        n = self.n_lin
        M0 = np.zeros((n, n))
        y0 = np.zeros(n)
        M0[self.s_xi, self.s_xi] = new.A_xi
        y0[self.s_xi] = new.b_xi
        Mn, yn, self.row_new, self.gy_new = self._ctrl(new, self.s_f)
        M0 += Mn
        y0 += yn
        if old is not None:
            Mo, yo, self.row_old, self.gy_old = self._ctrl(old, self.s_fo)
            M0 += Mo
            y0 += yo
        else:
            self.row_old, self.gy_old = np.zeros(n), 0.0
        self.M_ctrl, self.ycol = M0, y0
        if self.linear:
            ss = self.plant.ss
            c = np.zeros(n)
            c[self.s_p] = ss.c
            bcol = np.zeros(n)
            bcol[self.s_p] = ss.b
            Mfix = M0 + np.outer(y0, c)
            Mfix[self.s_p, self.s_p] += ss.A
            self.c_full, self.bcol = c, bcol
            self.P_new = np.outer(bcol, self.row_new + self.gy_new * c)
            self.P_old = np.outer(bcol, self.row_old + self.gy_old * c)
            self.Mfix = Mfix
            self.M_plain = Mfix + self.P_new

    def lam(self, t: float) -> float:
        if self.old is None:
            return 1.0
        return min(max((t - self.fade_start) / self.fade_len, 0.0), 1.0)

    def control(self, t: float, x: np.ndarray, y: float) -> float:
        xl = x[: self.n_lin]
        u = float(self.row_new @ xl + self.gy_new * y)
        if self.old is not None:
            lam = self.lam(t)
            u = lam * u + (1.0 - lam) * float(self.row_old @ xl + self.gy_old * y)
        return u

    def field(self, dist, noise: float, z: float, ph: float, K: float, active: bool):
        n = self.n_lin
        i_th, i_w = self.i_th, self.i_w
        k_th = K * ph * z
        k_w = K * ph * ph

        def est(dx, xx):
            if active:
                dx[i_th] = k_th - k_w * xx[i_th]
                dx[i_w] = -k_w * xx[i_w]
            else:
                dx[i_th] = 0.0
                dx[i_w] = 0.0
            return dx

        if self.linear and self.old is None:
            M = self.M_plain
            off = (self.ycol + self.bcol * self.gy_new) * noise
            bcol = self.bcol

            def f(tt, xx):
                dx = np.empty(n + 2)
                dx[:n] = M @ xx[:n] + off + bcol * float(dist(tt))
                return est(dx, xx)

            return f

        if self.linear:

            def f(tt, xx):
                lam = self.lam(tt)
                M = self.Mfix + lam * self.P_new + (1.0 - lam) * self.P_old
                gy = lam * self.gy_new + (1.0 - lam) * self.gy_old
                dx = np.empty(n + 2)
                dx[:n] = (
                    M @ xx[:n]
                    + (self.ycol + self.bcol * gy) * noise
                    + self.bcol * float(dist(tt))
                )
                return est(dx, xx)

            return f

        plant = self.plant
        s_p = self.s_p

        def f(tt, xx):
            yy = plant.output(xx[s_p]) + noise
            uu = self.control(tt, xx, yy)
            dx = np.empty(n + 2)
            dx[:n] = self.M_ctrl @ xx[:n] + self.ycol * yy
            dx[s_p] = plant.deriv(xx[s_p], uu + float(dist(tt)))
            return est(dx, xx)

        return f


def run_closed_loop(scenario: Scenario) -> TraceLog:
    """Integrate plant, compensator and estimator as one augmented ODE.

    Delayed samples, measurement noise and the estimator regressor are held
    constant within a step; the disturbance is evaluated continuously.
    """
    sim = scenario.sim
    est_cfg = scenario.estimator
    sw_cfg = scenario.switching
    dist = scenario.disturbance
    plant = scenario.build_plant()
    comp = Compensator(scenario.controller)
    half_width = scenario.plant.params.L / 2
    h = sim.step
    n = sim.n_steps
    rng = np.random.default_rng(sim.rng_seed)

    loop = _Loop(plant, comp, comp.filter.realization.order)
    s_p, s_f, s_fo = loop.s_p, loop.s_f, loop.s_fo
    x = np.zeros(loop.size)
    x[loop.i_th] = est_cfg.theta0
    x[loop.i_w] = 1.0

    buf = DelayBuffer.for_delay(est_cfg.tau, h)
    lag = _lags(est_cfg, sim)
    sw_state = SwitchState()
    est_view = EstimatorState(theta_hat=est_cfg.theta0)
    rec = _Recorder(n)
    events: list[dict] = []
    status, diagnostic = "ok", ""

    for i in range(n):
        t = i * h
        noise = rng.normal(0.0, sim.noise_std) if sim.noise_std > 0 else 0.0
        y_true = plant.output(x[s_p])
        y = y_true + noise
        if not math.isfinite(y_true) or abs(y_true) > Y_LIMIT:
            status, diagnostic = "divergence", f"divergence: |y| exceeded {Y_LIMIT:g} at t={t:.6g}"
            break
        if abs(plant.position(x[s_p])) > half_width:
            status, diagnostic = "ball-left-plate", f"ball left plate at t={t:.6g}"
            break
        buf.push(t, y)
        zp = None
        if t >= est_cfg.warmup - 1e-12:
            try:
                zp = _regressor(buf, t, lag, est_cfg.tau)
            except InsufficientHistory:
                zp = None
        est_view.theta_hat = float(x[loop.i_th])
        est_view.w = float(x[loop.i_w])
        est_view.active = zp is not None

        switched_now = False
        if scenario.switch_enabled and should_switch(sw_state, est_view, est_cfg, t, sw_cfg):
            omega_hat = apply_switch(sw_state, comp, est_view, est_cfg, t)
            switched_now = True
            old = comp.state.fade_filter
            if old is not None:
                loop.set_phase(comp.maps(), comp.maps(old), t, comp.config.fade_steps * h)
                x[s_fo] = x[s_f]
                x[s_f] = 0.0
            events.append(
                {"event": "switch", "t": t, "omega_hat": omega_hat, "theta_F": sw_state.theta_at_switch}
            )
        if loop.old is not None and t >= loop.fade_start + loop.fade_len:
            loop.set_phase(loop.new, None)
            x[s_fo] = 0.0

        theta_F = finite_time_estimate(est_view, est_cfg)
        rec.add(
            t=t,
            y=y,
            u=loop.control(t, x, y),
            delta=float(dist(t)),
            xi1=x[loop.s_xi][0] if loop.nxi else y,
            theta_hat=est_view.theta_hat,
            theta_F=np.nan if theta_F is None else theta_F,
            w=est_view.w,
            omega_bar=comp.config.internal_model_freq,
            switch=1.0 if switched_now else 0.0,
        )

        z, ph = zp if zp is not None else (0.0, 0.0)
        f = loop.field(dist, noise, z, ph, est_cfg.gain_K, zp is not None)
        try:
            x = rk4_step(f, x, t, h)
        except DivergenceError as exc:
            status, diagnostic = "divergence", str(exc)
            break

    return rec.finish(events, status, diagnostic)


def settling_time(t: np.ndarray, y: np.ndarray, level: float) -> float | None:
    """First time after which ``|y|`` stays at or below ``level``."""
    above = np.nonzero(np.abs(y) > level)[0]
    if above.size == 0:
        return float(t[0])
    if above[-1] == len(y) - 1:
        return None
    return float(t[above[-1] + 1])


def summarize(trace: TraceLog) -> dict:
    t, y, u = trace["t"], trace["y"], trace["u"]
    sw = [e for e in trace.events if e["event"] == "switch"]
    T = sw[0]["t"] if sw else None
    pre = y[t < T] if T is not None else y
    peak = float(np.max(np.abs(pre))) if pre.size else 0.0
    settle = settling_time(t, y, 0.01 * peak) if peak > 0 else None
    theta_F = trace["theta_F"]
    ready = bool(np.any(np.isfinite(theta_F)))
    return {
        "status": trace.status,
        "diagnostic": trace.diagnostic,
        "omega_hat": sw[0]["omega_hat"] if sw else None,
        "switch_time": T,
        "theta_F_at_switch": sw[0]["theta_F"] if sw else None,
        "estimator_ready": ready,
        "final_theta_F": float(theta_F[np.isfinite(theta_F)][-1]) if ready else None,
        "pre_switch_peak_y": peak,
        "settling_time": settle,
        "peak_abs_u": float(np.max(np.abs(u))) if len(u) else 0.0,
        "final_abs_y": float(abs(y[-1])) if len(y) else 0.0,
        "rows": len(trace),
    }
