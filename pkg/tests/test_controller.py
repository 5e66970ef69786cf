import logging

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from harmonic_rejection.controller import (
    Compensator,
    CompensatorConfig,
    ControllerConfigError,
    build_internal_model_filter,
    build_observer_matrices,
)
from harmonic_rejection.lti import Polynomial


def tuned_config(**kw):
    base = dict(
        k=1.2,
        sigma=35.0,
        observer_gains=(2.0, 5.0),
        alpha=Polynomial([1, 3, 1]),
        internal_model_freq=1.2,
        rho=3,
    )
    base.update(kw)
    return CompensatorConfig(**base)


def hurwitz_gains(roots):
    """Observer gains k1..kn whose companion matrix has the given roots."""
    poly = np.poly(roots)[::-1].real  # ascending, monic
    return tuple(poly[:-1])


def test_observer_matrices_tuned_gains():
    G, d, h = build_observer_matrices(tuned_config())
    assert np.array_equal(G, [[0.0, 1.0], [-2.0, -5.0]])
    assert np.array_equal(d, [0.0, 2.0])
    assert np.array_equal(h, [1.0, 0.0])
    assert np.array_equal(-G @ h, d)


def test_observer_matrices_scalar():
    cfg = tuned_config(rho=2, observer_gains=(1.0,), alpha=Polynomial([1, 1]))
    G, d, h = build_observer_matrices(cfg)
    assert np.array_equal(G, [[-1.0]]) and np.array_equal(d, [1.0]) and np.array_equal(h, [1.0])


@given(st.integers(2, 6), st.lists(st.floats(0.2, 5.0), min_size=5, max_size=5))
def test_d_equals_minus_gamma_h(rho, roots):
    gains = hurwitz_gains([-r for r in roots[: rho - 1]])
    alpha = Polynomial(np.poly([-1.0] * (rho - 1))[::-1])
    cfg = tuned_config(rho=rho, observer_gains=gains, alpha=alpha)
    G, d, h = build_observer_matrices(cfg)
    assert np.array_equal(-G @ h, d)


def test_bad_observer_gains():
    with pytest.raises(ControllerConfigError, match="bad observer gains"):
        build_observer_matrices(tuned_config(observer_gains=(2.0, -5.0)))


def test_config_invariants():
    with pytest.raises(ControllerConfigError, match="sigma must exceed k"):
        tuned_config(sigma=0.6)
    with pytest.raises(ControllerConfigError, match="degree"):
        tuned_config(alpha=Polynomial([1, 1]))
    with pytest.raises(ControllerConfigError, match="Hurwitz"):
        tuned_config(alpha=Polynomial([1, -3, 1]))


def test_observer_equilibrium_and_constant_input():
    comp = Compensator(tuned_config())
    for _ in range(100):
        comp.observer_step(0.0, 1e-3)
    assert np.all(comp.state.xi == 0.0)
    for _ in range(3000):
        comp.observer_step(0.7, 1e-3)
    assert comp.xi1() == pytest.approx(0.7, abs=1e-9)


def _settle_time(sigma):
    comp = Compensator(tuned_config(sigma=sigma))
    t = 0.0
    while abs(comp.xi1() - 1.0) > 1e-3:
        comp.observer_step(1.0, 1e-4)
        t += 1e-4
    return t


def test_observer_speed_scales_with_sigma():
    ratio = _settle_time(35.0) / _settle_time(70.0)
    assert ratio == pytest.approx(2.0, rel=0.02)


def test_filter_resonance_scalar_case():
    cfg = CompensatorConfig(
        k=1.0, sigma=2.0, observer_gains=(), alpha=Polynomial([1.0]),
        internal_model_freq=1.0, rho=1,
    )
    f = build_internal_model_filter(cfg)
    assert abs(f.freqresp(1.0 + 1e-6)[()]) > 1e5


def test_filter_resonance_tuned_config():
    f = build_internal_model_filter(tuned_config())
    near = np.abs(f.freqresp(1.2 * np.array([1 - 1e-4, 1 + 1e-4])))
    assert np.all(near > 1e3 * abs(f.freqresp(2.4)))


def test_filter_has_integrator_pole():
    f = build_internal_model_filter(tuned_config())
    assert f.den(0.0) == 0.0
    assert abs(f.freqresp(1e-6)) > 1e5


def test_filter_split_matches_rational_form():
    f = build_internal_model_filter(tuned_config())
    w = np.logspace(-1, 2, 30)
    w = w[np.abs(w - 1.2) > 1e-2]
    ref = f.freqresp(w)
    assert np.max(np.abs(f.realized_freqresp(w) - ref) / np.abs(ref)) < 1e-9


def test_filter_rejects_nonpositive_frequency():
    with pytest.raises(ValueError):
        build_internal_model_filter(tuned_config(), omega=0.0)


def _replay(cfg, ys, dt=1e-3):
    comp = Compensator(cfg)
    out = []
    for y in ys:
        comp.observer_step(y, dt)
        out.append(comp.control_output(dt))
    return np.array(out)


def test_zero_input_zero_control():
    assert np.all(_replay(tuned_config(), np.zeros(200)) == 0.0)


def test_control_doubles_with_k():
    ys = np.sin(np.linspace(0, 3, 300))
    u1 = _replay(tuned_config(k=1.2), ys)
    u2 = _replay(tuned_config(k=2.4), ys)
    assert np.allclose(u2, 2 * u1, rtol=1e-12, atol=1e-14)


def test_controller_is_linear():
    rng = np.random.default_rng(3)
    y1 = rng.normal(size=400)
    y2 = np.cos(np.linspace(0, 5, 400))
    cfg = tuned_config()
    lhs = _replay(cfg, 2.0 * y1 - 0.5 * y2)
    rhs = 2.0 * _replay(cfg, y1) - 0.5 * _replay(cfg, y2)
    assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-9 * np.max(np.abs(lhs)))


def test_retune_same_frequency_is_noop():
    comp = Compensator(tuned_config())
    for y in np.linspace(0, 1, 50):
        comp.observer_step(y, 1e-3)
        comp.control_output(1e-3)
    before_state = comp.state.filter_state.copy()
    before_filter = comp.filter
    comp.retune(1.2)
    assert comp.filter is before_filter
    assert np.array_equal(comp.state.filter_state, before_state)
    assert comp.state.fade_filter is None


def test_retune_clamps_with_warning(caplog):
    comp = Compensator(tuned_config())
    with caplog.at_level(logging.WARNING):
        used = comp.retune(0.1)
    assert used == 0.5
    assert comp.config.internal_model_freq == 0.5
    assert comp.warnings and "clamped" in caplog.text


def test_retune_keeps_control_continuous():
    dt = 1e-3
    comp = Compensator(tuned_config())
    ys = np.sin(1.2 * np.arange(4000) * dt)
    us = []
    for i, y in enumerate(ys):
        if i == 2000:
            comp.retune(4.0)
        comp.observer_step(y, dt)
        us.append(comp.control_output(dt))
    du = np.abs(np.diff(us))
    typical = np.max(du[1000:1990])
    # the cross-fade spreads the jump over ten ticks
    assert np.max(du[1995:2015]) < 0.25 * abs(us[1999]) + 10 * typical
    assert np.all(np.isfinite(us))
