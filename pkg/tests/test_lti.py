import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from harmonic_rejection.lti import (
    Polynomial,
    TransferFunction,
    closed_loop_char_poly,
    is_hurwitz,
    passive_loop_denominator,
    poly_mul,
    routh_hurwitz,
    spr_check,
    tf_to_statespace,
)
from harmonic_rejection.plants import BallPlateParams, linearized_tf

coef = st.floats(-10, 10, allow_nan=False).filter(lambda v: abs(v) > 1e-3)


def polys(max_deg=4):
    return st.lists(coef, min_size=1, max_size=max_deg + 1).map(Polynomial)


def test_trailing_dust_is_trimmed():
    p = Polynomial([1.0, 2.0, 1e-15])
    assert p.degree == 1
    assert p.leading == 2.0


def test_poly_mul_binomial_square():
    assert poly_mul(Polynomial([1, 1]), Polynomial([1, 1])) == Polynomial([1, 2, 1])


def test_poly_mul_by_p_shifts():
    q = Polynomial([3.0, -1.0, 2.0])
    assert np.array_equal(poly_mul(Polynomial([0, 1]), q).coeffs, [0.0, 3.0, -1.0, 2.0])


def test_poly_mul_hand_expansion():
    # (1 + 3p + p^2)(1 + 2p + p^2) = 1 + 5p + 8p^2 + 5p^3 + p^4
    out = poly_mul(Polynomial([1, 3, 1]), Polynomial([1, 1]) ** 2)
    assert np.array_equal(out.coeffs, [1.0, 5.0, 8.0, 5.0, 1.0])


@given(polys(), polys())
def test_poly_mul_commutes(p, q):
    assert np.allclose(poly_mul(p, q).coeffs, poly_mul(q, p).coeffs, rtol=1e-12, atol=1e-9)


@given(polys(3), polys(3), polys(3))
def test_poly_mul_associates(p, q, r):
    lhs = poly_mul(poly_mul(p, q), r).coeffs
    rhs = poly_mul(p, poly_mul(q, r)).coeffs
    assert lhs.shape == rhs.shape
    assert np.allclose(lhs, rhs, rtol=1e-10, atol=1e-8)


@pytest.mark.parametrize(
    "coeffs, expected",
    [([1, 1], True), ([1.2**2, 0, 1], False), ([1, 3, 1], True), ([-1, 1], False)],
)
def test_is_hurwitz_examples(coeffs, expected):
    assert is_hurwitz(Polynomial(coeffs)) is expected
    assert routh_hurwitz(Polynomial(coeffs)) is expected


def test_is_hurwitz_rejects_constants():
    with pytest.raises(ValueError):
        is_hurwitz(Polynomial([2.0]))


@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=2, max_size=7))
def test_is_hurwitz_matches_root_oracle(c):
    assume(abs(c[-1]) > 1e-2)
    roots = np.roots(c[::-1])
    assume(np.min(np.abs(roots.real)) > 1e-6)
    expected = bool(np.all(roots.real < 0))
    p = Polynomial(c)
    assert is_hurwitz(p) == expected
    assert routh_hurwitz(p) == expected


def test_hurwitz_agreement_on_200_random_polynomials():
    rng = np.random.default_rng(7)
    checked = 0
    while checked < 200:
        deg = rng.integers(1, 7)
        c = rng.uniform(0.1, 5, deg + 1) * rng.choice([1, 1, 1, -1], deg + 1)
        roots = np.roots(c[::-1])
        if np.min(np.abs(roots.real)) < 1e-6:
            continue
        p = Polynomial(c)
        assert is_hurwitz(p) == bool(np.all(roots.real < 0)) == routh_hurwitz(p)
        checked += 1


def test_gamma_integrator_example():
    # p^2 (p^2 + 1) + (p + 1)^3 = 1 + 3p + 4p^2 + p^3 + p^4
    g = closed_loop_char_poly(Polynomial([0, 1]), Polynomial([1]), 1.0, Polynomial([1]), 1.0)
    assert np.array_equal(g.coeffs, [1.0, 3.0, 4.0, 1.0, 1.0])


def test_gamma_zero_gain():
    a = Polynomial([0, 0, 3.0, 2.0])
    g = closed_loop_char_poly(a, Polynomial([1]), 0.0, Polynomial([1, 3, 1]), 1.2)
    assert g == a * Polynomial([0, 1.44, 0, 1])


def test_gamma_ball_and_plate_is_hurwitz():
    tf = linearized_tf(BallPlateParams())
    for omega in (0.5, 1.2, 4.0):
        g = closed_loop_char_poly(tf.den, tf.num, 1.2, Polynomial([1, 3, 1]), omega)
        assert is_hurwitz(g)
        assert np.all(np.roots(g.coeffs[::-1]).real < 0)


@given(polys(4), polys(3), polys(3), st.floats(0.1, 5), st.floats(0.1, 10))
def test_gamma_degree(a, b, alpha, k, omega):
    g = closed_loop_char_poly(a, b, k, alpha, omega)
    da, dn = a.degree + 3, b.degree + alpha.degree + 3
    if da != dn:
        assert g.degree == max(da, dn)
    else:
        assert g.degree <= da


def test_passive_denominator_form():
    den = passive_loop_denominator(
        Polynomial([0, 1]), Polynomial([1]), 2.0, Polynomial([1]), 1.0
    )
    # p (p^2 + 1) + 2 (p + 1)^2 = 2 + 5p + 2p^2 + p^3
    assert np.array_equal(den.coeffs, [2.0, 5.0, 2.0, 1.0])


def test_transfer_function_invariants():
    with pytest.raises(ValueError):
        TransferFunction(Polynomial([1, 1, 1]), Polynomial([1, 1]))
    with pytest.raises(ValueError):
        TransferFunction(Polynomial([1]), Polynomial([0]))
    assert TransferFunction(Polynomial([1]), Polynomial([0, 0, 1, 1])).relative_degree == 3


def test_spr_examples():
    assert spr_check(TransferFunction(Polynomial([1]), Polynomial([1, 1]))).ok
    h = TransferFunction(Polynomial([1, -1]), Polynomial([1, 2, 1]))
    # Re h(2j) = (1 - 3*4) / 25 < 0
    assert (h.freqresp(2.0).real) == pytest.approx(-11 / 25)
    res = spr_check(h)
    assert not res.ok and res.reason == "nonpositive-real-part"
    res = spr_check(TransferFunction(Polynomial([-1, 1]), Polynomial([-2, 1])))
    assert not res.ok and res.reason == "unstable"


def test_spr_rejects_bad_grid():
    h = TransferFunction(Polynomial([1]), Polynomial([1, 1]))
    with pytest.raises(ValueError):
        spr_check(h, [])
    with pytest.raises(ValueError):
        spr_check(h, [2.0, 1.0])


def test_realization_first_order():
    ss = tf_to_statespace(TransferFunction(Polynomial([1]), Polynomial([1, 1])))
    assert np.array_equal(ss.A, [[-1.0]])
    assert np.array_equal(ss.b, [1.0])
    assert np.array_equal(ss.c, [1.0])
    assert ss.d == 0.0


def test_realization_biproper():
    ss = tf_to_statespace(TransferFunction(Polynomial([2, 1]), Polynomial([1, 1])))
    assert ss.d == 1.0
    assert np.array_equal(ss.A, [[-1.0]])
    assert np.array_equal(ss.c, [1.0])


def test_realization_ball_and_plate():
    tf = linearized_tf(BallPlateParams())
    ss = tf_to_statespace(tf)
    assert ss.A.shape == (3, 3)
    w = np.logspace(-1, 3, 20)
    ref = tf.freqresp(w)
    assert np.max(np.abs(ss.freqresp(w) - ref) / np.abs(ref)) < 1e-9


zero_loc = st.floats(0.05, 20).flatmap(lambda r: st.sampled_from([r, -r]))


@given(
    st.lists(st.floats(-20, -0.05), min_size=1, max_size=5),
    st.lists(zero_loc, max_size=5),
    st.floats(0.1, 10),
)
def test_realization_round_trip(poles, zeros, gain):
    # zeros stay off the origin so |tf| does not vanish on the grid, which
    # would turn the relative check into a cancellation test
    den = Polynomial([1.0])
    for r in poles:
        den = den * Polynomial([-r, 1.0])
    num = Polynomial([gain])
    for z in zeros[: len(poles)]:
        num = num * Polynomial([-z, 1.0])
    tf = TransferFunction(num, den)
    ss = tf_to_statespace(tf)
    assert (ss.d == 0.0) == (tf.relative_degree > 0)
    w = np.logspace(-2, 3, 40)
    ref = tf.freqresp(w)
    # the feedthrough split d + c(jw - A)^-1 b rounds at eps*|d| in absolute terms
    allowance = 1e-9 * np.abs(ref) + 1e-14 * abs(ss.d)
    assert np.all(np.abs(ss.freqresp(w) - ref) <= allowance)


def test_improper_realization_rejected():
    with pytest.raises(ValueError):
        TransferFunction(Polynomial([0, 0, 1]), Polynomial([1, 1]))
