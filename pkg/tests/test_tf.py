from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from platoonlab.errors import GainOutOfRangeError, NonHurwitzError
from platoonlab.tf import (
    ControllerSpec,
    LagSpec,
    RationalTF,
    Tap,
    build_error_tf_accel,
    build_error_tf_basic,
    build_error_tf_taps,
    eval_jw,
    freqresp,
    shared_denominator,
)

gain = st.floats(1e-3, 1e2)
small = st.floats(0.0, 0.45)
headway = st.floats(0.1, 3.0)
lag = st.floats(0.0, 1.0)


def test_rational_tf_trims_and_validates():
    tf = RationalTF((1.0, 2.0, 0.0), (3.0, 4.0, 5.0, 0.0))
    assert tf.num == (1.0, 2.0)
    assert tf.den == (3.0, 4.0, 5.0)
    with pytest.raises(ValueError):
        RationalTF((1.0, 1.0, 1.0), (1.0, 1.0))  # improper
    with pytest.raises(ValueError):
        RationalTF((1.0,), (0.0, 0.0))
    with pytest.raises(ValueError):
        RationalTF((np.nan,), (1.0,))


def test_basic_table2_coefficients():
    spec = ControllerSpec.pf(45, 0.8, 0.0, h_w=0.88)
    tf = build_error_tf_basic(spec, LagSpec(0.5, 0.5))
    assert tf.num == (45.0, 0.8)
    np.testing.assert_allclose(tf.den, (45.0, 40.4, 1.0, 0.5), rtol=0, atol=1e-12)
    assert tf.dc_gain() == 1.0


def test_basic_tau_zero_drops_cubic():
    tf = build_error_tf_basic(ControllerSpec.pf(1, 1, 0.0, h_w=1.0), 0.0)
    assert len(tf.den) - 1 == 2
    assert len(tf.num) - 1 == 1


def test_basic_rejects_accel_or_taps():
    with pytest.raises(ValueError):
        build_error_tf_basic(ControllerSpec.pf(1, 1, 0.2, h_w=1.0), 0.5)
    with pytest.raises(ValueError):
        build_error_tf_basic(ControllerSpec.rpf(2, 1, 1, 0.0, h_w=1.0), 0.5)


def test_accel_table2_numerator():
    tf = build_error_tf_accel(ControllerSpec.pf(45, 0.8, 0.25, h_w=0.88), 0.5)
    assert tf.num == (45.0, 0.8, 0.25)


def test_accel_nnir_example():
    tf = build_error_tf_accel(ControllerSpec.pf(0.001, 0.082, 0.95, h_w=1.02), 1.0)
    np.testing.assert_allclose(tf.num, (0.001, 0.082, 0.95))
    np.testing.assert_allclose(tf.den, (0.001, 0.082 + 0.001 * 1.02, 1.0, 1.0))


@given(gain, gain, headway, lag)
def test_accel_with_zero_ka_matches_basic(kp, kv, hw, tau):
    spec = ControllerSpec.pf(kp, kv, 0.0, h_w=hw)
    assert build_error_tf_accel(spec, tau) == build_error_tf_basic(spec, tau)


def test_spec_invariants():
    with pytest.raises(GainOutOfRangeError):
        ControllerSpec.pf(0.0, 1.0)
    with pytest.raises(GainOutOfRangeError):
        ControllerSpec.pf(1.0, -1.0)
    with pytest.raises(GainOutOfRangeError):
        ControllerSpec.pf(1.0, 1.0, -0.1)
    with pytest.raises(ValueError):
        ControllerSpec.one_and_rth(1, 1.0, 1.0)
    with pytest.raises(ValueError):
        ControllerSpec("rpf", (Tap(2, 1, 1), Tap(1, 1, 1)), h_w=1.0)
    spec = ControllerSpec.one_and_rth(3, 1.0, 1.0)
    assert [t.lag for t in spec.taps] == [1, 3]
    assert spec.r == 3
    assert spec.standstill(3) == 15.0


def test_lagspec_invariants():
    LagSpec(0.0, 0.5)
    with pytest.raises(ValueError):
        LagSpec(0.6, 0.5)
    with pytest.raises(ValueError):
        LagSpec(0.0, 0.0)


def test_taps_rpf_table3_row():
    spec = ControllerSpec.rpf(2, 45, 0.8, 0.25, h_w=0.68)
    taps = build_error_tf_taps(spec, 0.5)
    assert [l for l, _ in taps] == [1, 2]
    (_, h1), (_, h2) = taps
    assert h1.num == h2.num == (45.0, 0.8, 0.25)
    assert h1.den == h2.den
    assert h1.den[0] == 90.0
    # velocity coefficient: r k_v + r(r+1)/2 k_p h_w
    assert h1.den[1] == pytest.approx(2 * 0.8 + 3 * 45 * 0.68, rel=1e-15)


def test_taps_single_tap_reduces_to_accel():
    spec = ControllerSpec.rpf(1, 45, 0.8, 0.25, h_w=0.88)
    ((l, h),) = build_error_tf_taps(spec, 0.5)
    assert l == 1
    assert h == build_error_tf_accel(ControllerSpec.pf(45, 0.8, 0.25, h_w=0.88), 0.5)


def test_one_and_rth_general_velocity_coefficient():
    kp, kv, hw = 2.0, 0.7, 0.9
    spec = ControllerSpec.one_and_rth(3, kp, kv, 0.1, h_w=hw)
    den = shared_denominator(spec, 0.5)
    assert den[1] == pytest.approx(2 * kv + (1 + 3) * kp * hw, rel=1e-15)
    assert den[0] == 2 * kp
    # at r = 2 the general form and the printed (2k_v + 3k_p h_w) coincide
    den2 = shared_denominator(ControllerSpec.one_and_rth(2, kp, kv, 0.1, h_w=hw), 0.5)
    assert den2[1] == pytest.approx(2 * kv + 3 * kp * hw, rel=1e-15)


@given(st.sampled_from(["pf", "rpf", "one-and-rth"]), st.integers(1, 6), gain, gain, small, headway, lag)
def test_dc_constraint(arch, r, kp, kv, ka, hw, tau):
    if arch == "pf":
        r = 1
    elif arch == "one-and-rth":
        r = max(r, 2)
    spec = ControllerSpec.build(arch, r, kp, kv, ka, hw)
    total = sum(h.dc_gain() for _, h in build_error_tf_taps(spec, tau))
    assert total == pytest.approx(1.0, abs=1e-14)


@settings(max_examples=200)
@given(st.integers(1, 6), gain, gain, small, headway, lag)
def test_equal_gain_collapse(r, kp, kv, ka, hw, tau):
    spec = ControllerSpec.rpf(r, kp, kv, ka, h_w=hw)
    taps = build_error_tf_taps(spec, tau)
    assert all(h == taps[0][1] for _, h in taps)
    h0 = taps[0][1]
    rh0 = RationalTF(tuple(r * c for c in h0.num), h0.den).normalized()
    bar = ControllerSpec.pf(r * kp, r * kv, r * ka, h_w=(r + 1) * hw / 2)
    ref = build_error_tf_accel(bar, tau).normalized()
    np.testing.assert_allclose(rh0.num, ref.num, rtol=1e-12, atol=0)
    np.testing.assert_allclose(rh0.den, ref.den, rtol=1e-12, atol=0)


def _exact_eval(num, den, omega):
    # exact complex rational evaluation at s = j omega, as (re, im) Fractions
    def poly(coeffs):
        re, im = Fraction(0), Fraction(0)
        pr, pi = Fraction(1), Fraction(0)
        w = Fraction(omega)
        for c in coeffs:
            c = Fraction(c)
            re += c * pr
            im += c * pi
            pr, pi = -pi * w, pr * w
        return re, im

    nr, ni = poly(num)
    dr, di = poly(den)
    mag2 = dr * dr + di * di
    return (nr * dr + ni * di) / mag2, (ni * dr - nr * di) / mag2


def test_eval_jw_exact_oracle():
    tf = build_error_tf_accel(ControllerSpec.pf(45, 0.8, 0.25, h_w=0.88), 0.5)
    re, im = _exact_eval(tf.num, tf.den, 10)
    val = eval_jw(tf, 10.0)
    assert val.real == pytest.approx(float(re), rel=1e-14)
    assert val.imag == pytest.approx(float(im), rel=1e-14)


def test_eval_jw_dc_and_high_frequency():
    tf = build_error_tf_accel(ControllerSpec.pf(45, 0.8, 0.25, h_w=0.88), 0.5)
    assert eval_jw(tf, 0.0) == 1 + 0j
    w = 1e6
    assert abs(eval_jw(tf, w)) == pytest.approx(0.25 / (0.5 * w), rel=1e-5)


def test_eval_jw_pole_on_axis():
    tf = RationalTF((1.0,), (1.0, 0.0, 1.0))  # poles at +-j
    with pytest.raises(NonHurwitzError):
        eval_jw(tf, 1.0)


@given(gain, gain, small, headway, lag, st.floats(1e-3, 1e3))
def test_conjugate_symmetry(kp, kv, ka, hw, tau, w):
    tf = build_error_tf_accel(ControllerSpec.pf(kp, kv, ka, h_w=hw), tau)
    try:
        pos = eval_jw(tf, w)
    except NonHurwitzError:
        return
    neg = np.polyval(tf.num[::-1], -1j * w) / np.polyval(tf.den[::-1], -1j * w)
    assert neg == pytest.approx(np.conj(pos), rel=1e-12, abs=1e-300)


def test_freqresp_matches_pointwise():
    tf = build_error_tf_accel(ControllerSpec.pf(45, 0.8, 0.25, h_w=0.88), 0.5)
    w = np.logspace(-2, 2, 9)
    np.testing.assert_allclose(freqresp(tf, w), [eval_jw(tf, x) for x in w], rtol=1e-14)
