import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from imddsim.errors import AmbiguousCrossingError
from imddsim.metrics import (
    HD_FEC_THRESHOLD,
    BerCurve,
    BerPoint,
    eye_accumulate,
    log_histogram,
    outer_mass,
    pam_ber_awgn,
    pam_ser_awgn,
    pam_snr_for_ber,
    qfunc,
    sensitivity,
)


def curve(rops, bers, bits=10**7):
    return BerCurve.from_arrays(rops, bers, bits)


def test_two_point_interpolation():
    s = sensitivity(curve([-12, -10], [1e-2, 1e-4]), 3.8e-3)
    # log-linear: -12 + 2 * (log10(1e-2) - log10(3.8e-3)) / 2
    expected = -12 + 2 * (-2 - math.log10(3.8e-3)) / 2
    assert s.status == "reached"
    assert s.rop_at_threshold == pytest.approx(expected, abs=1e-12)
    assert s.rop_at_threshold == pytest.approx(-11.58, abs=0.01)


def test_not_reached():
    s = sensitivity(curve([-20, -16, -12], [8e-2, 3e-2, 1.2e-2]))
    assert s.status == "not reached"
    assert s.rop_at_threshold is None


def test_below_range():
    s = sensitivity(curve([-10, -8], [1e-4, 0.0]))
    assert s.status == "below range"
    assert s.zero_ber_rops == (-8.0,)


def test_exact_point():
    s = sensitivity(curve([-14, -12, -10], [1e-2, HD_FEC_THRESHOLD, 1e-5]))
    assert s.rop_at_threshold == -12.0


def test_single_point_never_interpolates():
    assert sensitivity(curve([-12], [1e-2])).status == "not reached"
    assert sensitivity(curve([-12], [HD_FEC_THRESHOLD])).rop_at_threshold == -12.0


def test_zero_ber_points_skipped():
    s = sensitivity(curve([-14, -12, -10], [1e-2, 1e-4, 0.0]))
    assert s.zero_ber_rops == (-10.0,)
    assert s.rop_at_threshold == pytest.approx(-13.58, abs=0.01)


def test_ambiguous_crossings():
    with pytest.raises(AmbiguousCrossingError) as exc:
        sensitivity(curve([-14, -12, -10, -8], [1e-2, 1e-3, 1e-2, 1e-4]))
    assert len(exc.value.crossings) == 3
    with pytest.raises(AmbiguousCrossingError):
        sensitivity(curve([-14, -12], [1e-4, 1e-2]))


@settings(max_examples=100, deadline=None)
@given(
    logs=st.lists(st.floats(-6, -1), min_size=2, max_size=8, unique=True),
    start=st.floats(-30, -5),
)
def test_sensitivity_monotone_under_improvement(logs, start):
    bers = 10 ** np.sort(np.array(logs))[::-1]
    rops = start + np.arange(len(bers)) * 1.5
    s0 = sensitivity(curve(rops, bers))
    s1 = sensitivity(curve(rops, bers / 10))
    if s0.reached and s1.reached:
        assert s1.rop_at_threshold <= s0.rop_at_threshold + 1e-12
    if s0.status == "below range":
        assert s1.status == "below range"


@settings(max_examples=50, deadline=None)
@given(logs=st.lists(st.floats(-6, -1), min_size=2, max_size=6, unique=True), k=st.integers(0, 5))
def test_threshold_at_measured_point(logs, k):
    bers = 10 ** np.sort(np.array(logs))[::-1]
    k = k % len(bers)
    rops = np.arange(len(bers), dtype=float)
    assert sensitivity(curve(rops, bers), float(bers[k])).rop_at_threshold == rops[k]


def test_curve_validation():
    with pytest.raises(ValueError):
        curve([-10, -10], [1e-3, 1e-4])
    with pytest.raises(ValueError):
        curve([-10], [0.7])


def test_reliability_flag():
    assert not BerPoint(-10, 99 / 10**6, 10**6).reliable
    assert BerPoint(-10, 100 / 10**6, 10**6).reliable
    assert BerPoint(-10, 123 / 10**6, 10**6).errors == 123


def test_eye_two_level_square_wave():
    x = np.tile(np.r_[np.ones(8), -np.ones(8)], 50)
    eye = eye_accumulate(x, 8, amp_bins=32)
    occupied = (eye.counts > 0).sum(axis=1)
    assert np.all(occupied == 1)  # each time column sits on one level
    assert np.count_nonzero(eye.counts.sum(axis=0)) == 2
    assert eye.counts.sum() == x.size


def test_eye_mass_conservation_noninteger_sps():
    x = np.random.default_rng(0).standard_normal(10_007)
    eye = eye_accumulate(x, 2.844, amp_bins=64)
    assert eye.counts.sum() == x.size


def test_eye_symmetric_input_mirrors():
    x = np.random.default_rng(1).standard_normal(4096)
    both = np.concatenate([x, -x])
    eye = eye_accumulate(both, 4, amp_bins=50, amp_range=(-5, 5))
    assert np.array_equal(eye.counts.sum(axis=0), eye.counts.sum(axis=0)[::-1])


def test_eye_mean_trace():
    x = np.tile([0.0, 1.0, 2.0, 3.0], 25)
    eye = eye_accumulate(x, 2, time_bins=4, amp_bins=16)
    assert np.allclose(eye.mean_trace, [0, 1, 2, 3])


def test_histogram_delta_and_mass():
    h = log_histogram(np.full(500, 3.0), bins=32, value_range=(-8, 8))
    assert np.count_nonzero(h.counts) == 1
    y = np.random.default_rng(2).standard_normal(12345)
    h = log_histogram(y, 64)
    assert h.counts.sum() == y.size
    assert np.allclose(h.log_counts, np.log10(h.counts + 1))
    with pytest.raises(ValueError):
        log_histogram(y, 8)


def test_outer_mass():
    h = log_histogram(np.r_[np.full(30, 7.0), np.full(70, 1.0)], 64, (-8, 8))
    assert outer_mass(h, 6.0) == pytest.approx(0.3)


@pytest.mark.parametrize("order", [2, 4, 8])
def test_pam_error_rates_against_oracle(order):
    snr = 10 ** (np.linspace(5, 25, 9) / 10)
    ser = 2 * (order - 1) / order * oracles.q(np.sqrt(3 * snr / (order**2 - 1)))
    assert np.allclose(pam_ser_awgn(snr, order), ser, rtol=1e-12)
    assert np.allclose(pam_ber_awgn(snr, order), ser / math.log2(order), rtol=1e-12)


@pytest.mark.parametrize("order", [2, 4, 8])
def test_snr_for_ber_inverts(order):
    snr = pam_snr_for_ber(1e-3, order)
    assert pam_ber_awgn(snr, order) == pytest.approx(1e-3, rel=1e-9)


def test_qfunc_values():
    assert qfunc(0.0) == 0.5
    assert qfunc(3.0) == pytest.approx(1.3498980316e-3, rel=1e-9)
