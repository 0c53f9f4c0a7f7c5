import math

import numpy as np
import pytest

from imddsim.channel import (
    ChannelConfig,
    OpticalField,
    adc_capture,
    ase_psd_mw_per_hz,
    dbm_to_mw,
    electrical_frontend,
    fiber_and_rop,
    lowpass,
    mw_to_dbm,
    mzm_modulate,
    optical_filter,
    photodetect,
    preamp,
    run_channel,
)
from imddsim.errors import ConfigError, InfeasiblePowerError
from imddsim.txchain import DigitalWaveform


def tone(f, fs, n, amp=1.0, phase=0.0):
    t = np.arange(n) / fs
    return DigitalWaveform(amp * np.cos(2 * np.pi * f * t + phase), fs)


def bin_amp(x, f, fs):
    X = np.fft.rfft(x) / x.size * 2
    return np.abs(X[int(round(f * x.size / fs))])


def test_dbm_conversions():
    assert dbm_to_mw(0) == 1.0
    assert mw_to_dbm(10.0) == pytest.approx(10.0)
    assert mw_to_dbm(dbm_to_mw(-17.3)) == pytest.approx(-17.3)


def test_lowpass_dc_unchanged():
    w = DigitalWaveform(np.full(1000, 2.5), 100.0)
    assert np.allclose(lowpass(w, 10.0).samples, 2.5, atol=1e-12)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_lowpass_3db_point(order):
    w = tone(25.0, 400.0, 4000)
    y = lowpass(w, 25.0, order).samples
    assert 20 * np.log10(bin_amp(y, 25.0, 400.0)) == pytest.approx(-3.0, abs=0.1)


def test_lowpass_twice_cutoff_first_order():
    y = lowpass(tone(50.0, 400.0, 4000), 25.0, 1).samples
    assert 20 * np.log10(bin_amp(y, 50.0, 400.0)) == pytest.approx(-12.0, abs=0.5)


def test_lowpass_none_is_identity_and_bad_bw_rejected():
    w = tone(5.0, 100.0, 100)
    assert lowpass(w, None) is w
    with pytest.raises(ConfigError):
        lowpass(w, 0.0)


@pytest.mark.parametrize("v,expected", [(0.0, 0.5), (-0.5, 1.0), (0.5, 0.0)])
def test_mzm_transfer_points(v, expected):
    vpi, p = 4.5, 10.0
    f = mzm_modulate(DigitalWaveform(np.array([v * vpi]), 100.0), vpi, p)
    assert f.power[0] == pytest.approx(expected * p, abs=1e-12)


def test_fiber_loss_and_rop():
    f = OpticalField(np.full(64, math.sqrt(5.0), complex), 100.0)
    cfg = ChannelConfig(fiber_km=20.0)
    assert cfg.fiber_loss_db == pytest.approx(6.6, abs=0.1)
    out = fiber_and_rop(f, 20.0, 0.33, -10.0)
    assert out.mean_power_dbm == pytest.approx(-10.0, abs=0.01)
    with pytest.raises(InfeasiblePowerError):
        fiber_and_rop(f, 20.0, 0.33, mw_to_dbm(5.0) - 6.5)


def test_fiber_identity():
    rng = np.random.default_rng(1)
    e = rng.standard_normal(256) + 1j * rng.standard_normal(256)
    f = OpticalField(e, 100.0)
    out = fiber_and_rop(f, 0.0, 0.33, f.mean_power_dbm)
    assert np.allclose(out.samples, e, rtol=1e-12)


@pytest.mark.parametrize("rop", [-30.0, -12.5, 0.0])
def test_rop_setpoint_any_input(rop):
    rng = np.random.default_rng(2)
    f = OpticalField(3 * (rng.standard_normal(500) + 1j * rng.standard_normal(500)), 100.0)
    assert fiber_and_rop(f, 2.0, 0.33, rop).mean_power_dbm == pytest.approx(rop, abs=0.01)


def _modulated_field(n=4096, fs=480.0):
    drive = lowpass(DigitalWaveform(np.random.default_rng(3).standard_normal(n), fs), 20.0)
    return mzm_modulate(drive, 4.5, 10.0)


def test_preamp_noiseless_output_power():
    f = fiber_and_rop(_modulated_field(), 0, 0.33, -20.0)
    out = preamp(f, 7.0, None, 0)
    assert out.mean_power_dbm == pytest.approx(7.0, abs=0.01)
    assert np.allclose(out.samples / f.samples, out.samples[0] / f.samples[0])


def _osnr_proxy(rop):
    """Signal power over the noise density measured far outside the signal band."""
    f = fiber_and_rop(_modulated_field(), 0, 0.33, rop)
    out = preamp(f, 7.0, 5.0, 11)
    spec = np.abs(np.fft.fft(out.samples)) ** 2
    freqs = np.fft.fftfreq(out.samples.size, 1 / out.sample_rate)
    noise = spec[np.abs(freqs) > 150].mean()
    return spec.sum() / noise


def test_osnr_increases_with_rop():
    vals = [_osnr_proxy(r) for r in (-30.0, -20.0, -10.0)]
    assert vals[0] < vals[1] < vals[2]


def test_ase_density_matches_measurement():
    gain, nf = 1000.0, 5.0
    f = OpticalField(np.full(1 << 16, math.sqrt(dbm_to_mw(7.0) / gain), complex), 480.0)
    out = preamp(f, 7.0, nf, 5)
    noise = out.samples - math.sqrt(dbm_to_mw(7.0))
    psd = ase_psd_mw_per_hz(gain, nf, 1310.0)
    assert np.mean(np.abs(noise) ** 2) == pytest.approx(psd * 480e9, rel=0.03)


def test_preamp_determinism():
    f = fiber_and_rop(_modulated_field(), 0, 0.33, -20.0)
    a = preamp(f, 7.0, 5.0, 42)
    b = preamp(f, 7.0, 5.0, 42)
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, preamp(f, 7.0, 5.0, 43).samples)


def test_photodetect_constant_power():
    f = OpticalField(np.full(128, math.sqrt(2.0), complex), 100.0)
    i = photodetect(f, 0.6, None, 0.0, 0)
    assert np.allclose(i.samples, 0.6 * 2.0 * 1e-3)
    assert np.all(i.samples >= 0)


def test_photodetect_beat_tone():
    fs, n = 400.0, 4000
    t = np.arange(n) / fs
    e = np.exp(2j * np.pi * 10.0 * t) + 0.5 * np.exp(2j * np.pi * 35.0 * t)
    i = photodetect(OpticalField(e, fs), 1.0, None, 0.0, 0).samples
    # |E|^2 = 1.25 + cos(2 pi 25 t) (times 1e-3 A/mW)
    assert bin_amp(i, 25.0, fs) == pytest.approx(1e-3, rel=1e-9)
    assert np.all(i >= 0)


def test_adc_rate_and_fidelity():
    w = lowpass(DigitalWaveform(np.random.default_rng(6).standard_normal(4800), 480.0), 60.0)
    out = adc_capture(w, 256.0, None, 20)
    assert out.sample_rate == 256.0
    assert len(out) == 2560
    from imddsim.resample import resample

    ref = resample(w.samples, 480.0, 256.0)
    assert np.max(np.abs(out.samples - ref)) <= 1e-4 * np.max(np.abs(ref))


@pytest.mark.parametrize("bits", [4, 6, 8])
def test_adc_quantization_bound(bits):
    w = lowpass(DigitalWaveform(np.random.default_rng(7).standard_normal(4800), 480.0), 60.0)
    from imddsim.resample import resample

    ref = resample(w.samples, 480.0, 256.0)
    out = adc_capture(w, 256.0, None, bits)
    lsb = (ref.max() - ref.min()) / (2**bits - 1)
    assert np.max(np.abs(out.samples - ref)) <= lsb / 2 * (1 + 1e-9)
    assert np.unique(out.samples).size <= 2**bits


def _quiet(**kw):
    base = dict(amp_nf_db=None, thermal_psd=0.0, adc_bits=20)
    base.update(kw)
    return ChannelConfig(**base)


def test_power_accounting_noise_off():
    cfg = _quiet(fiber_km=10.0)
    x = np.random.default_rng(8).standard_normal(1200)
    dac = DigitalWaveform(np.concatenate([x, -x]) * 0.02, 120.0)
    drive = electrical_frontend(dac, cfg)
    f = mzm_modulate(drive, cfg.v_pi, cfg.p_laser_mw)
    assert f.mean_power_mw == pytest.approx(cfg.p_laser_mw / 2, rel=10 ** (0.001) - 1)
    f2 = fiber_and_rop(f, cfg.fiber_km, cfg.atten_db_per_km, -15.0)
    assert f2.mean_power_dbm == pytest.approx(-15.0, abs=0.01)
    f3 = preamp(f2, cfg.amp_out_dbm, None, 0)
    assert f3.mean_power_dbm == pytest.approx(cfg.amp_out_dbm, abs=0.01)
    f4 = optical_filter(f3, cfg.opt_filter_bw)
    assert f4.mean_power_dbm == pytest.approx(cfg.amp_out_dbm, abs=0.01)


def test_small_signal_linearity():
    cfg = _quiet(awg_bw=None, ea_bw=None, mzm_bw=None, opt_filter_bw=None, pd_bw=None, adc_bw=None, ea_gain_db=0.0)
    n = 1200
    dac = tone(5.0, 120.0, n, amp=0.1 * cfg.v_pi)  # 0.2 v_pi peak to peak
    y = run_channel(dac, cfg, -10.0, 0).samples
    fs = 256.0
    fund = bin_amp(y, 5.0, fs)
    harm = math.sqrt(sum(bin_amp(y, 5.0 * k, fs) ** 2 for k in range(2, 8)))
    assert 20 * np.log10(harm / fund) < -40


def test_channel_determinism_and_seed_dependence():
    cfg = ChannelConfig()
    dac = DigitalWaveform(np.random.default_rng(9).uniform(-0.3, 0.3, 1200), 120.0)
    a = run_channel(dac, cfg, -15.0, 5).samples
    assert np.array_equal(a, run_channel(dac, cfg, -15.0, 5).samples)
    assert not np.array_equal(a, run_channel(dac, cfg, -15.0, 6).samples)


def test_rop_above_preamp_output_rejected():
    dac = DigitalWaveform(np.zeros(120) + 0.01, 120.0)
    with pytest.raises(InfeasiblePowerError):
        run_channel(dac, ChannelConfig(), 9.0, 0)


def test_config_validation():
    with pytest.raises(ConfigError):
        ChannelConfig(mzm_bw=-1.0)
    with pytest.raises(ConfigError):
        ChannelConfig.from_dict({"bogus": 1})
    assert ChannelConfig.from_dict(ChannelConfig().to_dict()) == ChannelConfig()
