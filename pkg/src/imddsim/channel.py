"""
IM/DD link model.

Electrical front end (AWG, driver amplifier, modulator bandwidth), a
quadrature-biased Mach-Zehnder modulator, fibre loss plus a variable
attenuator setting the received optical power, an optical pre-amplifier
with ASE noise, an optical bandpass filter, a square-law photodiode and
the sampling oscilloscope.

Units: rates and bandwidths in GHz / GSa/s, optical field in sqrt(mW),
photocurrent in A, thermal noise density in A^2/Hz (one-sided).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Optional

import numpy as np

from .errors import ConfigError, ImddError, InfeasiblePowerError
from .resample import resample
from .txchain import DigitalWaveform

__all__ = [
    "OpticalField",
    "ChannelConfig",
    "dbm_to_mw",
    "mw_to_dbm",
    "lowpass",
    "electrical_frontend",
    "mzm_modulate",
    "fiber_and_rop",
    "preamp",
    "optical_filter",
    "photodetect",
    "adc_capture",
    "run_channel",
]

PLANCK = 6.62607015e-34
C_LIGHT = 299_792_458.0


def dbm_to_mw(dbm):
    return 10.0 ** (np.asarray(dbm, dtype=float) / 10.0)


def mw_to_dbm(mw):
    return 10.0 * np.log10(mw)


@dataclass(frozen=True)
class OpticalField:
    """Complex baseband field in sqrt(mW) sampled at ``sample_rate`` GSa/s."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=complex))

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.samples) ** 2

    @property
    def mean_power_mw(self) -> float:
        return float(np.mean(self.power))

    @property
    def mean_power_dbm(self) -> float:
        return float(mw_to_dbm(self.mean_power_mw))


@dataclass(frozen=True)
class ChannelConfig:
    """Link parameters.

    A bandwidth of ``None`` removes that filter. ``amp_nf_db=None``
    switches the pre-amplifier noise off and ``thermal_psd=0`` the
    receiver thermal noise.
    """

    awg_bw: Optional[float] = 46.0
    ea_bw: Optional[float] = 60.0
    ea_gain_db: float = 22.0
    ea_sat: Optional[float] = None
    mzm_bw: Optional[float] = 33.0
    v_pi: float = 4.5
    p_laser_mw: float = 10.0
    fiber_km: float = 0.0
    atten_db_per_km: float = 0.33
    amp_out_dbm: float = 7.0
    amp_nf_db: Optional[float] = 5.0
    wavelength_nm: float = 1310.0
    opt_filter_bw: Optional[float] = 150.0
    pd_bw: Optional[float] = 75.0
    pd_resp: float = 0.6
    thermal_psd: float = 4e-22
    adc_rate: float = 256.0
    adc_bw: Optional[float] = 110.0
    adc_bits: int = 8
    sim_rate: float = 480.0
    filter_order: int = 1

    def __post_init__(self):
        for name in ("awg_bw", "ea_bw", "mzm_bw", "opt_filter_bw", "pd_bw", "adc_bw"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigError(f"{name} must be positive or None, got {v}")
        for name in ("v_pi", "p_laser_mw", "pd_resp", "adc_rate", "sim_rate"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.fiber_km < 0 or self.atten_db_per_km < 0 or self.thermal_psd < 0:
            raise ConfigError("fibre length, attenuation and thermal PSD must be non-negative")
        if self.filter_order < 1:
            raise ConfigError("filter_order must be >= 1")
        if not 1 <= self.adc_bits <= 24:
            raise ConfigError("adc_bits must be in 1..24")

    @property
    def fiber_loss_db(self) -> float:
        return self.fiber_km * self.atten_db_per_km

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown channel keys: {sorted(unknown)}")
        return cls(**d)

    def with_(self, **kw) -> "ChannelConfig":
        return replace(self, **kw)


def _gaussian_response(freqs, f3db, order):
    return np.exp(-0.5 * math.log(2.0) * (np.abs(freqs) / f3db) ** (2 * order))


def lowpass(waveform, f3db, order: int = 1):
    """Zero-phase Gaussian lowpass applied in the frequency domain.

    ``|H(f)| = exp(-ln2/2 * (f/f3db)**(2*order))``, so ``H(0) = 1`` and
    ``|H(f3db)|`` is -3 dB. Works on :class:`DigitalWaveform` and
    :class:`OpticalField` (two-sided for the complex field). The record is
    treated as periodic.
    """
    if f3db is None:
        return waveform
    if not f3db > 0:
        raise ConfigError("f3db must be positive")
    x = waveform.samples
    fs = waveform.sample_rate
    if np.iscomplexobj(x):
        h = _gaussian_response(np.fft.fftfreq(x.size, 1.0 / fs), f3db, order)
        y = np.fft.ifft(np.fft.fft(x) * h)
    else:
        h = _gaussian_response(np.fft.rfftfreq(x.size, 1.0 / fs), f3db, order)
        y = np.fft.irfft(np.fft.rfft(x) * h, x.size)
    return type(waveform)(y, fs)


def electrical_frontend(dac: DigitalWaveform, cfg: ChannelConfig) -> DigitalWaveform:
    """AWG output up to the modulator electrode, at the simulation rate."""
    x = resample(dac.samples, dac.sample_rate, cfg.sim_rate)
    w = DigitalWaveform(x, cfg.sim_rate)
    w = lowpass(w, cfg.awg_bw, cfg.filter_order)
    y = w.samples * 10 ** (cfg.ea_gain_db / 20)
    if cfg.ea_sat is not None:
        y = cfg.ea_sat * np.tanh(y / cfg.ea_sat)
    w = lowpass(DigitalWaveform(y, cfg.sim_rate), cfg.ea_bw, cfg.filter_order)
    return lowpass(w, cfg.mzm_bw, cfg.filter_order)


def mzm_modulate(drive: DigitalWaveform, v_pi: float, p_laser_mw: float) -> OpticalField:
    """Push-pull MZM at quadrature: ``E = sqrt(P) cos(pi/4 + pi v / (2 v_pi))``."""
    v = drive.samples
    e = math.sqrt(p_laser_mw) * np.cos(np.pi / 4 + np.pi * v / (2 * v_pi))
    return OpticalField(e.astype(complex), drive.sample_rate)


def fiber_and_rop(field: OpticalField, fiber_km: float, atten_db_per_km: float, rop_dbm: float) -> OpticalField:
    """Fibre attenuation followed by a VOA that sets the mean power to ``rop_dbm``."""
    loss_db = fiber_km * atten_db_per_km
    after = field.mean_power_mw * 10 ** (-loss_db / 10)
    if after <= 0:
        raise InfeasiblePowerError("no optical power reaches the attenuator")
    avail_dbm = float(mw_to_dbm(after))
    if rop_dbm > avail_dbm + 1e-9:
        raise InfeasiblePowerError(
            f"requested ROP {rop_dbm:g} dBm exceeds the {avail_dbm:.2f} dBm left after {loss_db:.2f} dB fibre loss"
        )
    scale = math.sqrt(float(dbm_to_mw(rop_dbm)) / field.mean_power_mw)
    return OpticalField(field.samples * scale, field.sample_rate)


def ase_psd_mw_per_hz(gain: float, nf_db: float, wavelength_nm: float) -> float:
    """Single-polarization ASE density at the amplifier output."""
    nu = C_LIGHT / (wavelength_nm * 1e-9)
    nf = 10 ** (nf_db / 10)
    # n_sp (G - 1) h nu with n_sp = (NF G - 1) / (2 (G - 1))
    return 0.5 * max(nf * gain - 1.0, 0.0) * PLANCK * nu * 1e3


def preamp(field: OpticalField, amp_out_dbm: float, amp_nf_db: Optional[float], seed, wavelength_nm=1310.0):
    """Fixed-output optical amplifier.

    The gain brings the mean signal power to ``amp_out_dbm``; white
    circular Gaussian ASE spanning the simulation bandwidth is then added.
    ``amp_nf_db=None`` gives a noiseless amplifier.
    """
    p_in = field.mean_power_mw
    p_out = float(dbm_to_mw(amp_out_dbm))
    if p_in <= 0:
        raise ImddError("pre-amplifier input has zero power")
    gain = p_out / p_in
    if not gain > 0:
        raise ImddError("pre-amplifier gain must be positive")
    e = field.samples * math.sqrt(gain)
    if amp_nf_db is not None:
        psd = ase_psd_mw_per_hz(gain, amp_nf_db, wavelength_nm)
        var = psd * field.sample_rate * 1e9
        rng = np.random.default_rng(seed)
        n = rng.standard_normal((2, e.size))
        e = e + math.sqrt(var / 2) * (n[0] + 1j * n[1])
    return OpticalField(e, field.sample_rate)


def optical_filter(field: OpticalField, bandwidth: Optional[float], order: int = 1) -> OpticalField:
    """Gaussian optical bandpass centred on the carrier; ``bandwidth`` is the full 3-dB width."""
    if bandwidth is None:
        return field
    return lowpass(field, bandwidth / 2, order)


def photodetect(field: OpticalField, pd_resp: float, pd_bw, thermal_psd: float, seed, order: int = 1):
    """Square-law detection ``i = R |E|^2`` plus thermal noise, then the PD bandwidth."""
    i = pd_resp * field.power * 1e-3
    if thermal_psd > 0:
        rng = np.random.default_rng(seed)
        i = i + math.sqrt(thermal_psd * field.sample_rate * 1e9 / 2) * rng.standard_normal(i.size)
    return lowpass(DigitalWaveform(i, field.sample_rate), pd_bw, order)


def adc_capture(waveform: DigitalWaveform, adc_rate: float, adc_bw, adc_bits: int, order: int = 1, full_scale=None):
    """Oscilloscope: bandwidth limit, resample to ``adc_rate``, quantize.

    ``full_scale`` is a ``(lo, hi)`` range; by default the capture is
    auto-ranged to the signal extremes. Quantization error is at most half
    a step of ``(hi - lo) / (2**adc_bits - 1)``.
    """
    w = lowpass(waveform, adc_bw, order)
    y = resample(w.samples, w.sample_rate, adc_rate)
    if full_scale is None:
        lo, hi = (float(y.min()), float(y.max())) if y.size else (0.0, 0.0)
    else:
        lo, hi = full_scale
    if hi > lo:
        step = (hi - lo) / (2**adc_bits - 1)
        y = lo + np.rint((np.clip(y, lo, hi) - lo) / step) * step
    return DigitalWaveform(y, float(adc_rate))


def run_channel(dac: DigitalWaveform, cfg: ChannelConfig, rop_dbm: float, seed) -> DigitalWaveform:
    """Whole link from DAC output to oscilloscope capture.

    ``seed`` feeds a :class:`numpy.random.SeedSequence` whose children
    drive the ASE and the thermal noise.
    """
    if rop_dbm > cfg.amp_out_dbm:
        raise InfeasiblePowerError(f"ROP {rop_dbm} dBm above the pre-amplifier output {cfg.amp_out_dbm} dBm")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    ase_seed, th_seed = ss.spawn(2)
    drive = electrical_frontend(dac, cfg)
    f = mzm_modulate(drive, cfg.v_pi, cfg.p_laser_mw)
    f = fiber_and_rop(f, cfg.fiber_km, cfg.atten_db_per_km, rop_dbm)
    f = preamp(f, cfg.amp_out_dbm, cfg.amp_nf_db, ase_seed, cfg.wavelength_nm)
    f = optical_filter(f, cfg.opt_filter_bw, cfg.filter_order)
    i = photodetect(f, cfg.pd_resp, cfg.pd_bw, cfg.thermal_psd, th_seed, cfg.filter_order)
    return adc_capture(i, cfg.adc_rate, cfg.adc_bw, cfg.adc_bits, cfg.filter_order)
