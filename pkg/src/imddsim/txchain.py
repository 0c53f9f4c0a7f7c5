"""
Transmit-side DSP: PRBS source, root-raised-cosine shaping at the DAC
rate, and DAC scaling/quantization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .resample import rate_ratio

__all__ = [
    "DigitalWaveform",
    "PulseShaperConfig",
    "PRBS_TAPS",
    "default_rolloff",
    "prbs_generate",
    "rrc_pulse",
    "rrc_taps",
    "shape_and_resample",
    "drive_scale",
    "dac_quantize",
]

# feedback taps (recurrence delays) of the usual maximal-length polynomials
PRBS_TAPS = {
    7: (7, 6),
    9: (9, 5),
    11: (11, 9),
    13: (13, 12, 2, 1),
    15: (15, 14),
    23: (23, 18),
    31: (31, 28),
}

MAX_PHASES = 10_000


@dataclass(frozen=True)
class DigitalWaveform:
    """Uniformly sampled real signal; ``sample_rate`` in GSa/s."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        s = np.asarray(self.samples)
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        if not np.all(np.isfinite(s)):
            raise ValueError("waveform contains non-finite samples")
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return self.samples.size


@dataclass(frozen=True)
class PulseShaperConfig:
    rolloff: float
    symbol_rate: float
    span: int = 64

    def __post_init__(self):
        if not 0.0 <= self.rolloff <= 1.0:
            raise ConfigError(f"roll-off must lie in [0, 1], got {self.rolloff}")
        if self.span <= 0 or self.span % 2:
            raise ConfigError(f"RRC span must be a positive even symbol count, got {self.span}")
        if self.symbol_rate <= 0:
            raise ConfigError("symbol rate must be positive")

    @property
    def occupied_bandwidth(self) -> float:
        return 0.5 * self.symbol_rate * (1.0 + self.rolloff)


def default_rolloff(symbol_rate: float) -> float:
    """Roll-off used for a given symbol rate in the reference experiment."""
    if symbol_rate < 90:
        return 0.4
    if symbol_rate < 100:
        return 0.33
    return 0.12


def prbs_generate(degree: int, seed: int, n: int) -> np.ndarray:
    """First ``n`` bits of the maximal-length sequence PRBS-``degree``.

    The low ``degree`` bits of ``seed`` are the initial register contents
    and are also the first output bits.
    """
    if degree not in PRBS_TAPS:
        raise ConfigError(f"unsupported PRBS degree {degree}; choose from {sorted(PRBS_TAPS)}")
    state = int(seed) & ((1 << degree) - 1)
    if state == 0:
        raise ConfigError("PRBS seed must be non-zero in its low bits")
    if n < 0:
        raise ValueError("n must be >= 0")
    taps = PRBS_TAPS[degree]
    step = min(taps)
    total = max(n, degree)
    s = np.empty(total, dtype=np.uint8)
    s[:degree] = (state >> np.arange(degree)) & 1
    for start in range(degree, total, step):
        end = min(start + step, total)
        acc = s[start - taps[0] : end - taps[0]].copy()
        for d in taps[1:]:
            acc ^= s[start - d : end - d]
        s[start:end] = acc
    return s[:n]


def rrc_pulse(t, alpha):
    """Root-raised-cosine pulse at times ``t`` (symbol periods).

    Scaled so that the untruncated pulse has unit energy per symbol period.
    """
    t = np.asarray(t, dtype=float)
    if alpha == 0.0:
        return np.sinc(t)
    out = np.empty_like(t)
    at0 = np.abs(t) < 1e-12
    sing = np.abs(np.abs(t) - 1.0 / (4.0 * alpha)) < 1e-10
    reg = ~(at0 | sing)
    tr = t[reg]
    out[reg] = (np.sin(np.pi * tr * (1 - alpha)) + 4 * alpha * tr * np.cos(np.pi * tr * (1 + alpha))) / (
        np.pi * tr * (1 - (4 * alpha * tr) ** 2)
    )
    out[at0] = 1.0 - alpha + 4.0 * alpha / np.pi
    out[sing] = (alpha / np.sqrt(2.0)) * (
        (1 + 2 / np.pi) * np.sin(np.pi / (4 * alpha)) + (1 - 2 / np.pi) * np.cos(np.pi / (4 * alpha))
    )
    return out


def rrc_taps(alpha: float, sps: int, span: int) -> np.ndarray:
    """Unit-energy RRC filter of ``span * sps + 1`` taps, centred."""
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"roll-off must lie in [0, 1], got {alpha}")
    if int(sps) != sps or sps < 2:
        raise ConfigError(f"sps must be an integer >= 2, got {sps}")
    if span <= 0 or span % 2:
        raise ConfigError(f"span must be a positive even number, got {span}")
    sps = int(sps)
    m = np.arange(-(span * sps) // 2, (span * sps) // 2 + 1)
    h = rrc_pulse(m / sps, alpha)
    return h / np.sqrt(np.sum(h * h))


def shape_and_resample(symbols, shaper: PulseShaperConfig, dac_rate: float) -> DigitalWaveform:
    """Pulse-shape ``symbols`` straight onto the DAC sample grid.

    With ``dac_rate / symbol_rate = P/Q`` the symbols are conceptually
    up-sampled by ``P``, RRC filtered and decimated by ``Q``; only the
    surviving output samples are computed, each from one of ``P``
    polyphase branches of the RRC. The symbol sequence is extended
    cyclically, so the output is steady state from the first sample, and
    the peak of symbol 0 falls on sample 0.

    The pulse is scaled so that a run of equal symbols ``a`` produces the
    constant ``a``.
    """
    if shaper.occupied_bandwidth > dac_rate / 2 * (1 + 1e-12):
        raise ConfigError(
            f"{shaper.symbol_rate:g} GBd with roll-off {shaper.rolloff:g} occupies "
            f"{shaper.occupied_bandwidth:g} GHz, above the {dac_rate / 2:g} GHz Nyquist limit"
        )
    a = np.asarray(symbols, dtype=float)
    n = a.size
    r = rate_ratio(dac_rate, shaper.symbol_rate)
    p, q = r.numerator, r.denominator
    if p > MAX_PHASES:
        raise ConfigError(f"rate ratio {r} needs {p} polyphase branches (limit {MAX_PHASES})")
    length = (n * p) // q
    if n == 0:
        return DigitalWaveform(np.zeros(0), dac_rate)
    half = shaper.span // 2
    taps = rrc_taps(shaper.rolloff, p, shaper.span) * math.sqrt(p) if p >= 2 else rrc_pulse(
        np.arange(-half, half + 1), shaper.rolloff
    )
    centre = half * p
    js = np.arange(-half, half + 1)
    tap_idx = centre + np.arange(p)[:, None] + js[None, :] * p
    valid = (tap_idx >= 0) & (tap_idx < taps.size)
    bank = np.where(valid, taps[np.clip(tap_idx, 0, taps.size - 1)], 0.0)
    out = np.empty(length)
    chunk = 1 << 14
    for s in range(0, length, chunk):
        k = np.arange(s, min(s + chunk, length), dtype=np.int64)
        base, ph = np.divmod(k * q, p)
        sym = a[(base[:, None] - js[None, :]) % n]
        out[s : s + k.size] = np.einsum("ij,ij->i", sym, bank[ph])
    return DigitalWaveform(out, float(dac_rate))


def drive_scale(samples, vpp: float, clip_mode: str = "peak", backoff_db: float = 0.0) -> float:
    """Gain that maps ``samples`` onto a ``vpp`` peak-to-peak drive.

    ``peak`` puts the largest magnitude at ``vpp/2``; ``rms_backoff`` puts
    the RMS at ``vpp/2 * 10**(-backoff_db/20)``.
    """
    x = np.asarray(samples, dtype=float)
    if clip_mode == "peak":
        ref = np.max(np.abs(x)) if x.size else 0.0
        target = vpp / 2
    elif clip_mode == "rms_backoff":
        ref = float(np.sqrt(np.mean(x * x))) if x.size else 0.0
        target = vpp / 2 * 10 ** (-backoff_db / 20)
    else:
        raise ConfigError(f"unknown clip mode {clip_mode!r}")
    return 0.0 if ref == 0 else target / ref


def dac_quantize(
    waveform: DigitalWaveform, bits: int = 8, vpp: float = 1.0, clip_mode: str = "peak", backoff_db: float = 0.0
) -> DigitalWaveform:
    """Scale to the DAC swing, hard-clip to ``+-vpp/2`` and quantize.

    Uses a mid-tread quantizer with step ``vpp / 2**bits`` and codes
    ``-2**(bits-1) .. 2**(bits-1) - 1``.
    """
    if not 4 <= bits <= 12:
        raise ConfigError(f"DAC resolution must be 4..12 bits, got {bits}")
    if vpp <= 0:
        raise ConfigError("vpp must be positive")
    g = drive_scale(waveform.samples, vpp, clip_mode, backoff_db)
    x = np.clip(waveform.samples * g, -vpp / 2, vpp / 2)
    step = vpp / 2**bits
    codes = np.clip(np.rint(x / step), -(2 ** (bits - 1)), 2 ** (bits - 1) - 1)
    return DigitalWaveform(codes * step, waveform.sample_rate)
