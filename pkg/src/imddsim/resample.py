"""
Band-limited interpolation with a Kaiser-windowed sinc kernel.

:func:`resample` converts between two rates whose ratio is rational
(``P/Q`` after reduction) using a bank of ``P`` polyphase branches.
:func:`interpolate` evaluates a sampled signal at arbitrary fractional
sample positions with the same kernel.

Signals are treated as one period of a periodic sequence unless
``periodic=False``, in which case samples outside the record are zero.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

__all__ = ["rate_ratio", "kaiser_sinc", "interpolate", "resample"]

TAPS = 32
BETA = 10.0
_CHUNK = 1 << 15


def rate_ratio(out_rate: float, in_rate: float, max_den: int = 100_000) -> Fraction:
    """``out_rate / in_rate`` as a reduced fraction."""
    return Fraction(out_rate).limit_denominator(max_den) / Fraction(in_rate).limit_denominator(max_den)


def kaiser_sinc(t, cutoff=0.5, half_width=TAPS / 2, beta=BETA):
    """Lowpass interpolation kernel at offsets ``t`` (input samples).

    ``cutoff`` is in cycles per input sample; the window spans
    ``|t| < half_width``.
    """
    t = np.asarray(t, dtype=float)
    u = t / half_width
    w = np.where(np.abs(u) < 1.0, np.i0(beta * np.sqrt(np.clip(1.0 - u * u, 0.0, None))) / np.i0(beta), 0.0)
    return 2.0 * cutoff * np.sinc(2.0 * cutoff * t) * w


def _gather(x, idx, periodic):
    n = x.size
    if periodic:
        return x[idx % n]
    valid = (idx >= 0) & (idx < n)
    return np.where(valid, x[np.clip(idx, 0, n - 1)], 0.0)


def interpolate(x, positions, cutoff=0.5, taps=TAPS, beta=BETA, periodic=True, normalize=True):
    """Evaluate ``x`` at fractional sample ``positions``.

    Parameters
    ----------
    x : array_like
        Real or complex samples.
    positions : array_like
        Sample positions, in units of input samples.
    cutoff : float
        Kernel cutoff in cycles/sample; 0.5 is pure interpolation.
    taps : int
        Kernel support in samples at the *lower* of the two rates implied
        by ``cutoff``; the input-sample support is ``taps * 0.5 / cutoff``.
    normalize : bool
        Rescale each kernel instance to unit DC gain.
    """
    x = np.asarray(x)
    pos = np.asarray(positions, dtype=float)
    half = 0.5 * taps * (0.5 / cutoff)
    offs = np.arange(-int(np.ceil(half)) + 1, int(np.ceil(half)) + 1)
    out = np.empty(pos.shape, dtype=np.result_type(x.dtype, float))
    flat_pos = pos.ravel()
    flat_out = out.ravel()
    for s in range(0, flat_pos.size, _CHUNK):
        p = flat_pos[s : s + _CHUNK]
        base = np.floor(p).astype(np.int64)
        frac = p - base
        idx = base[:, None] + offs[None, :]
        k = kaiser_sinc(frac[:, None] - offs[None, :], cutoff, half, beta)
        if normalize:
            k /= k.sum(axis=1, keepdims=True)
        flat_out[s : s + _CHUNK] = np.einsum("ij,ij->i", _gather(x, idx, periodic), k)
    return out


def _polyphase_bank(p, q, taps, beta):
    cutoff = 0.5 * min(1.0, p / q)
    half = 0.5 * taps * (0.5 / cutoff)
    offs = np.arange(-int(np.ceil(half)) + 1, int(np.ceil(half)) + 1)
    phases = np.arange(p) / p
    bank = kaiser_sinc(phases[:, None] - offs[None, :], cutoff, half, beta)
    bank /= bank.sum(axis=1, keepdims=True)
    return offs, bank


def resample(x, in_rate, out_rate, taps=TAPS, beta=BETA, periodic=True, length=None):
    """Rational-ratio polyphase resampling.

    Output sample ``k`` sits at input position ``k * in_rate / out_rate``,
    so sample 0 stays aligned. The anti-imaging/anti-aliasing cutoff is
    half the lower of the two rates.

    Returns an array of ``length`` samples, by default
    ``floor(len(x) * out_rate / in_rate)``.
    """
    x = np.asarray(x)
    r = rate_ratio(out_rate, in_rate)
    p, q = r.numerator, r.denominator
    if length is None:
        length = (x.size * p) // q
    offs, bank = _polyphase_bank(p, q, taps, beta)
    out = np.empty(length, dtype=np.result_type(x.dtype, float))
    for s in range(0, length, _CHUNK):
        k = np.arange(s, min(s + _CHUNK, length), dtype=np.int64)
        num = k * q
        base, phase = np.divmod(num, p)
        idx = base[:, None] + offs[None, :]
        out[s : s + k.size] = np.einsum("ij,ij->i", _gather(x, idx, periodic), bank[phase])
    return out
