"""
BER curves, receiver sensitivity at the hard-decision FEC threshold, eye
diagrams and symbol histograms, plus analytic PAM error rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import erfc, erfcinv

from .errors import AmbiguousCrossingError

__all__ = [
    "HD_FEC_THRESHOLD",
    "MIN_ERRORS",
    "BerPoint",
    "BerCurve",
    "SensitivityResult",
    "EyeData",
    "HistogramData",
    "sensitivity",
    "eye_accumulate",
    "log_histogram",
    "outer_mass",
    "qfunc",
    "pam_ser_awgn",
    "pam_ber_awgn",
    "pam_snr_for_ber",
]

HD_FEC_THRESHOLD = 3.8e-3
MIN_ERRORS = 100


@dataclass(frozen=True)
class BerPoint:
    rop_dbm: float
    ber: float
    bits: int

    @property
    def errors(self) -> int:
        return int(round(self.ber * self.bits))

    @property
    def reliable(self) -> bool:
        """At least :data:`MIN_ERRORS` errors were counted."""
        return self.bits * self.ber >= MIN_ERRORS


@dataclass(frozen=True)
class BerCurve:
    points: tuple
    modulation: str = ""
    symbol_rate: float = 0.0
    shaping: str = "uniform"
    entropy: float = float("nan")

    def __post_init__(self):
        pts = tuple(sorted(self.points, key=lambda p: p.rop_dbm))
        rops = [p.rop_dbm for p in pts]
        if any(b <= a for a, b in zip(rops, rops[1:])):
            raise ValueError("ROP values must be distinct")
        for p in pts:
            if not 0.0 <= p.ber <= 0.5 or p.bits <= 0:
                raise ValueError(f"invalid BER point {p}")
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_arrays(cls, rops, bers, bits=10**6, **kw):
        bits = np.broadcast_to(bits, np.shape(rops))
        return cls(tuple(BerPoint(float(r), float(b), int(n)) for r, b, n in zip(rops, bers, bits)), **kw)


@dataclass(frozen=True)
class SensitivityResult:
    """Threshold crossing of a BER curve.

    ``status`` is ``"reached"``, ``"not reached"`` (every point above the
    threshold) or ``"below range"`` (every point at or below it, so the
    crossing lies left of the measured ROPs).
    """

    threshold_ber: float
    rop_at_threshold: Optional[float]
    status: str
    bracket: tuple = ()
    zero_ber_rops: tuple = ()

    @property
    def reached(self) -> bool:
        return self.status == "reached"


def sensitivity(curve: BerCurve, threshold: float = HD_FEC_THRESHOLD) -> SensitivityResult:
    """ROP where the curve crosses ``threshold``.

    Interpolates linearly in (ROP dBm, log10 BER) between the two points
    that straddle the threshold. Points with zero BER carry no log value
    and are skipped.

    Raises
    ------
    AmbiguousCrossingError
        If the curve crosses the threshold more than once or crosses it
        upwards.
    """
    zero = tuple(p.rop_dbm for p in curve.points if p.ber == 0)
    pts = [p for p in curve.points if p.ber > 0]
    if not pts:
        return SensitivityResult(threshold, None, "below range", (), zero)
    lt = math.log10(threshold)
    s = [math.log10(p.ber) - lt for p in pts]
    crossings = []
    for i, si in enumerate(s):
        if si == 0:
            crossings.append((pts[i].rop_dbm, (pts[i], pts[i]), "at"))
    for i in range(len(pts) - 1):
        a, b = s[i], s[i + 1]
        if a * b < 0:
            x0, x1 = pts[i].rop_dbm, pts[i + 1].rop_dbm
            rop = x0 + (x1 - x0) * a / (a - b)
            crossings.append((rop, (pts[i], pts[i + 1]), "down" if a > 0 else "up"))
    if not crossings:
        if all(v > 0 for v in s):
            return SensitivityResult(threshold, None, "not reached", (), zero)
        return SensitivityResult(threshold, None, "below range", (), zero)
    if len(crossings) > 1 or crossings[0][2] == "up":
        rops = sorted(c[0] for c in crossings)
        raise AmbiguousCrossingError(
            f"BER curve crosses {threshold:g} non-monotonically at ROP {', '.join(f'{r:.3f}' for r in rops)} dBm",
            rops,
        )
    rop, bracket, _ = crossings[0]
    return SensitivityResult(threshold, float(rop), "reached", bracket, zero)


@dataclass(frozen=True)
class EyeData:
    counts: np.ndarray  # (time bins, amplitude bins)
    time_edges: np.ndarray  # unit intervals
    amp_edges: np.ndarray
    mean_trace: np.ndarray  # per time bin, NaN where empty


def eye_accumulate(waveform, sps: float, span_ui: int = 2, time_bins=None, amp_bins: int = 256, amp_range=None) -> EyeData:
    """Fold a waveform into a two-symbol (by default) eye histogram.

    Sample ``k`` lands at time ``(k / sps) mod span_ui`` unit intervals.
    """
    if sps < 2:
        raise ValueError("eye folding needs at least 2 samples per symbol")
    x = np.asarray(getattr(waveform, "samples", waveform), dtype=float)
    if time_bins is None:
        time_bins = max(int(round(span_ui * sps)), 1)
    t = np.mod(np.arange(x.size) / sps, span_ui)
    if amp_range is None:
        lo, hi = (float(x.min()), float(x.max())) if x.size else (0.0, 1.0)
        if hi <= lo:
            lo, hi = lo - 0.5, hi + 0.5
    else:
        lo, hi = amp_range
    t_edges = np.linspace(0, span_ui, time_bins + 1)
    a_edges = np.linspace(lo, hi, amp_bins + 1)
    counts, _, _ = np.histogram2d(t, x, bins=(t_edges, a_edges))
    ti = np.clip(np.searchsorted(t_edges, t, side="right") - 1, 0, time_bins - 1)
    n = np.bincount(ti, minlength=time_bins)
    s = np.bincount(ti, weights=x, minlength=time_bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(n > 0, s / np.maximum(n, 1), np.nan)
    return EyeData(counts.astype(np.int64), t_edges, a_edges, mean)


@dataclass(frozen=True)
class HistogramData:
    counts: np.ndarray
    edges: np.ndarray

    @property
    def log_counts(self) -> np.ndarray:
        return np.log10(self.counts + 1.0)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])


def log_histogram(symbols, bins: int = 128, value_range=None) -> HistogramData:
    """Amplitude histogram of equalized symbols with ``log10(count+1)`` companion."""
    if bins < 16:
        raise ValueError("log histogram needs at least 16 bins")
    y = np.asarray(symbols, dtype=float).ravel()
    if value_range is None:
        lo, hi = (float(y.min()), float(y.max())) if y.size else (0.0, 1.0)
        if hi <= lo:
            lo, hi = lo - 0.5, hi + 0.5
    else:
        lo, hi = value_range
    counts, edges = np.histogram(y, bins=bins, range=(lo, hi))
    return HistogramData(counts.astype(np.int64), edges)


def outer_mass(hist: HistogramData, threshold: float) -> float:
    """Fraction of histogram mass in bins centred at ``|y| >= threshold``."""
    total = hist.counts.sum()
    if total == 0:
        return 0.0
    return float(hist.counts[np.abs(hist.centers) >= threshold].sum() / total)


def qfunc(x):
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def pam_ser_awgn(snr_linear, order: int):
    """Symbol error rate of equiprobable PAM-``order`` at symbol SNR ``Es/sigma^2``."""
    snr = np.asarray(snr_linear, dtype=float)
    d_over_sigma = np.sqrt(3.0 * snr / (order**2 - 1))
    return 2.0 * (order - 1) / order * qfunc(d_over_sigma)


def pam_ber_awgn(snr_linear, order: int):
    """Nearest-neighbour Gray-PAM bit error rate (one bit per symbol error)."""
    return pam_ser_awgn(snr_linear, order) / math.log2(order)


def pam_snr_for_ber(ber: float, order: int) -> float:
    """Symbol SNR (linear) at which :func:`pam_ber_awgn` equals ``ber``."""
    q = ber * math.log2(order) * order / (2.0 * (order - 1))
    arg = math.sqrt(2.0) * float(erfcinv(2.0 * q))
    return arg * arg * (order**2 - 1) / 3.0
