"""
Receiver DSP: timing synchronization, 1 sample/symbol resampling,
Volterra nonlinear equalization and symbol decisions.

The equalizer is initialised by a regularised least-squares (MMSE) fit on
known training symbols and then tracked with decision-directed LMS.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Callable, Optional

import numpy as np
from scipy import linalg

from .errors import ConfigError, DivergenceError, IllConditionedError, ImddError, SyncError
from .resample import interpolate
from .shaping import ShapedDistribution, gray_demap, pam6_decode
from .txchain import DigitalWaveform, PulseShaperConfig, shape_and_resample

__all__ = [
    "SyncResult",
    "EqualizerConfig",
    "EqualizerState",
    "EqualizerResult",
    "BerResult",
    "matched_filter",
    "synchronize",
    "resample_1sps",
    "normalize",
    "feature_count",
    "volterra_features",
    "feature_matrix",
    "mmse_train",
    "ddlms_step",
    "make_decider",
    "decide",
    "equalize",
    "demap_and_count",
]

MIN_PEAK_RATIO = 1.5
WEIGHT_NORM_LIMIT = 1e6


def _rc_spectrum(f, symbol_rate, alpha):
    af = np.abs(f)
    f1 = 0.5 * (1 - alpha) * symbol_rate
    f2 = 0.5 * (1 + alpha) * symbol_rate
    h = np.where(af <= f1, 1.0, 0.0)
    if alpha > 0:
        band = (af > f1) & (af <= f2)
        h = np.where(band, 0.5 * (1 + np.cos(np.pi / (alpha * symbol_rate) * (af - f1))), h)
    return h


def matched_filter(waveform: DigitalWaveform, symbol_rate: float, rolloff: float) -> DigitalWaveform:
    """Root-raised-cosine receive filter with unit DC gain (periodic record)."""
    x = waveform.samples
    f = np.fft.rfftfreq(x.size, 1.0 / waveform.sample_rate)
    h = np.sqrt(_rc_spectrum(f, symbol_rate, rolloff))
    return DigitalWaveform(np.fft.irfft(np.fft.rfft(x) * h, x.size), waveform.sample_rate)


@dataclass(frozen=True)
class SyncResult:
    delay: float
    polarity: int
    peak_ratio: float


def synchronize(
    rx: DigitalWaveform,
    reference_symbols,
    symbol_rate: float,
    rolloff: float = 0.4,
    span: int = 64,
    periodic: bool = True,
) -> SyncResult:
    """Locate the transmitted symbol sequence in ``rx``.

    Cross-correlates ``rx`` with the reference symbols pulse-shaped at the
    receive rate. The integer lag comes from the largest correlation
    magnitude, the fractional part from a parabola through the peak and
    its two neighbours. ``polarity`` is the sign of the correlation peak,
    so an inverting link is detected too.

    Returns
    -------
    SyncResult
        ``delay`` in receive samples, position of symbol 0.

    Raises
    ------
    SyncError
        If the main peak is not at least 1.5 times the largest correlation
        outside its immediate neighbourhood.
    """
    fs = rx.sample_rate
    ref = shape_and_resample(reference_symbols, PulseShaperConfig(rolloff, symbol_rate, span), fs).samples
    x = rx.samples - np.mean(rx.samples)
    if ref.size == 0 or ref.size > x.size:
        raise SyncError("reference is empty or longer than the capture")
    if periodic:
        r = np.zeros(x.size)
        r[: ref.size] = ref
        c = np.fft.irfft(np.fft.rfft(x) * np.conj(np.fft.rfft(r)), x.size)
    else:
        from scipy.signal import correlate

        c = correlate(x, ref, mode="full", method="fft")[ref.size - 1 :]
    mag = np.abs(c)
    k = int(np.argmax(mag))
    guard = int(math.ceil(2 * fs / symbol_rate)) + 1
    lags = np.arange(c.size)
    dist = np.abs(lags - k)
    if periodic:
        dist = np.minimum(dist, c.size - dist)
    outside = mag[dist > guard]
    second = float(outside.max()) if outside.size else 0.0
    ratio = float(mag[k] / second) if second > 0 else math.inf
    if not ratio >= MIN_PEAK_RATIO:
        raise SyncError(f"no clear correlation peak (peak/secondary = {ratio:.2f} < {MIN_PEAK_RATIO})")
    sign = 1 if c[k] > 0 else -1
    if periodic:
        ym, y0, yp = sign * c[(k - 1) % c.size], sign * c[k], sign * c[(k + 1) % c.size]
    elif 0 < k < c.size - 1:
        ym, y0, yp = sign * c[k - 1], sign * c[k], sign * c[k + 1]
    else:
        ym = y0 = yp = 0.0
    den = ym - 2 * y0 + yp
    frac = 0.5 * (ym - yp) / den if den < 0 else 0.0
    delay = k + float(np.clip(frac, -0.5, 0.5))
    if periodic and delay > c.size - 0.5:
        delay -= c.size
    return SyncResult(delay, sign, ratio)


def resample_1sps(
    rx: DigitalWaveform, delay: float, symbol_rate: float, n_symbols: int, periodic: bool = True
) -> np.ndarray:
    """Band-limited interpolation of ``rx`` at ``delay + k * fs/symbol_rate``."""
    sps = rx.sample_rate / symbol_rate
    pos = delay + np.arange(n_symbols) * sps
    n = len(rx)
    if periodic:
        if n_symbols * sps > n * (1 + 1e-9):
            raise ImddError(f"capture of {n} samples holds fewer than {n_symbols} symbols")
    elif n_symbols and (pos[0] < 0 or pos[-1] > n - 1):
        raise ImddError(f"capture of {n} samples too short for {n_symbols} symbols at delay {delay:g}")
    return interpolate(rx.samples, pos, periodic=periodic)


def normalize(x, target_rms: float) -> np.ndarray:
    """Remove the mean and scale to ``target_rms``."""
    x = np.asarray(x, dtype=float)
    y = x - x.mean()
    rms = math.sqrt(float(np.mean(y * y)))
    return y * (target_rms / rms) if rms > 0 else y


@dataclass(frozen=True)
class EqualizerConfig:
    """Volterra equalizer settings.

    ``ridge`` is relative: the absolute weight penalty is
    ``ridge * trace(X^T X) / n_features``.
    """

    mem1: int = 311
    mem2: int = 11
    mem3: int = 11
    orders: tuple = (1, 2, 3)
    ridge: float = 1e-6
    mu: float = 2e-5
    train_symbols: int = 8192

    def __post_init__(self):
        object.__setattr__(self, "orders", tuple(sorted(set(int(o) for o in self.orders))))
        if not self.orders or not set(self.orders) <= {1, 2, 3}:
            raise ConfigError(f"orders must be a non-empty subset of {{1, 2, 3}}, got {self.orders}")
        for name in ("mem1", "mem2", "mem3"):
            m = getattr(self, name)
            if m <= 0 or m % 2 == 0:
                raise ConfigError(f"{name} must be odd and positive, got {m}")
        if self.mem2 > self.mem1 or self.mem3 > self.mem1:
            raise ConfigError("nonlinear memories must fit inside the linear window")
        if self.ridge < 0 or self.mu < 0 or self.train_symbols < 0:
            raise ConfigError("ridge, mu and train_symbols must be non-negative")

    @property
    def n_features(self) -> int:
        return feature_count(self)


def feature_count(cfg: EqualizerConfig) -> int:
    n = 0
    if 1 in cfg.orders:
        n += cfg.mem1
    if 2 in cfg.orders:
        n += cfg.mem2 * (cfg.mem2 + 1) // 2
    if 3 in cfg.orders:
        n += cfg.mem3 * (cfg.mem3 + 1) * (cfg.mem3 + 2) // 6
    return n


@lru_cache(maxsize=32)
def _layout(mem1, mem2, mem3, orders):
    """Offsets (relative to the current symbol) and product index tuples."""
    off1 = np.arange(mem1) - mem1 // 2
    off2 = np.arange(mem2) - mem2 // 2
    off3 = np.arange(mem3) - mem3 // 2
    pairs = np.array(list(combinations_with_replacement(range(mem2), 2)), dtype=np.int64).reshape(-1, 2)
    triples = np.array(list(combinations_with_replacement(range(mem3), 3)), dtype=np.int64).reshape(-1, 3)
    return off1, off2, off3, pairs, triples


def _features_from_windows(w1, w2, w3, cfg, pairs, triples):
    parts = []
    if 1 in cfg.orders:
        parts.append(w1)
    if 2 in cfg.orders:
        parts.append(w2[:, pairs[:, 0]] * w2[:, pairs[:, 1]])
    if 3 in cfg.orders:
        parts.append(w3[:, triples[:, 0]] * w3[:, triples[:, 1]] * w3[:, triples[:, 2]])
    return np.concatenate(parts, axis=1)


def volterra_features(window, cfg: EqualizerConfig) -> np.ndarray:
    """Feature vector for one output symbol.

    ``window`` holds ``mem1`` samples with the current symbol in the
    middle, oldest first. The vector is the linear window, then every
    product ``x_i x_j`` (``i <= j``) of the centred ``mem2`` sub-window,
    then every ``x_i x_j x_k`` (``i <= j <= k``) of the centred ``mem3``
    sub-window, each block in lexicographic index order.
    """
    w = np.asarray(window, dtype=float)
    if w.size != cfg.mem1:
        raise ValueError(f"window must have {cfg.mem1} samples, got {w.size}")
    off1, off2, off3, pairs, triples = _layout(cfg.mem1, cfg.mem2, cfg.mem3, cfg.orders)
    c = cfg.mem1 // 2
    w2 = w[c + off2][None, :]
    w3 = w[c + off3][None, :]
    return _features_from_windows(w[None, :], w2, w3, cfg, pairs, triples)[0]


def feature_matrix(x, cfg: EqualizerConfig, indices=None, periodic: bool = True) -> np.ndarray:
    """Rows of :func:`volterra_features` for symbol ``indices`` of ``x``.

    Out-of-range neighbours wrap around when ``periodic``, else read as 0.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    idx = np.arange(n) if indices is None else np.asarray(indices, dtype=np.int64)
    off1, off2, off3, pairs, triples = _layout(cfg.mem1, cfg.mem2, cfg.mem3, cfg.orders)

    def win(off):
        j = idx[:, None] + off[None, :]
        if periodic:
            return x[j % n]
        ok = (j >= 0) & (j < n)
        return np.where(ok, x[np.clip(j, 0, n - 1)], 0.0)

    return _features_from_windows(win(off1), win(off2), win(off3), cfg, pairs, triples)


def mmse_train(features, targets, ridge: float = 0.0) -> np.ndarray:
    """Ridge-regularised least squares via Cholesky of the normal equations.

    Minimises ``sum((targets - features @ w)**2) + ridge * |w|**2``.

    Raises
    ------
    IllConditionedError
        When the normal matrix is singular or numerically so.
    """
    X = np.asarray(features, dtype=float)
    d = np.asarray(targets, dtype=float)
    if X.shape[0] != d.size:
        raise ValueError("feature rows and targets differ in length")
    A = X.T @ X
    if ridge:
        A[np.diag_indices_from(A)] += ridge
    b = X.T @ d
    try:
        cf = linalg.cho_factor(A, lower=True, check_finite=True)
    except linalg.LinAlgError as exc:
        raise IllConditionedError("normal equations are not positive definite; use ridge > 0") from exc
    diag = np.abs(np.diag(cf[0]))
    if diag.min() <= 1e-7 * diag.max():
        raise IllConditionedError(
            f"normal equations ill-conditioned (pivot ratio {diag.min() / diag.max():.1e}); use ridge > 0"
        )
    return linalg.cho_solve(cf, b)


@dataclass
class EqualizerState:
    weights: np.ndarray
    symbol_index: int = 0
    mode: str = "train"


def ddlms_step(state: EqualizerState, features, decide_fn: Callable[[float], float], mu: float, target=None):
    """One LMS update; the state is modified in place.

    The error is ``target - y`` when a known ``target`` is given (training)
    and ``decide_fn(y) - y`` otherwise.

    Returns
    -------
    state, y
        ``y`` is the output computed before the update.
    """
    w = state.weights
    y = float(np.dot(w, features))
    ref = decide_fn(y) if target is None else target
    if mu:
        w += (mu * (ref - y)) * features
        if np.dot(w, w) > WEIGHT_NORM_LIMIT**2:
            raise DivergenceError(f"LMS weights diverged at symbol {state.symbol_index} (|w| > {WEIGHT_NORM_LIMIT:g})")
    state.symbol_index += 1
    state.mode = "train" if target is not None else "dd"
    return state, y


def _map_thresholds(levels, probs, noise_var):
    """Decision regions of the MAP rule as ``(winning level indices, thresholds)``.

    With equal-variance Gaussian likelihoods each level wins on an
    interval. The boundary between levels ``i < j`` is
    ``(l_i + l_j)/2 + noise_var * ln(p_i/p_j) / (l_j - l_i)``; levels whose
    interval is empty are dropped (upper envelope of the score lines).
    """
    lv = np.asarray(levels, dtype=float)
    lp = np.log(np.asarray(probs, dtype=float))

    def boundary(i, j):
        return 0.5 * (lv[i] + lv[j]) + noise_var * (lp[i] - lp[j]) / (lv[j] - lv[i])

    keep, th = [0], []
    for j in range(1, lv.size):
        while th and boundary(keep[-1], j) <= th[-1]:
            keep.pop()
            th.pop()
        th.append(boundary(keep[-1], j))
        keep.append(j)
    return np.array(keep), np.array(th)


def decide(y, distribution: ShapedDistribution, rule: str = "nearest", noise_var: Optional[float] = None):
    """Symbol decisions on the distribution's levels.

    ``nearest`` picks the closest level, ties to the lower one. ``map``
    maximises ``p(level) * exp(-(y - level)**2 / (2 noise_var))``, ties to
    the lower level.
    """
    levels = distribution.levels
    y = np.asarray(y, dtype=float)
    if rule == "nearest":
        mids = 0.5 * (levels[1:] + levels[:-1])
        return levels[np.searchsorted(mids, y, side="left")]
    if rule == "map":
        if not noise_var or noise_var <= 0:
            raise ConfigError("map decisions need a positive noise_var")
        keep, th = _map_thresholds(levels, distribution.probs, noise_var)
        return levels[keep[np.searchsorted(th, y, side="left")]]
    raise ConfigError(f"unknown decision rule {rule!r}")


def make_decider(distribution: ShapedDistribution, rule: str = "nearest", noise_var=None) -> Callable[[float], float]:
    """Fast scalar version of :func:`decide` for sample-by-sample loops."""
    levels = [float(v) for v in distribution.levels]
    if rule == "nearest":
        keep = list(range(len(levels)))
        th = [0.5 * (a + b) for a, b in zip(levels[:-1], levels[1:])]
    elif rule == "map":
        if not noise_var or noise_var <= 0:
            raise ConfigError("map decisions need a positive noise_var")
        k, t = _map_thresholds(distribution.levels, distribution.probs, noise_var)
        keep, th = k.tolist(), t.tolist()
    else:
        raise ConfigError(f"unknown decision rule {rule!r}")
    out = [levels[i] for i in keep]
    return lambda y: out[bisect.bisect_left(th, y)]


@dataclass
class EqualizerResult:
    outputs: np.ndarray
    decisions: np.ndarray
    weights: np.ndarray
    initial_weights: np.ndarray
    train_mse: float
    config: EqualizerConfig = field(repr=False)


def equalize(x, train_targets, cfg: EqualizerConfig, distribution, rule="nearest", noise_var=None, periodic=True):
    """MMSE-initialised, DD-LMS-tracked Volterra equalization of a 1-sps sequence.

    The first ``len(train_targets)`` symbols fit the initial weights; the
    decision-directed pass then runs over the whole block. MAP decisions
    without an explicit ``noise_var`` use the training MSE.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    d = np.asarray(train_targets, dtype=float)
    ntr = d.size
    if ntr == 0 or ntr > n:
        raise ConfigError(f"need 0 < training symbols <= {n}, got {ntr}")
    nf = feature_count(cfg)
    X = feature_matrix(x, cfg, np.arange(ntr), periodic)
    ridge_abs = cfg.ridge * float(np.einsum("ij,ij->", X, X)) / nf
    w0 = mmse_train(X, d, ridge_abs)
    train_mse = float(np.mean((d - X @ w0) ** 2))
    del X
    if rule == "map" and noise_var is None:
        noise_var = max(train_mse, 1e-12)
    state = EqualizerState(w0.copy(), 0, "dd")
    decider = make_decider(distribution, rule, noise_var)
    out = np.empty(n)
    block = 2048
    for s in range(0, n, block):
        F = feature_matrix(x, cfg, np.arange(s, min(s + block, n)), periodic)
        for r in range(F.shape[0]):
            _, out[s + r] = ddlms_step(state, F[r], decider, cfg.mu)
    decisions = decide(out, distribution, rule, noise_var)
    return EqualizerResult(out, decisions, state.weights, w0, train_mse, cfg)


@dataclass(frozen=True)
class BerResult:
    errors: int
    bits: int

    @property
    def ber(self) -> float:
        return self.errors / self.bits if self.bits else float("nan")


def demap_and_count(decided, transmitted_bits, mapping: str, constellation=None) -> BerResult:
    """Demap decided symbols and count bit errors against ``transmitted_bits``.

    ``mapping`` is ``"gray"`` (needs ``constellation``) or ``"pam6"``.
    """
    if mapping == "gray":
        if constellation is None:
            raise ConfigError("gray demapping needs the constellation")
        rx_bits = gray_demap(decided, constellation)
    elif mapping == "pam6":
        rx_bits = pam6_decode(decided)
    else:
        raise ConfigError(f"unknown mapping {mapping!r}")
    tx_bits = np.asarray(transmitted_bits, dtype=np.uint8).ravel()
    if rx_bits.size != tx_bits.size:
        raise ImddError(f"bit count mismatch: {rx_bits.size} decided vs {tx_bits.size} transmitted")
    return BerResult(int(np.count_nonzero(rx_bits != tx_bits)), int(tx_bits.size))
