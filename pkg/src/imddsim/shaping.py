"""
PAM constellations, Maxwell-Boltzmann shaping and rate algebra.

Levels are kept on the odd-integer grid ``{..., -3, -1, 1, 3, ...}``;
scaling to a drive voltage happens in :mod:`imddsim.txchain`.

Two shaping polarities are supported. A *cap* distribution weights level
``x`` by ``exp(-nu * x**2)`` and concentrates mass on the inner levels; a
*cup* distribution uses ``exp(+nu * x**2)`` and favours the outer levels.
Both are symmetric about zero, and for either polarity the entropy falls
strictly as ``nu`` grows, tending to 1 bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from itertools import product

import numpy as np
from scipy.special import logsumexp

from .errors import ConvergenceError, InfeasiblePlanError, OutOfRangeError

__all__ = [
    "Polarity",
    "PamConstellation",
    "ShapedDistribution",
    "RatePlan",
    "pam",
    "entropy_bits",
    "mb_distribution",
    "uniform_distribution",
    "solve_nu",
    "required_entropy",
    "achievable_net_rate",
    "rate_plan",
    "sample_symbols",
    "symbol_indices",
    "gray_map",
    "gray_demap",
    "gray_labels",
    "pam6_codebook",
    "pam6_encode",
    "pam6_decode",
    "format_distribution",
]

NU_BRACKET = (0.0, 64.0)
NU_MAX_ITER = 200


class Polarity(str, Enum):
    CAP = "cap"
    CUP = "cup"

    @property
    def sign(self) -> float:
        return -1.0 if self is Polarity.CAP else 1.0


@dataclass(frozen=True)
class PamConstellation:
    """Symmetric odd-integer PAM grid.

    Attributes
    ----------
    order : int
        Number of levels ``M``.
    levels : np.ndarray
        Ascending amplitudes ``-(M-1), ..., -1, 1, ..., M-1``.
    label_bits : float
        Bits carried per symbol by the labelling (``log2 M`` for Gray
        labelled PAM-4/8, 2.5 for the two-symbol PAM-6 code).
    """

    order: int
    levels: np.ndarray = field(repr=False)
    label_bits: float

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=float)
        if lv.size != self.order:
            raise ValueError("level count does not match order")
        if np.any(np.diff(lv) <= 0):
            raise ValueError("levels must be strictly increasing")
        if not np.array_equal(lv, -lv[::-1]):
            raise ValueError("levels must be symmetric about zero")
        lv.setflags(write=False)
        object.__setattr__(self, "levels", lv)

    @property
    def bits_per_symbol_max(self) -> float:
        return math.log2(self.order)


def pam(order: int) -> PamConstellation:
    """Odd-integer PAM-``order`` constellation."""
    if order < 2 or order % 2:
        raise ValueError(f"PAM order must be even and >= 2, got {order}")
    levels = np.arange(-(order - 1), order, 2, dtype=float)
    label_bits = 2.5 if order == 6 else math.log2(order)
    return PamConstellation(order, levels, label_bits)


def entropy_bits(probs) -> float:
    p = np.asarray(probs, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


@dataclass(frozen=True)
class ShapedDistribution:
    constellation: PamConstellation
    probs: np.ndarray = field(repr=False)
    nu: float
    polarity: Polarity
    entropy_bits: float

    @property
    def levels(self) -> np.ndarray:
        return self.constellation.levels

    @property
    def is_uniform(self) -> bool:
        return self.nu == 0.0

    def mean_energy(self) -> float:
        return float(np.sum(self.probs * self.levels**2))


def _mb_log_probs(levels, nu, sign):
    logits = sign * nu * np.asarray(levels) ** 2
    return logits - logsumexp(logits)


def mb_distribution(constellation: PamConstellation, nu: float, polarity="cap") -> ShapedDistribution:
    """Maxwell-Boltzmann distribution over ``constellation``.

    Parameters
    ----------
    constellation : PamConstellation
    nu : float
        Non-negative shaping exponent. ``nu = 0`` gives the uniform law.
    polarity : {"cap", "cup"}

    Returns
    -------
    ShapedDistribution
    """
    if not nu >= 0 or not math.isfinite(nu):
        raise ValueError(f"shaping exponent must be finite and >= 0, got {nu}")
    polarity = Polarity(polarity)
    logp = _mb_log_probs(constellation.levels, nu, polarity.sign)
    # floor at the smallest normal double so every level stays possible
    probs = np.maximum(np.exp(logp), np.finfo(float).tiny)
    # enforce exact symmetry against rounding in exp
    probs = 0.5 * (probs + probs[::-1])
    probs /= probs.sum()
    probs.setflags(write=False)
    return ShapedDistribution(constellation, probs, float(nu), polarity, entropy_bits(probs))


def uniform_distribution(constellation: PamConstellation) -> ShapedDistribution:
    return mb_distribution(constellation, 0.0, Polarity.CAP)


def _entropy_of_nu(levels, nu, sign):
    logp = _mb_log_probs(levels, nu, sign)
    p = np.exp(logp)
    return float(-np.sum(p * logp) / math.log(2))


def solve_nu(constellation: PamConstellation, polarity, target_entropy: float, tol: float = 1e-9) -> float:
    """Shaping exponent whose MB distribution has ``target_entropy`` bits.

    Bisection over ``[0, 64]``; entropy is strictly decreasing in ``nu``.

    Raises
    ------
    OutOfRangeError
        If ``target_entropy`` is outside ``(1, log2 M]``.
    ConvergenceError
        If the tolerance is not met within 200 halvings.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    polarity = Polarity(polarity)
    hmax = constellation.bits_per_symbol_max
    if not (1.0 < target_entropy <= hmax + 1e-12):
        raise OutOfRangeError(
            f"target entropy {target_entropy} outside (1, {hmax:g}] bits for PAM-{constellation.order}"
        )
    levels, sign = constellation.levels, polarity.sign
    lo, hi = NU_BRACKET
    if hmax - target_entropy <= tol:
        return 0.0
    if _entropy_of_nu(levels, hi, sign) > target_entropy:
        raise OutOfRangeError(f"target entropy {target_entropy} not reachable with nu <= {hi:g}")
    for _ in range(NU_MAX_ITER):
        mid = 0.5 * (lo + hi)
        h = _entropy_of_nu(levels, mid, sign)
        if abs(h - target_entropy) <= tol:
            return mid
        if h > target_entropy:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError(f"nu bisection did not reach tol={tol} after {NU_MAX_ITER} iterations")


def _fec_penalty(fec_overhead, m):
    return m * fec_overhead / (1.0 + fec_overhead)


def required_entropy(net_rate: float, symbol_rate: float, fec_overhead: float, m: float) -> float:
    """Entropy (bits/symbol) that carries ``net_rate`` at ``symbol_rate``.

    ``net_rate`` in Gbit/s and ``symbol_rate`` in GBd. The FEC parity is
    assumed to occupy ``m * OH / (1 + OH)`` bits of every symbol.
    """
    if net_rate <= 0 or symbol_rate <= 0 or m <= 0 or fec_overhead < 0:
        raise InfeasiblePlanError("net rate, symbol rate and m must be positive, overhead non-negative")
    h = net_rate / symbol_rate + _fec_penalty(fec_overhead, m)
    if not (1.0 < h <= m + 1e-12):
        raise InfeasiblePlanError(
            f"{net_rate:g} Gbit/s at {symbol_rate:g} GBd with {fec_overhead:.0%} FEC needs "
            f"H = {h:.4f} bits/symbol, outside (1, {m:g}]"
        )
    return h


def achievable_net_rate(entropy: float, symbol_rate: float, fec_overhead: float, m: float) -> float:
    if not (0 < entropy <= m + 1e-12):
        raise InfeasiblePlanError(f"entropy {entropy} outside (0, {m}]")
    if symbol_rate <= 0 or fec_overhead < 0:
        raise InfeasiblePlanError("symbol rate must be positive and overhead non-negative")
    return symbol_rate * (entropy - _fec_penalty(fec_overhead, m))


@dataclass(frozen=True)
class RatePlan:
    symbol_rate: float
    fec_overhead: float
    bits_per_symbol_max: float
    entropy_target: float
    net_rate: float

    @property
    def ps_overhead(self) -> float:
        return self.bits_per_symbol_max - self.entropy_target


def rate_plan(net_rate, symbol_rate, fec_overhead, m=3.0, entropy=None) -> RatePlan:
    """Build a :class:`RatePlan`; the net rate is recomputed exactly from the entropy."""
    if entropy is None:
        entropy = required_entropy(net_rate, symbol_rate, fec_overhead, m)
    exact = achievable_net_rate(entropy, symbol_rate, fec_overhead, m)
    return RatePlan(symbol_rate, fec_overhead, m, entropy, exact)


def sample_symbols(dist: ShapedDistribution, n: int, seed) -> np.ndarray:
    """Draw ``n`` i.i.d. levels from ``dist`` by inverse CDF.

    ``seed`` is anything :func:`numpy.random.default_rng` accepts; the
    output is reproducible for equal ``(dist, n, seed)``.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(dist.probs)
    u = rng.random(n)
    idx = np.searchsorted(cdf, u, side="right")
    np.minimum(idx, dist.constellation.order - 1, out=idx)
    return dist.levels[idx]


def symbol_indices(symbols, constellation: PamConstellation) -> np.ndarray:
    """Map integer-grid levels to their ascending index."""
    s = np.asarray(symbols, dtype=float)
    idx = np.rint((s + (constellation.order - 1)) / 2).astype(np.int64)
    if np.any(idx < 0) or np.any(idx >= constellation.order) or np.any(constellation.levels[idx] != s):
        raise ValueError("symbols are not levels of the constellation")
    return idx


def _bits_per_label(order):
    k = int(round(math.log2(order)))
    if 2**k != order:
        raise ValueError(f"Gray labelling needs a power-of-two order, got {order}")
    return k


def gray_labels(order: int) -> np.ndarray:
    """Label bits (``order x log2 order``, MSB first) of the ascending levels."""
    k = _bits_per_label(order)
    g = np.arange(order) ^ (np.arange(order) >> 1)
    return ((g[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(np.uint8)


def gray_map(bits, constellation: PamConstellation) -> np.ndarray:
    """Binary-reflected Gray mapping, MSB first, over ascending levels."""
    order = constellation.order
    k = _bits_per_label(order)
    b = np.asarray(bits, dtype=np.uint8).ravel()
    if b.size % k:
        raise ValueError(f"bit count {b.size} not divisible by {k}")
    g = b.reshape(-1, k) @ (1 << np.arange(k - 1, -1, -1))
    # Gray -> binary index
    idx = g.copy()
    shift = g >> 1
    while np.any(shift):
        idx ^= shift
        shift >>= 1
    return constellation.levels[idx]


def gray_demap(symbols, constellation: PamConstellation) -> np.ndarray:
    idx = symbol_indices(symbols, constellation)
    return gray_labels(constellation.order)[idx].ravel()


def pam6_codebook() -> np.ndarray:
    """The 32 admissible PAM-6 symbol pairs, row ``i`` carrying label ``i``.

    All 36 pairs except the four corners ``(+-5, +-5)``, in lexicographic
    order.
    """
    lv = pam(6).levels
    pairs = [(a, b) for a, b in product(lv, lv) if not (abs(a) == 5 and abs(b) == 5)]
    return np.array(pairs, dtype=float)


_PAM6_BOOK = pam6_codebook()
_PAM6_WEIGHTS = 1 << np.arange(4, -1, -1)


def pam6_encode(bits) -> np.ndarray:
    """Map 5-bit blocks (MSB first) to pairs of PAM-6 levels."""
    b = np.asarray(bits, dtype=np.uint8).ravel()
    if b.size % 5:
        raise ValueError(f"PAM-6 needs whole 5-bit blocks, got {b.size} bits")
    labels = b.reshape(-1, 5) @ _PAM6_WEIGHTS
    return _PAM6_BOOK[labels].ravel()


def pam6_decode(symbols) -> np.ndarray:
    """Inverse of :func:`pam6_encode`.

    Pairs outside the codebook go to the nearest codeword in squared
    Euclidean distance; ties resolve to the lexicographically smaller
    pair, which is the lower row of the codebook.
    """
    s = np.asarray(symbols, dtype=float).ravel()
    if s.size % 2:
        raise ValueError("PAM-6 decoding needs an even number of symbols")
    pairs = s.reshape(-1, 2)
    d2 = ((pairs[:, None, :] - _PAM6_BOOK[None, :, :]) ** 2).sum(axis=-1)
    labels = np.argmin(d2, axis=1)
    return ((labels[:, None] >> np.arange(4, -1, -1)) & 1).astype(np.uint8).ravel()


def format_distribution(dist: ShapedDistribution) -> str:
    """Plain-text ``level probability`` table."""
    lines = [
        f"# PAM-{dist.constellation.order} {dist.polarity.value} nu={dist.nu!r} entropy={dist.entropy_bits!r}",
        "# level probability",
    ]
    lines += [f"{int(x):d} {float(p)!r}" for x, p in zip(dist.levels, dist.probs)]
    return "\n".join(lines) + "\n"
