"""
End-to-end experiment orchestration: rate planning, single-point
simulation and ROP sweeps.

Randomness is derived only from ``(seed, point index)`` through
:class:`numpy.random.SeedSequence`, so a sweep gives the same numbers
whether its points run serially or in a process pool.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from functools import reduce
from pathlib import Path
from typing import Optional

import numpy as np

from .channel import run_channel
from .config import RunConfig
from .errors import ImddError
from .metrics import HD_FEC_THRESHOLD, BerCurve, BerPoint, SensitivityResult, sensitivity
from .resample import rate_ratio
from .rxdsp import (
    EqualizerResult,
    SyncResult,
    demap_and_count,
    equalize,
    matched_filter,
    normalize,
    resample_1sps,
    synchronize,
)
from .shaping import (
    PamConstellation,
    ShapedDistribution,
    achievable_net_rate,
    gray_demap,
    gray_map,
    mb_distribution,
    pam,
    pam6_encode,
    required_entropy,
    sample_symbols,
    solve_nu,
    uniform_distribution,
)
from .txchain import (
    DigitalWaveform,
    PulseShaperConfig,
    dac_quantize,
    default_rolloff,
    prbs_generate,
    shape_and_resample,
)

__all__ = [
    "FormatPlan",
    "TxData",
    "SimulationResult",
    "SweepResult",
    "plan_format",
    "plan_table",
    "symbol_count",
    "generate_tx",
    "simulate",
    "sweep",
    "sweep_from_points",
    "curve_csv",
    "summary_json",
    "WORKERS_ENV",
]

log = logging.getLogger(__name__)

WORKERS_ENV = "IMDDSIM_WORKERS"
CSV_FIELDS = (
    "format",
    "symbol_rate_gbd",
    "entropy",
    "polarity",
    "rop_dbm",
    "ber",
    "bits",
    "errors",
    "reliable",
    "config_hash",
    "seed",
)


@dataclass(frozen=True)
class FormatPlan:
    constellation: PamConstellation
    distribution: ShapedDistribution
    entropy: float
    net_rate: float
    rolloff: float
    mapping: str

    @property
    def bits_per_symbol(self) -> float:
        return self.constellation.label_bits


def plan_format(cfg: RunConfig) -> FormatPlan:
    """Constellation, distribution and exact net rate of a run."""
    const = pam(cfg.order)
    m = const.label_bits
    rolloff = default_rolloff(cfg.symbol_rate) if cfg.rolloff is None else cfg.rolloff
    if cfg.shaping == "uniform":
        dist = uniform_distribution(const)
        entropy = m
    else:
        entropy = cfg.entropy
        if entropy is None:
            entropy = required_entropy(cfg.net_rate, cfg.symbol_rate, cfg.fec_overhead, m)
        dist = mb_distribution(const, solve_nu(const, cfg.shaping, entropy), cfg.shaping)
    net = achievable_net_rate(entropy, cfg.symbol_rate, cfg.fec_overhead, m)
    mapping = "pam6" if cfg.order == 6 else "gray"
    return FormatPlan(const, dist, float(entropy), net, rolloff, mapping)


def plan_table(cfg: RunConfig, symbol_rates=None) -> list:
    """Rate-plan rows for ``cfg`` at each of ``symbol_rates`` (default: its own)."""
    rows = []
    for rs in symbol_rates or [cfg.symbol_rate]:
        c = cfg.replace(symbol_rate=rs)
        const = pam(c.order)
        m = const.label_bits
        if c.shaping == "uniform":
            h = m
        else:
            h = c.entropy if c.entropy is not None else required_entropy(c.net_rate, rs, c.fec_overhead, m)
        row = {
            "format": c.modulation,
            "shaping": c.shaping,
            "symbol_rate_gbd": rs,
            "entropy": h,
            "ps_overhead": m - h,
            "net_rate_gbps": achievable_net_rate(h, rs, c.fec_overhead, m),
            "nu_cap": None,
            "nu_cup": None,
        }
        if c.order == 8 and 1.0 < h < m:
            row["nu_cap"] = solve_nu(const, "cap", h)
            row["nu_cup"] = solve_nu(const, "cup", h)
        elif h == m:
            row["nu_cap"] = row["nu_cup"] = 0.0
        rows.append(row)
    return rows


def symbol_count(cfg: RunConfig) -> int:
    """``cfg.n_symbols`` rounded up so every rate conversion lands on whole samples."""
    rates = [cfg.tx.dac_rate]
    if not cfg.bypass_channel:
        rates += [cfg.channel.sim_rate, cfg.channel.adc_rate]
    step = reduce(math.lcm, (rate_ratio(r, cfg.symbol_rate).denominator for r in rates), 2 if cfg.order == 6 else 1)
    return -(-cfg.n_symbols // step) * step


@dataclass
class TxData:
    symbols: np.ndarray
    bits: Optional[np.ndarray]
    shaped: DigitalWaveform
    dac: DigitalWaveform
    plan: FormatPlan


def generate_tx(cfg: RunConfig, seed, plan: Optional[FormatPlan] = None) -> TxData:
    """Symbols, their bits (``None`` for shaped formats) and the DAC waveform."""
    plan = plan or plan_format(cfg)
    n = symbol_count(cfg)
    rng = np.random.default_rng(np.random.SeedSequence(_seed_key(seed, 0)))
    if cfg.shaping != "uniform":
        symbols = sample_symbols(plan.distribution, n, rng)
        bits = None
    else:
        nbits = n * 5 // 2 if cfg.order == 6 else n * int(plan.bits_per_symbol)
        prbs_seed = int(rng.integers(1, 2**31))
        bits = prbs_generate(cfg.tx.prbs_degree, prbs_seed, nbits)
        symbols = pam6_encode(bits) if cfg.order == 6 else gray_map(bits, plan.constellation)
    shaper = PulseShaperConfig(plan.rolloff, cfg.symbol_rate, cfg.tx.rrc_span)
    shaped = shape_and_resample(symbols, shaper, cfg.tx.dac_rate)
    dac = dac_quantize(shaped, cfg.tx.dac_bits, cfg.tx.vpp, cfg.tx.clip_mode, cfg.tx.backoff_db)
    return TxData(symbols, bits, shaped, dac, plan)


def _seed_key(seed, *extra):
    base = list(seed) if isinstance(seed, (tuple, list)) else [int(seed)]
    return base + list(extra)


@dataclass
class SimulationResult:
    rop_dbm: float
    seed: object
    errors: int
    bits: int
    entropy: float
    sync: SyncResult
    equalizer: Optional[EqualizerResult] = None
    rx: Optional[DigitalWaveform] = None
    tx: Optional[TxData] = None

    @property
    def ber(self) -> float:
        return self.errors / self.bits


@contextmanager
def _stage(name):
    try:
        yield
    except ImddError as exc:
        if exc.stage is None:
            exc.stage = name
        raise


def simulate(cfg: RunConfig, rop_dbm: float, seed, point_index: int = 0, keep: bool = False) -> SimulationResult:
    """One BER measurement: TX, channel, RX DSP and error counting.

    The TX pattern depends on ``seed`` alone; the channel noise on
    ``(seed, point_index)``. With ``keep`` the received waveform, TX data
    and equalizer internals are attached to the result.
    """
    with _stage("plan"):
        plan = plan_format(cfg)
    with _stage("tx"):
        tx = generate_tx(cfg, seed, plan)
    n = tx.symbols.size
    with _stage("channel"):
        if cfg.bypass_channel:
            rx = tx.dac
        else:
            rx = run_channel(tx.dac, cfg.channel, rop_dbm, np.random.SeedSequence(_seed_key(seed, 1, point_index)))
    with _stage("rx"):
        if cfg.rx.matched_filter:
            rx = matched_filter(rx, cfg.symbol_rate, plan.rolloff)
        sync = synchronize(rx, tx.symbols, cfg.symbol_rate, plan.rolloff, cfg.tx.rrc_span)
        x = resample_1sps(rx, sync.delay, cfg.symbol_rate, n) * sync.polarity
        x = normalize(x, 1.0)
        ntr = min(cfg.equalizer.train_symbols, n - 2)
        if plan.mapping == "pam6":
            ntr -= ntr % 2
        eq = equalize(x, tx.symbols[:ntr], cfg.equalizer, plan.distribution, cfg.rx.decision)
    with _stage("metrics"):
        decided = eq.decisions[ntr:]
        if plan.mapping == "pam6":
            tx_bits = tx.bits[ntr // 2 * 5 :]
        elif tx.bits is not None:
            k = int(plan.bits_per_symbol)
            tx_bits = tx.bits[ntr * k :]
        else:
            tx_bits = gray_demap(tx.symbols[ntr:], plan.constellation)
        res = demap_and_count(decided, tx_bits, plan.mapping, plan.constellation)
    log.debug("rop=%.2f seed=%s ber=%.3e", rop_dbm, seed, res.ber)
    return SimulationResult(
        rop_dbm, seed, res.errors, res.bits, plan.entropy, sync,
        eq if keep else None, rx if keep else None, tx if keep else None,
    )


def _point_job(args):
    cfg, rop, seed, idx = args
    r = simulate(cfg, rop, seed, idx)
    return r.errors, r.bits


@dataclass
class SweepResult:
    config: RunConfig
    curve: BerCurve
    sensitivity: SensitivityResult
    per_seed: list  # (rop, seed, errors, bits)


def _workers(workers):
    if workers is not None:
        return int(workers)
    env = os.environ.get(WORKERS_ENV)
    return int(env) if env else (os.cpu_count() or 1)


def sweep(cfg: RunConfig, workers: Optional[int] = None, threshold: float = HD_FEC_THRESHOLD) -> SweepResult:
    """BER versus ROP over every configured seed, then the sensitivity.

    Errors and bits are pooled across seeds at each ROP. ``workers``
    defaults to ``$IMDDSIM_WORKERS`` or the CPU count; ``1`` runs serially.
    """
    rops = sorted(cfg.rop_dbm)
    if not rops:
        raise ImddError("sweep needs at least one ROP point")
    jobs = [(cfg, rop, seed, i) for i, rop in enumerate(rops) for seed in cfg.seeds]
    nw = _workers(workers)
    if nw > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(nw, len(jobs))) as pool:
            results = list(pool.map(_point_job, jobs))
    else:
        results = [_point_job(j) for j in jobs]
    per_seed = [(j[1], j[2], e, b) for j, (e, b) in zip(jobs, results)]
    return sweep_from_points(cfg, per_seed, threshold)


def sweep_from_points(cfg: RunConfig, per_seed, threshold: float = HD_FEC_THRESHOLD) -> SweepResult:
    """Pool ``(rop, seed, errors, bits)`` records into a curve and its sensitivity."""
    pooled = {}
    for rop, _seed, e, b in per_seed:
        pe, pb = pooled.get(rop, (0, 0))
        pooled[rop] = (pe + e, pb + b)
    plan = plan_format(cfg)
    points = tuple(BerPoint(float(r), e / b, int(b)) for r, (e, b) in sorted(pooled.items()))
    curve = BerCurve(points, cfg.modulation, cfg.symbol_rate, cfg.shaping, plan.entropy)
    return SweepResult(cfg, curve, sensitivity(curve, threshold), list(per_seed))


def curve_csv(result: SweepResult) -> str:
    cfg = result.config
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    h = cfg.config_hash()
    seeds = " ".join(str(s) for s in cfg.seeds)
    for p in result.curve.points:
        w.writerow(
            [cfg.modulation, repr(float(cfg.symbol_rate)), repr(result.curve.entropy), cfg.shaping,
             repr(p.rop_dbm), repr(p.ber), p.bits, p.errors, int(p.reliable), h, seeds]
        )
    return buf.getvalue()


def summary_json(result: SweepResult) -> str:
    cfg, s = result.config, result.sensitivity
    doc = {
        "config_hash": cfg.config_hash(),
        "seeds": list(cfg.seeds),
        "format": cfg.modulation,
        "shaping": cfg.shaping,
        "symbol_rate_gbd": cfg.symbol_rate,
        "entropy": result.curve.entropy,
        "threshold_ber": s.threshold_ber,
        "status": s.status,
        "rop_at_threshold_dbm": s.rop_at_threshold,
        "bracket": [[p.rop_dbm, p.ber] for p in s.bracket],
        "zero_ber_rops": list(s.zero_ber_rops),
        "points": [
            {"rop_dbm": p.rop_dbm, "ber": p.ber, "bits": p.bits, "errors": p.errors, "reliable": p.reliable}
            for p in result.curve.points
        ],
        "per_seed": [{"rop_dbm": r, "seed": sd, "errors": e, "bits": b} for r, sd, e, b in result.per_seed],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
