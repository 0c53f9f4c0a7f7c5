"""
Command line front end.

::

    imddsim plan     [--rates 75,80,85,90]
    imddsim simulate --rop -16 [--seed 1] [--dump]
    imddsim sweep    [--rop=-24,-20,-16] [--workers 4]
    imddsim eye      --rop -16 [--point rx|tx]
    imddsim hist     --rop -16 [--point eq|tx]

Every subcommand takes ``--config FILE`` and any number of
``--set key=value`` overrides (dotted keys for sub-tables, e.g.
``--set channel.v_pi=5``). Files go to ``--out`` (default: the config's
``out_dir``). Exit status is 0 on success, otherwise the ``exit_code`` of
the error class raised (see :mod:`imddsim.errors`).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from . import waveio
from .config import RunConfig, apply_overrides, dumps_config, load_config
from .errors import ConfigError, ImddError
from .metrics import eye_accumulate, log_histogram
from .runner import curve_csv, plan_table, simulate, summary_json, sweep
from .shaping import format_distribution

__all__ = ["main", "build_parser"]

log = logging.getLogger("imddsim")

PLAN_FIELDS = ("format", "shaping", "symbol_rate_gbd", "entropy", "ps_overhead", "net_rate_gbps", "nu_cap", "nu_cup")


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML run configuration")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
    common.add_argument("--seed", type=int, help="master seed (replaces the configured seed list)")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--dump", action="store_true", help="write waveform, weight, eye and histogram dumps")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="imddsim", description="Shaped PAM IM/DD link simulator")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("plan", parents=[common], help="rate and entropy table")
    sp.add_argument("--rates", type=_floats, help="symbol rates in GBd (default: the configured one)")

    sp = sub.add_parser("simulate", parents=[common], help="one BER point")
    sp.add_argument("--rop", type=float, help="received optical power, dBm")

    sp = sub.add_parser("sweep", parents=[common], help="BER versus ROP and sensitivity")
    sp.add_argument("--rop", type=_floats, help="ROP list in dBm, comma separated")
    sp.add_argument("--workers", type=int, help="worker processes (default $IMDDSIM_WORKERS or CPU count)")

    sp = sub.add_parser("eye", parents=[common], help="eye diagram grid as CSV")
    sp.add_argument("--rop", type=float)
    sp.add_argument("--point", choices=("rx", "tx"), default="rx")
    sp.add_argument("--amp-bins", type=int, default=128)

    sp = sub.add_parser("hist", parents=[common], help="symbol histogram as CSV")
    sp.add_argument("--rop", type=float)
    sp.add_argument("--point", choices=("eq", "tx"), default="eq")
    sp.add_argument("--bins", type=int, default=128)
    return p


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.overrides:
        cfg = apply_overrides(cfg, args.overrides)
    if args.seed is not None:
        cfg = cfg.replace(seeds=(args.seed,))
    return cfg


def _out_dir(args, cfg) -> Path:
    out = Path(args.out) if args.out else Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _single_rop(args, cfg) -> float:
    if args.rop is not None:
        return args.rop
    if len(cfg.rop_dbm) == 1 or cfg.bypass_channel and cfg.rop_dbm:
        return cfg.rop_dbm[0]
    if cfg.bypass_channel:
        return 0.0
    raise ConfigError("give --rop (or configure exactly one rop_dbm value)")


def _provenance(cfg, **extra) -> str:
    items = {"config_hash": cfg.config_hash(), "seed": " ".join(map(str, cfg.seeds)), **extra}
    return "".join(f"# {k} = {v}\n" for k, v in items.items())


def eye_csv(eye, header: str = "") -> str:
    """Eye grid: one row per amplitude bin, one column per time bin."""
    buf = io.StringIO()
    buf.write(header)
    w = csv.writer(buf, lineterminator="\n")
    tc = 0.5 * (eye.time_edges[1:] + eye.time_edges[:-1])
    ac = 0.5 * (eye.amp_edges[1:] + eye.amp_edges[:-1])
    w.writerow(["amplitude"] + [repr(float(t)) for t in tc])
    for i, a in enumerate(ac):
        w.writerow([repr(float(a))] + eye.counts[:, i].tolist())
    return buf.getvalue()


def hist_csv(hist, header: str = "") -> str:
    buf = io.StringIO()
    buf.write(header)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bin_lo", "bin_hi", "center", "count", "log10_count_plus_1"])
    for lo, hi, c, n, lg in zip(hist.edges[:-1], hist.edges[1:], hist.centers, hist.counts, hist.log_counts):
        w.writerow([repr(float(lo)), repr(float(hi)), repr(float(c)), int(n), repr(float(lg))])
    return buf.getvalue()


def _cell(v):
    if v is None:
        return ""
    return v if isinstance(v, str) else repr(float(v))


def cmd_plan(cfg: RunConfig, rates=None) -> str:
    """Rate table as CSV text."""
    buf = io.StringIO()
    buf.write(_provenance(cfg))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PLAN_FIELDS)
    for row in plan_table(cfg, rates):
        w.writerow([_cell(row[k]) for k in PLAN_FIELDS])
    return buf.getvalue()


def _eye_of(res, cfg, point, amp_bins):
    wf = res.tx.dac if point == "tx" else res.rx
    sps = wf.sample_rate / cfg.symbol_rate
    x = wf.samples if point == "tx" else wf.samples * res.sync.polarity
    return eye_accumulate(x, sps, amp_bins=amp_bins)


def _hist_of(res, point, bins):
    if point == "tx":
        return log_histogram(res.tx.dac.samples, bins)
    return log_histogram(res.equalizer.outputs, bins)


def _write_dumps(out: Path, res, cfg, rop) -> None:
    meta = {"config_hash": cfg.config_hash(), "seed": res.seed, "rop_dbm": repr(float(rop))}
    waveio.write_samples(out / "rx.bin", res.rx.samples, res.rx.sample_rate, meta)
    waveio.write_samples(out / "tx_dac.bin", res.tx.dac.samples, res.tx.dac.sample_rate, meta)
    waveio.write_samples(out / "weights.bin", res.equalizer.weights, cfg.symbol_rate, meta)
    waveio.write_samples(out / "weights_initial.bin", res.equalizer.initial_weights, cfg.symbol_rate, meta)
    head = _provenance(cfg, rop_dbm=rop)
    (out / "eye.csv").write_text(eye_csv(_eye_of(res, cfg, "rx", 128), head))
    (out / "hist.csv").write_text(hist_csv(_hist_of(res, "eq", 128), head))
    (out / "distribution.txt").write_text(head + format_distribution(res.tx.plan.distribution))


def _record(res, cfg) -> dict:
    return {
        "config_hash": cfg.config_hash(),
        "seed": res.seed,
        "format": cfg.modulation,
        "shaping": cfg.shaping,
        "symbol_rate_gbd": cfg.symbol_rate,
        "entropy": res.entropy,
        "rop_dbm": res.rop_dbm,
        "ber": res.ber,
        "bits": res.bits,
        "errors": res.errors,
        "sync_delay": res.sync.delay,
        "sync_polarity": res.sync.polarity,
    }


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    cfg = _load(args)

    if args.command == "plan":
        text = cmd_plan(cfg, args.rates)
        sys.stdout.write(text)
        if args.out:
            (_out_dir(args, cfg) / "plan.csv").write_text(text)
        return 0

    if args.command == "sweep":
        if args.rop:
            cfg = cfg.replace(rop_dbm=tuple(args.rop))
        out = _out_dir(args, cfg)
        result = sweep(cfg, workers=args.workers)
        (out / "config.toml").write_text(dumps_config(cfg))
        (out / "curve.csv").write_text(curve_csv(result))
        (out / "summary.json").write_text(summary_json(result))
        s = result.sensitivity
        where = f"{s.rop_at_threshold:.3f} dBm" if s.reached else s.status
        print(f"sensitivity at BER {s.threshold_ber:g}: {where}  ({out})")
        return 0

    seed = cfg.seeds[0]
    rop = _single_rop(args, cfg)
    need_keep = args.dump or args.command in ("eye", "hist")
    res = simulate(cfg, rop, seed, keep=need_keep)
    out = _out_dir(args, cfg) if (args.out or args.dump or args.command in ("eye", "hist")) else None

    if args.command == "simulate":
        rec = json.dumps(_record(res, cfg), sort_keys=True)
        print(rec)
        if out is not None:
            (out / "simulate.json").write_text(rec + "\n")
    elif args.command == "eye":
        (out / "eye.csv").write_text(eye_csv(_eye_of(res, cfg, args.point, args.amp_bins), _provenance(cfg, rop_dbm=rop)))
        print(out / "eye.csv")
    elif args.command == "hist":
        (out / "hist.csv").write_text(hist_csv(_hist_of(res, args.point, args.bins), _provenance(cfg, rop_dbm=rop)))
        print(out / "hist.csv")
    if args.dump:
        _write_dumps(out, res, cfg, rop)
    return 0


def main(argv=None) -> int:
    try:
        return run(argv)
    except ImddError as exc:
        stage = f"[{exc.stage}] " if exc.stage else ""
        print(f"imddsim: {stage}{type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, OSError) as exc:
        print(f"imddsim: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, ValueError) else 1
