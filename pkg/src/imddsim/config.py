"""
Run configuration and its TOML representation.

Schema (version 1)::

    schema_version = 1
    modulation = "pam8"          # pam4 | pam6 | pam8
    shaping = "cap"              # uniform | cap | cup (shaping needs pam8)
    symbol_rate = 90.0           # GBd
    net_rate = 200.0             # Gbit/s, target used to derive the entropy
    fec_overhead = 0.07
    entropy = "auto"             # or an explicit bits/symbol override
    rolloff = "auto"             # or a number in [0, 1]
    n_symbols = 65536            # rounded up so every rate conversion is exact
    seeds = [1, 2, 3]
    rop_dbm = [-20.0, -18.0]
    out_dir = "out"
    bypass_channel = false       # digital back-to-back

    [tx]       dac_rate, dac_bits, vpp, clip_mode, backoff_db, rrc_span, prbs_degree
    [rx]       matched_filter, decision
    [channel]  see ChannelConfig; "off" disables a filter or noise source
    [equalizer] mem1, mem2, mem3, orders, ridge, mu, train_symbols
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import tomli_w

from .channel import ChannelConfig
from .errors import ConfigError
from .rxdsp import EqualizerConfig

__all__ = ["SCHEMA_VERSION", "TxConfig", "RxConfig", "RunConfig", "load_config", "dumps_config", "parse_config"]

SCHEMA_VERSION = 1
OFF = "off"
AUTO = "auto"


@dataclass(frozen=True)
class TxConfig:
    dac_rate: float = 120.0
    dac_bits: int = 8
    vpp: float = 0.6
    clip_mode: str = "peak"
    backoff_db: float = 0.0
    rrc_span: int = 64
    prbs_degree: int = 31

    def __post_init__(self):
        if self.clip_mode not in ("peak", "rms_backoff"):
            raise ConfigError(f"clip_mode must be 'peak' or 'rms_backoff', got {self.clip_mode!r}")


@dataclass(frozen=True)
class RxConfig:
    matched_filter: bool = True
    decision: str = "nearest"

    def __post_init__(self):
        if self.decision not in ("nearest", "map"):
            raise ConfigError(f"decision must be 'nearest' or 'map', got {self.decision!r}")


@dataclass(frozen=True)
class RunConfig:
    modulation: str = "pam8"
    shaping: str = "uniform"
    symbol_rate: float = 72.0
    net_rate: float = 200.0
    fec_overhead: float = 0.07
    entropy: Optional[float] = None
    rolloff: Optional[float] = None
    n_symbols: int = 1 << 16
    seeds: tuple = (1,)
    rop_dbm: tuple = ()
    out_dir: str = "out"
    bypass_channel: bool = False
    tx: TxConfig = field(default_factory=TxConfig)
    rx: RxConfig = field(default_factory=RxConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    equalizer: EqualizerConfig = field(default_factory=EqualizerConfig)
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        for name in ("symbol_rate", "net_rate", "fec_overhead"):
            object.__setattr__(self, name, float(getattr(self, name)))
        for name in ("entropy", "rolloff"):
            if getattr(self, name) is not None:
                object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "rop_dbm", tuple(float(r) for r in self.rop_dbm))
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}; this build reads {SCHEMA_VERSION}")
        if self.modulation not in ("pam4", "pam6", "pam8"):
            raise ConfigError(f"modulation must be pam4, pam6 or pam8, got {self.modulation!r}")
        if self.shaping not in ("uniform", "cap", "cup"):
            raise ConfigError(f"shaping must be uniform, cap or cup, got {self.shaping!r}")
        if self.shaping != "uniform" and self.modulation != "pam8":
            raise ConfigError("probabilistic shaping is only defined for pam8")
        if self.symbol_rate <= 0 or self.n_symbols <= 0:
            raise ConfigError("symbol_rate and n_symbols must be positive")
        if not self.seeds:
            raise ConfigError("at least one seed is required")

    @property
    def order(self) -> int:
        return int(self.modulation[3:])

    def replace(self, **kw) -> "RunConfig":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        d = {"schema_version": self.schema_version}
        for f in fields(self):
            if f.name in ("tx", "rx", "channel", "equalizer", "schema_version"):
                continue
            v = getattr(self, f.name)
            if f.name in ("entropy", "rolloff"):
                v = AUTO if v is None else v
            elif isinstance(v, tuple):
                v = list(v)
            d[f.name] = v
        for name in ("tx", "rx", "channel", "equalizer"):
            sub = getattr(self, name)
            d[name] = {
                f.name: (OFF if getattr(sub, f.name) is None else _plain(getattr(sub, f.name))) for f in fields(sub)
            }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        kw = {}
        subs = {"tx": TxConfig, "rx": RxConfig, "channel": ChannelConfig, "equalizer": EqualizerConfig}
        for name, typ in subs.items():
            raw = d.pop(name, {}) or {}
            known = {f.name for f in fields(typ)}
            unknown = set(raw) - known
            if unknown:
                raise ConfigError(f"unknown [{name}] keys: {sorted(unknown)}")
            kw[name] = typ(**{k: (None if v == OFF else v) for k, v in raw.items()})
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
        for k in ("entropy", "rolloff"):
            if d.get(k) == AUTO:
                d[k] = None
        try:
            return cls(**d, **kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _plain(v):
    return list(v) if isinstance(v, tuple) else v


def dumps_config(cfg: RunConfig) -> str:
    return tomli_w.dumps(cfg.to_dict())


def parse_config(text: str) -> RunConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return RunConfig.from_dict(raw)


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())


def apply_overrides(cfg: RunConfig, assignments) -> RunConfig:
    """Apply ``key=value`` overrides; dotted keys address sub-tables.

    Values are parsed as TOML literals, falling back to bare strings.
    """
    d = cfg.to_dict()
    for item in assignments:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, text = (s.strip() for s in item.split("=", 1))
        try:
            value = tomllib.loads(f"v = {text}")["v"]
        except tomllib.TOMLDecodeError:
            value = text
        node = d
        parts = key.split(".")
        for p in parts[:-1]:
            if not isinstance(node.get(p), dict):
                raise ConfigError(f"unknown config table {p!r} in override {key!r}")
            node = node[p]
        node[parts[-1]] = value
    return RunConfig.from_dict(d)
