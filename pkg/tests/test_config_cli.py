import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imddsim import waveio
from imddsim.channel import ChannelConfig
from imddsim.cli import main
from imddsim.config import RunConfig, apply_overrides, dumps_config, parse_config
from imddsim.errors import ConfigError
from imddsim.rxdsp import EqualizerConfig
from imddsim.runner import curve_csv, simulate, summary_json, sweep, sweep_from_points, symbol_count

SMALL_EQ = EqualizerConfig(mem1=21, mem2=5, mem3=3, train_symbols=1024)


def small_cfg(**kw):
    base = dict(modulation="pam4", symbol_rate=60.0, n_symbols=4096, equalizer=SMALL_EQ, rop_dbm=(-18.0, -14.0))
    base.update(kw)
    return RunConfig(**base)


configs = st.builds(
    RunConfig,
    modulation=st.just("pam8"),
    shaping=st.sampled_from(["uniform", "cap", "cup"]),
    symbol_rate=st.floats(50, 100),
    entropy=st.one_of(st.none(), st.floats(1.5, 2.9)),
    rolloff=st.one_of(st.none(), st.floats(0, 1)),
    seeds=st.lists(st.integers(0, 2**31), min_size=1, max_size=4),
    rop_dbm=st.lists(st.floats(-40, 0), max_size=5),
    channel=st.builds(ChannelConfig, mzm_bw=st.one_of(st.none(), st.floats(1, 100)), amp_nf_db=st.one_of(st.none(), st.floats(3, 9))),
)


@settings(max_examples=50, deadline=None)
@given(cfg=configs)
def test_config_round_trip(cfg):
    again = parse_config(dumps_config(cfg))
    assert again == cfg
    assert again.config_hash() == cfg.config_hash()


def test_config_defaults_and_schema():
    text = dumps_config(RunConfig())
    assert "schema_version = 1" in text
    with pytest.raises(ConfigError):
        parse_config(text.replace("schema_version = 1", "schema_version = 2"))
    with pytest.raises(ConfigError):
        parse_config("modulation = \"pam8\"\nbogus = 3\n")
    with pytest.raises(ConfigError):
        parse_config("modulation = [")


def test_shaping_requires_pam8():
    with pytest.raises(ConfigError):
        RunConfig(modulation="pam4", shaping="cap")


def test_hash_tracks_content():
    a = RunConfig()
    assert a.config_hash() == RunConfig().config_hash()
    assert a.config_hash() != RunConfig(symbol_rate=73).config_hash()
    assert RunConfig(symbol_rate=90).config_hash() == RunConfig(symbol_rate=90.0).config_hash()


def test_overrides():
    cfg = apply_overrides(RunConfig(), ["shaping=cup", "channel.v_pi=5", "channel.mzm_bw=off", "seeds=[4, 5]"])
    assert cfg.shaping == "cup"
    assert cfg.channel.v_pi == 5.0
    assert cfg.channel.mzm_bw is None
    assert cfg.seeds == (4, 5)
    with pytest.raises(ConfigError):
        apply_overrides(RunConfig(), ["nothing.x=1"])
    with pytest.raises(ConfigError):
        apply_overrides(RunConfig(), ["novalue"])


def test_symbol_count_makes_rates_integral():
    cfg = RunConfig(symbol_rate=83.0, modulation="pam6", n_symbols=1000)
    n = symbol_count(cfg)
    assert n >= 1000 and n % 2 == 0
    for rate in (cfg.tx.dac_rate, cfg.channel.sim_rate, cfg.channel.adc_rate):
        assert (n * rate / cfg.symbol_rate) == pytest.approx(round(n * rate / cfg.symbol_rate), abs=1e-9)


def test_waveio_round_trip(tmp_path):
    x = np.random.default_rng(0).standard_normal(1001)
    p = waveio.write_samples(tmp_path / "a.bin", x, 256.0, {"seed": 3})
    y, rate = waveio.read_samples(p)
    assert np.array_equal(x, y) and rate == 256.0
    raw = p.read_bytes()
    assert raw[:4] == b"IMDR" and len(raw) == 16 + 8 * 1001
    meta = waveio.read_meta(p)
    assert meta["seed"] == "3" and meta["byte_order"] == "little"
    z = x + 1j * x[::-1]
    waveio.write_samples(tmp_path / "c.bin", z, 1.0)
    assert np.array_equal(waveio.read_samples(tmp_path / "c.bin")[0], z)
    (tmp_path / "bad.bin").write_bytes(b"XXXX" + bytes(12))
    with pytest.raises(ValueError):
        waveio.read_samples(tmp_path / "bad.bin")


def test_simulate_noiseless_wideband_is_error_free():
    ch = ChannelConfig(amp_nf_db=None, thermal_psd=0.0, awg_bw=None, ea_bw=None, mzm_bw=None,
                       opt_filter_bw=None, pd_bw=None, adc_bw=None, adc_bits=12, ea_gain_db=12.0)
    # without the filters the full DAC swing reaches the MZM, hence the lower EA gain
    cfg = small_cfg(channel=ch)
    r = simulate(cfg, -15.0, 1)
    assert r.errors == 0 and r.bits > 0


def test_simulate_deterministic():
    cfg = small_cfg()
    a, b = simulate(cfg, -16.0, 3), simulate(cfg, -16.0, 3)
    assert (a.errors, a.bits) == (b.errors, b.bits)


def test_synthetic_sweep_matches_metrics():
    cfg = small_cfg(rop_dbm=(-12.0, -10.0))
    pts = [(-12.0, 1, 10_000, 10**6), (-10.0, 1, 100, 10**6)]
    res = sweep_from_points(cfg, pts)
    assert res.sensitivity.rop_at_threshold == pytest.approx(-11.58, abs=0.01)
    rows = list(csv.DictReader(io.StringIO(curve_csv(res))))
    assert [r["rop_dbm"] for r in rows] == ["-12.0", "-10.0"]
    assert all(r["config_hash"] == cfg.config_hash() and r["seed"] == "1" for r in rows)
    doc = json.loads(summary_json(res))
    assert doc["status"] == "reached" and doc["config_hash"] == cfg.config_hash()


def test_pooling_across_seeds():
    cfg = small_cfg(seeds=(1, 2), rop_dbm=(-12.0,))
    res = sweep_from_points(cfg, [(-12.0, 1, 30, 1000), (-12.0, 2, 10, 3000)])
    p = res.curve.points[0]
    assert p.bits == 4000 and p.ber == pytest.approx(0.01)
    assert res.sensitivity.status == "not reached"


def test_sweep_serial_equals_parallel():
    cfg = small_cfg(seeds=(1, 2))
    a = sweep(cfg, workers=1)
    b = sweep(cfg, workers=2)
    assert curve_csv(a) == curve_csv(b)
    assert summary_json(a) == summary_json(b)


def test_cli_plan_rates(capsys):
    assert main(["plan", "--set", "shaping=cap", "--rates", "75,80,85,90"]) == 0
    out = capsys.readouterr().out
    rows = list(csv.DictReader(line for line in out.splitlines() if not line.startswith("#")))
    ent = [float(r["entropy"]) for r in rows]
    assert ent == pytest.approx([2.8629, 2.6963, 2.5492, 2.4185], abs=5e-5)
    assert float(rows[-1]["ps_overhead"]) == pytest.approx(0.5815, abs=5e-5)


def test_cli_plan_uniform_pam4(capsys):
    assert main(["plan", "--set", "modulation=pam4", "--set", "symbol_rate=107"]) == 0
    rows = list(csv.DictReader(ln for ln in capsys.readouterr().out.splitlines() if not ln.startswith("#")))
    assert float(rows[0]["net_rate_gbps"]) == pytest.approx(200.0, abs=0.01)


def test_cli_exit_codes(capsys, tmp_path):
    assert main(["plan", "--set", "modulation=pam4", "--set", "shaping=cap"]) == 2
    assert main(["plan", "--set", "shaping=cap", "--set", "net_rate=400"]) == 3
    assert "InfeasiblePlanError" in capsys.readouterr().err
    assert main(["simulate", "--set", "symbol_rate=60", "--set", "modulation=pam4"]) == 2  # no ROP


def test_cli_simulate_dump_and_eye_hist(tmp_path, capsys):
    cfg_path = tmp_path / "run.toml"
    cfg_path.write_text(dumps_config(small_cfg()))
    out = tmp_path / "o"
    assert main(["simulate", "--config", str(cfg_path), "--rop", "-14", "--seed", "2", "--out", str(out), "--dump"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["seed"] == 2 and rec["bits"] > 0
    for name in ("rx.bin", "weights.bin", "eye.csv", "hist.csv", "distribution.txt", "simulate.json"):
        assert (out / name).exists()
    w, _ = waveio.read_samples(out / "weights.bin")
    assert w.size == SMALL_EQ.n_features
    first = (out / "eye.csv").read_text()
    assert main(["eye", "--config", str(cfg_path), "--rop", "-14", "--seed", "2", "--out", str(tmp_path / "e")]) == 0
    assert (tmp_path / "e" / "eye.csv").read_text() == first
    assert main(["hist", "--config", str(cfg_path), "--rop", "-14", "--seed", "2", "--out", str(tmp_path / "h")]) == 0
    text = (tmp_path / "h" / "hist.csv").read_text()
    assert text.startswith("# config_hash")
    assert text == (out / "hist.csv").read_text()


def test_cli_sweep_files(tmp_path, capsys):
    out = tmp_path / "s"
    argv = ["sweep", "--set", "modulation=pam4", "--set", "symbol_rate=60", "--set", "n_symbols=4096",
            "--set", "equalizer.mem1=21", "--set", "equalizer.mem2=5", "--set", "equalizer.mem3=3",
            "--set", "equalizer.train_symbols=1024", "--rop=-18,-14", "--workers", "1", "--out", str(out)]
    assert main(argv) == 0
    assert "sensitivity" in capsys.readouterr().out
    cfg = parse_config((out / "config.toml").read_text())
    doc = json.loads((out / "summary.json").read_text())
    assert doc["config_hash"] == cfg.config_hash()
    assert len(doc["points"]) == 2
