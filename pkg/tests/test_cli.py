import json

import numpy as np
import pytest

from btcabm import cli, csvio
from btcabm.calibration import CalibrationSet
from btcabm.engine import RECORD_FIELDS


def write_cfg(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


@pytest.fixture
def short_cfg(tmp_path):
    return write_cfg(tmp_path, {"calibration": {"horizon": 60}})


def test_empty_config_gives_defaults():
    cfg = cli.parse_config({}, {})
    assert cfg.calibration == CalibrationSet()
    assert cfg.scenario == "base" and cfg.seeds == list(range(1, 11)) and cfg.runs == 10


def test_merge_order_defaults_file_flags():
    cfg = cli.parse_config({"scenario": "gox", "gamma1_mean": 0.35, "calibration": {"K": 3.0}},
                           {"gamma1_mean": 0.25, "scenario": None})
    assert cfg.scenario == "gox"
    assert cfg.calibration.gamma1_mean == 0.25
    assert cfg.calibration.K == 3.0


def test_flags_override_file_calibration():
    cfg = cli.parse_config({"calibration": {"gamma1_mean": 0.35}}, {"gamma1_mean": 0.25})
    assert cfg.calibration.gamma1_mean == 0.25


@pytest.mark.parametrize("text,expected", [
    ("1..3", [1, 2, 3]), ("4,9", [4, 9]), ("1..2,7", [1, 2, 7]), ("5", [5]),
])
def test_parse_seeds(text, expected):
    assert cli.parse_seeds(text) == expected


@pytest.mark.parametrize("text", ["3..1", "a", "1,,2", "1,1", ""])
def test_parse_seeds_rejects(text):
    with pytest.raises(cli.ConfigError, match="seeds"):
        cli.parse_seeds(text)


def test_seeds_default_to_runs():
    assert cli.parse_config({}, {"runs": 3}).seeds == [1, 2, 3]
    cfg = cli.parse_config({"seeds": [5, 6]}, {})
    assert cfg.seeds == [5, 6] and cfg.runs == 2


@pytest.mark.parametrize("data,path", [
    ({"bogus": 1}, "bogus"),
    ({"calibration": {"nope": 1}}, "calibration.nope"),
    ({"calibration": {"R": {"z": 1}}}, "calibration.R.z"),
    ({"calibration": {"horizon": "long"}}, "calibration.horizon"),
    ({"calibration": {"P_lim_random": 2.0}}, "calibration.P_lim_random"),
    ({"calibration": 5}, "calibration"),
    ({"scenario": "moon"}, "scenario"),
    ({"scenario": 3}, "scenario"),
    ({"runs": 0}, "runs"),
    ({"runs": True}, "runs"),
    ({"seeds": [1, "x"]}, r"seeds\[1\]"),
    ({"seeds": [1, 2], "runs": 3}, "runs"),
    ({"emit_trades": "yes"}, "emit_trades"),
    ({"gamma1_mean": "high"}, "gamma1_mean"),
])
def test_config_errors_name_the_key(data, path):
    with pytest.raises(cli.ConfigError, match=f"^{path}"):
        cli.parse_config(data, {})


def test_main_config_error_exit_code(tmp_path, capsys):
    assert cli.main(["run", "--config", write_cfg(tmp_path, {"calibration": {"K": "x"}})]) == 1
    assert "calibration.K" in capsys.readouterr().err
    assert cli.main(["run", "--config", str(tmp_path / "missing.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["run", "--config", str(bad)]) == 1
    assert cli.main(["run", "--scenario", "moon"]) == 1
    assert cli.main(["run", "--runs", "x"]) == 1
    assert cli.main([]) == 1


def test_run_writes_all_files(tmp_path, short_cfg):
    out = tmp_path / "out"
    code = cli.main(["run", "--config", short_cfg, "--seeds", "1..2", "--out", str(out),
                     "--emit-trades", "--scenario", "gox"])
    assert code == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["effective_config.json", "ensemble.csv", "run_1.csv", "run_2.csv",
                     "stats_1.json", "stats_2.json", "trades_1.csv", "trades_2.csv"]
    eff = json.loads((out / "effective_config.json").read_text())
    assert eff["scenario"] == "gox" and eff["seeds"] == [1, 2]
    assert eff["calibration"]["horizon"] == 60 and eff["calibration"]["gamma1_mean"] == 0.15
    cols = csvio.read_run_csv(out / "run_1.csv")
    assert list(cols) == list(RECORD_FIELDS)
    assert cols["step"].tolist() == list(range(1, 61))
    header = (out / "ensemble.csv").read_text().splitlines()[0].split(",")
    assert header[:3] == ["step", "close_mean", "close_std"]
    stats = json.loads((out / "stats_1.json").read_text())
    assert stats["seed"] == 1 and "adf_statistic" in stats["returns"]


def test_run_without_trades_flag(tmp_path, short_cfg):
    out = tmp_path / "o"
    assert cli.main(["run", "--config", short_cfg, "--runs", "1", "--out", str(out)]) == 0
    assert not list(out.glob("trades_*.csv"))


def test_run_csv_round_trip(tmp_path, short_cfg):
    from btcabm.engine import SimConfig, run

    out = tmp_path / "o"
    cli.main(["run", "--config", short_cfg, "--seeds", "3", "--out", str(out)])
    cfg = cli.parse_config(json.loads(open(short_cfg).read()), {})
    res = run(SimConfig(calibration=cfg.calibration), 3)
    cols = csvio.read_run_csv(out / "run_3.csv")
    for name, col in res.columns().items():
        np.testing.assert_array_equal(cols[name], col)


def test_runs_are_byte_identical(tmp_path, short_cfg):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert cli.main(["run", "--config", short_cfg, "--seeds", "4", "--out", str(d),
                         "--emit-trades"]) == 0
    for name in ("run_4.csv", "trades_4.csv", "ensemble.csv", "stats_4.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_csv_has_plain_decimals(tmp_path, short_cfg):
    out = tmp_path / "o"
    cli.main(["run", "--config", short_cfg, "--seeds", "1", "--out", str(out)])
    text = (out / "run_1.csv").read_text()
    assert ";" not in text and "\r" not in text
    first = text.splitlines()[1].split(",")
    assert first[0] == "1" and "." in first[1]


def test_stats_subcommand(tmp_path, short_cfg):
    out = tmp_path / "o"
    cli.main(["run", "--config", short_cfg, "--seeds", "2", "--out", str(out)])
    real = tmp_path / "real.csv"
    prices = np.exp(np.random.default_rng(0).standard_normal(200).cumsum() * 0.03) * 5
    real.write_text("date,Price\n" + "".join(f"d{k},{float(p)!r}\n" for k, p in enumerate(prices)))
    st_dir = tmp_path / "s"
    code = cli.main(["stats", "--config", short_cfg, "--input", str(out / "run_2.csv"),
                     "--out", str(st_dir), "--real-price-csv", str(real)])
    assert code == 0
    stats = json.loads((st_dir / "stats_2.json").read_text())
    assert stats["steps"] == 60
    real_stats = json.loads((st_dir / "stats_real.json").read_text())
    assert real_stats["returns"]["n_returns"] == 199


def test_tiny_run_reports_undefined_stats(tmp_path):
    cfg = write_cfg(tmp_path, {"calibration": {"horizon": 3}})
    out = tmp_path / "o"
    assert cli.main(["run", "--config", cfg, "--seeds", "1", "--out", str(out)]) == 0
    stats = json.loads((out / "stats_1.json").read_text())
    assert "error" in stats["returns"]


def test_stats_errors(tmp_path):
    assert cli.main(["stats", "--input", str(tmp_path / "none.csv"), "--out", str(tmp_path)]) == 1
    assert cli.main(["stats", "--input", str(tmp_path), "--out", str(tmp_path)]) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n1,2\n")
    assert cli.main(["stats", "--input", "--out", str(tmp_path), "--real-price-csv", str(bad)]) == 1


def test_verify_exit_code_and_verdict(tmp_path, monkeypatch):
    from btcabm import verify

    def fake(seeds, calibration=None, progress=None):
        return [verify.Verdict(1, "a", True, "ok"), verify.Verdict(2, "b", flag["ok"], "x")]

    flag = {"ok": True}
    monkeypatch.setattr(verify, "run_all", fake)
    assert cli.main(["verify", "--runs", "2", "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "verdict.json").read_text())
    assert data["passed"] and data["seeds"] == [1, 2]
    flag["ok"] = False
    assert cli.main(["verify", "--runs", "2", "--out", str(tmp_path)]) == 2
    assert not json.loads((tmp_path / "verdict.json").read_text())["passed"]
