"""Command line: ``btcabm run | stats | verify``.

Configuration is merged as defaults <- JSON file (``--config``) <- flags.
Exit codes: 0 success, 1 configuration error, 2 acceptance failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import csvio, stylized, verify
from .calibration import CalibrationSet
from .engine import SCENARIOS, RunResult, SimConfig, run, summarize

log = logging.getLogger("btcabm")

EXIT_OK, EXIT_CONFIG, EXIT_ACCEPTANCE = 0, 1, 2
SEED_MAX = 2**64 - 1


class ConfigError(Exception):
    """Bad configuration; the message starts with the offending key path."""


@dataclass
class RunConfig:
    calibration: CalibrationSet = field(default_factory=CalibrationSet)
    scenario: str = "base"
    seeds: list[int] = field(default_factory=lambda: list(range(1, 11)))
    runs: int = 10
    output_dir: str = "out"
    emit_trades: bool = False
    real_price_csv: str | None = None
    workers: int = 1

    def sim_config(self, record_trades: bool | None = None) -> SimConfig:
        rec = self.emit_trades if record_trades is None else record_trades
        return SimConfig(calibration=self.calibration, scenario=self.scenario, record_trades=rec)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "gamma1_mean": self.calibration.gamma1_mean,
            "seeds": list(self.seeds),
            "runs": self.runs,
            "output_dir": self.output_dir,
            "emit_trades": self.emit_trades,
            "real_price_csv": self.real_price_csv,
            "workers": self.workers,
            "calibration": self.calibration.to_dict(),
        }


CONFIG_KEYS = ("calibration", "scenario", "gamma1_mean", "seeds", "runs", "output_dir",
               "emit_trades", "real_price_csv", "workers")


def parse_seeds(text: str, path: str = "seeds") -> list[int]:
    """``"1..10"``, ``"3,5,8"`` or a mix such as ``"1..3,10"``."""
    seeds: list[int] = []
    for part in str(text).split(","):
        part = part.strip()
        m = re.fullmatch(r"(\d+)\.\.(\d+)", part)
        if m:
            lo, hi = int(m.group(1)), int(m.group(2))
            if hi < lo:
                raise ConfigError(f"{path}: empty range {part!r}")
            seeds.extend(range(lo, hi + 1))
        elif re.fullmatch(r"\d+", part):
            seeds.append(int(part))
        else:
            raise ConfigError(f"{path}: cannot parse {part!r} (use e.g. 1..10 or 1,2,3)")
    return _check_seeds(seeds, path)


def _check_seeds(seeds, path: str) -> list[int]:
    if not seeds:
        raise ConfigError(f"{path}: no seeds given")
    for k, s in enumerate(seeds):
        if isinstance(s, bool) or not isinstance(s, int):
            raise ConfigError(f"{path}[{k}]: expected int, got {type(s).__name__}")
        if not 0 <= s <= SEED_MAX:
            raise ConfigError(f"{path}[{k}]: seed {s} outside 64-bit unsigned range")
    if len(set(seeds)) != len(seeds):
        raise ConfigError(f"{path}: duplicate seeds")
    return list(seeds)


def _expect(path: str, value, kind):
    if isinstance(value, bool) and kind is not bool:
        raise ConfigError(f"{path}: expected {kind.__name__}, got bool")
    if kind is float and isinstance(value, int):
        return float(value)
    if not isinstance(value, kind):
        raise ConfigError(f"{path}: expected {kind.__name__}, got {type(value).__name__}")
    return value


def load_config_file(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"--config: cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--config: {path} is not valid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"--config: top level of {path} must be an object")
    return data


def parse_config(file_data: dict | None = None, flags: dict | None = None) -> RunConfig:
    """Merge defaults <- ``file_data`` <- ``flags`` into a validated :class:`RunConfig`.

    ``flags`` holds only the options given on the command line (``None``
    values are ignored).
    """
    merged: dict = {}
    for source in (file_data or {}, {k: v for k, v in (flags or {}).items() if v is not None}):
        for key, value in source.items():
            if key not in CONFIG_KEYS:
                raise ConfigError(f"{key}: unknown key")
            if key == "calibration":
                if not isinstance(value, dict):
                    raise ConfigError("calibration: expected object")
                merged.setdefault("calibration", {}).update(value)
            else:
                merged[key] = value

    try:
        calib = CalibrationSet.from_dict(merged.get("calibration", {}))
    except KeyError as exc:
        raise ConfigError(exc.args[0]) from None
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    if "gamma1_mean" in merged:
        calib = dataclasses.replace(calib, gamma1_mean=_expect("gamma1_mean", merged["gamma1_mean"], float))
    problems = calib.problems()
    if problems:
        raise ConfigError("; ".join(f"calibration.{p}" for p in problems))

    cfg = RunConfig(calibration=calib)
    if "scenario" in merged:
        cfg.scenario = _expect("scenario", merged["scenario"], str)
        if cfg.scenario not in SCENARIOS:
            raise ConfigError(f"scenario: must be one of {', '.join(SCENARIOS)}, got {cfg.scenario!r}")
    runs = merged.get("runs")
    if runs is not None:
        runs = _expect("runs", runs, int)
        if runs < 1:
            raise ConfigError("runs: must be >= 1")
    seeds = merged.get("seeds")
    if seeds is not None:
        seeds = parse_seeds(seeds) if isinstance(seeds, str) else _check_seeds(
            _expect("seeds", seeds, list), "seeds")
        if runs is not None and runs != len(seeds):
            raise ConfigError(f"runs: {runs} does not match the {len(seeds)} seeds given")
        cfg.seeds, cfg.runs = seeds, len(seeds)
    elif runs is not None:
        cfg.seeds, cfg.runs = list(range(1, runs + 1)), runs
    if "output_dir" in merged:
        cfg.output_dir = _expect("output_dir", merged["output_dir"], str)
    if "emit_trades" in merged:
        cfg.emit_trades = _expect("emit_trades", merged["emit_trades"], bool)
    if merged.get("real_price_csv") is not None:
        cfg.real_price_csv = _expect("real_price_csv", merged["real_price_csv"], str)
    if "workers" in merged:
        cfg.workers = _expect("workers", merged["workers"], int)
        if cfg.workers < 1:
            raise ConfigError("workers: must be >= 1")
    return cfg


# ---- outputs ----------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if np.isfinite(x) else None
    return x


def write_json(path, data) -> None:
    Path(path).write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def series_stats(columns: dict, p0: float | None = None, scale: float = 100.0) -> dict:
    """Stats block for one run's columns (a saved CSV or a live run)."""
    close = columns["close"]
    prices = np.concatenate([[p0], close]) if p0 is not None else close
    wealth = stylized.wealth_report(columns)
    wealth.pop("per_capita")
    try:
        returns = stylized.return_stats(prices)
    except ValueError as exc:  # too short or flat to define the statistics
        returns = {"error": str(exc)}
    return {
        "steps": int(close.shape[0]),
        "final_price": float(close[-1]),
        "returns": returns,
        "wealth_per_capita_start": wealth["per_capita_start"],
        "wealth_per_capita_end": wealth["per_capita_end"],
        "final_network_hash": float(columns["network_hash"][-1]),
        "final_power_MW_full_scale": float(columns["total_power"][-1]) * scale / 1e6,
    }


def run_stats(result: RunResult) -> dict:
    cal = result.config.calibration
    out = series_stats(result.columns(), cal.p0, cal.scale)
    full = stylized.wealth_report(result.columns(), result.traders, result.initial_ids,
                                  result.initial_wealth)
    out["seed"] = result.seed
    out["scenario"] = result.config.scenario
    out["miner_wealth_hash_correlation"] = full["miner_wealth_hash_correlation"]
    out["gamma_ratio_correlation"] = full.get("gamma_ratio_correlation")
    out["max_relative_error"] = {
        "btc": float(np.max(result.btc_error, initial=0.0)),
        "cash": float(np.max(result.cash_error, initial=0.0)),
    }
    return out


def real_stats(path) -> dict:
    try:
        prices = csvio.read_price_csv(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"real_price_csv: {exc}") from None
    try:
        return {"source": str(path), "returns": stylized.return_stats(prices)}
    except ValueError as exc:
        raise ConfigError(f"real_price_csv: {exc}") from None


def _out_dir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output_dir: cannot create {out}: {exc.strerror}") from None
    return out


# ---- subcommands --------------------------------------------------------------

def cmd_run(cfg: RunConfig) -> int:
    out = _out_dir(cfg.output_dir)
    write_json(out / "effective_config.json", cfg.to_dict())
    sim = cfg.sim_config()
    results = []
    if cfg.workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            pending = ex.map(run, [sim] * len(cfg.seeds), cfg.seeds)
            results = list(pending)
    else:
        for seed in cfg.seeds:
            log.info("running seed %d (%s)", seed, cfg.scenario)
            results.append(run(sim, seed))
    for res in results:
        csvio.write_run_csv(out / f"run_{res.seed}.csv", res.records)
        if cfg.emit_trades:
            csvio.write_trades_csv(out / f"trades_{res.seed}.csv", res.trades)
        write_json(out / f"stats_{res.seed}.json", run_stats(res))
    csvio.write_ensemble_csv(out / "ensemble.csv", summarize(results))
    if cfg.real_price_csv:
        write_json(out / "stats_real.json", real_stats(cfg.real_price_csv))
    log.info("wrote %d runs to %s", len(results), out)
    return EXIT_OK


def cmd_stats(cfg: RunConfig, inputs: list[str]) -> int:
    paths: list[Path] = []
    for item in inputs:
        p = Path(item)
        paths.extend(sorted(p.glob("run_*.csv")) if p.is_dir() else [p])
    if not paths and not cfg.real_price_csv:
        raise ConfigError("input: no run CSVs found")
    out = _out_dir(cfg.output_dir)
    for path in paths:
        try:
            cols = csvio.read_run_csv(path)
            stats = series_stats(cols, cfg.calibration.p0, cfg.calibration.scale)
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"input: {path}: {exc}") from None
        stats["source"] = str(path)
        tag = csvio.seed_from_name(path)
        write_json(out / f"stats_{tag}.json", stats)
        log.info("stats for %s -> %s", path, out / f"stats_{tag}.json")
    if cfg.real_price_csv:
        write_json(out / "stats_real.json", real_stats(cfg.real_price_csv))
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    out = _out_dir(cfg.output_dir)
    write_json(out / "effective_config.json", cfg.to_dict())
    verdicts = verify.run_all(cfg.seeds, cfg.calibration, progress=log.info)
    print(verify.format_report(verdicts), end="")
    write_json(out / "verdict.json", verify.verdict_json(verdicts, cfg.seeds))
    return EXIT_OK if all(v.passed for v in verdicts) else EXIT_ACCEPTANCE


# ---- argument parsing ---------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"arguments: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config file")
    common.add_argument("--scenario", choices=SCENARIOS)
    common.add_argument("--seeds", metavar="LIST", help="e.g. 1..10 or 1,4,9")
    common.add_argument("--runs", type=int, metavar="N")
    common.add_argument("--out", metavar="DIR", dest="output_dir")
    common.add_argument("--gamma1-mean", type=float, metavar="F", dest="gamma1_mean")
    common.add_argument("--emit-trades", action="store_true", default=None, dest="emit_trades")
    common.add_argument("--real-price-csv", metavar="PATH", dest="real_price_csv")
    common.add_argument("--workers", type=int, metavar="N")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="btcabm", description="Bitcoin market and mining simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("run", parents=[common], help="simulate and write CSVs")
    st = sub.add_parser("stats", parents=[common], help="statistics of saved run CSVs")
    st.add_argument("--input", nargs="+", default=[], metavar="PATH",
                    help="run CSVs or directories holding run_*.csv")
    sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    return parser


FLAG_KEYS = ("scenario", "seeds", "runs", "output_dir", "gamma1_mean", "emit_trades",
             "real_price_csv", "workers")


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        file_data = load_config_file(args.config) if args.config else None
        cfg = parse_config(file_data, {k: getattr(args, k) for k in FLAG_KEYS})
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "stats":
            return cmd_stats(cfg, args.input)
        return cmd_verify(cfg)
    except ConfigError as exc:
        print(f"btcabm: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
