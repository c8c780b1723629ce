"""Command-line front end.

Every command writes its data files into ``--out`` and then a
``manifest.json`` listing them.  Settings resolve in the order: command-line
flag, then the ``[run]`` table of the config file, then built-in defaults.
The ``[market]`` table holds the five market parameters; when ``--config`` is
omitted the bundled defaults are used.

Exit codes: 0 ok, 2 usage or config error, 3 regime violation or infeasible
problem, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .demand import ConfigurationError, MarketParams, RegimeError, read_config_file
from .game import EpisodeConfig, fit_convergence_rate, martingale_check, run_batch, run_episode, write_batch_csv
from .infodesign import concavify, confounding_curve, metrics_table, optimal_signal, truthful_signal, uninformative_signal
from .promotion import InfeasibleError, solve_policy_curve

DEFAULT_MARKET = {"sellerQuality": 0.6, "rivalQuality": 0.2, "phiLow": 0.2, "phiHigh": 0.8, "prior": 0.5}
DEFAULT_RUN = {
    "mode": None,
    "signal": "optimal",
    "grid": 501,
    "mu0": None,
    "horizon": 2000,
    "episodes": 2000,
    "seed": None,
    "trace": False,
}
SIMULATE_POLICIES = ("myopic", "confounding", "baseline")
SIGNALS = ("optimal", "truthful", "uninformative")


class UsageError(Exception):
    """Bad flags or settings; maps to exit code 2."""


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="confounding", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, help="TOML or JSON config file")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--grid", type=int, help="belief grid size (default 501)")

    p = sub.add_parser("solve", help="solve a policy curve on the belief grid")
    common(p)
    p.add_argument("--mode", choices=("myopic", "confounding", "observable", "baseline"))

    p = sub.add_parser("metrics", help="W^C, its envelope, W^T, W^max, RG and CCS on the grid")
    common(p)

    p = sub.add_parser("signal", help="optimal binary signal at a prior")
    common(p)
    p.add_argument("--mu0", type=float)

    for name, help_text in (
        ("simulate", "Monte Carlo batch of the dynamic game"),
        ("convergence", "belief path and decay rate under the myopic curve without a signal"),
    ):
        p = sub.add_parser(name, help=help_text)
        common(p)
        p.add_argument("--mu0", type=float)
        p.add_argument("--horizon", type=int)
        p.add_argument("--episodes", type=int)
        p.add_argument("--seed", type=int)
        if name == "simulate":
            p.add_argument("--mode", choices=SIMULATE_POLICIES, help="policy curve (default confounding)")
            p.add_argument("--signal", choices=SIGNALS)
            p.add_argument("--trace", action="store_true", help="also write episode 0 as JSON lines")
    return parser


def load_settings(args: argparse.Namespace) -> tuple[MarketParams, dict]:
    market, run = dict(DEFAULT_MARKET), dict(DEFAULT_RUN)
    if args.config is not None:
        data = read_config_file(args.config)
        unknown = set(data) - {"market", "run"}
        if unknown:
            raise ConfigurationError(f"unknown config tables: {sorted(unknown)}")
        if "market" in data:
            market = data["market"]
        file_run = data.get("run", {})
        bad = set(file_run) - set(DEFAULT_RUN)
        if bad:
            raise ConfigurationError(f"unknown [run] keys: {sorted(bad)}")
        run.update(file_run)
        run["seed_from_file"] = "seed" in file_run
    for key in DEFAULT_RUN:
        value = getattr(args, key, None)
        if value is not None and value is not False:
            run[key] = value
    run["seed_from_flag"] = getattr(args, "seed", None) is not None
    params = MarketParams.from_mapping(market)
    if run["mu0"] is not None:
        params = params.replace(prior=float(run["mu0"]))
    if not isinstance(run["grid"], int) or run["grid"] < 3:
        raise UsageError("grid must be an integer of at least 3")
    return params, run


def _seed(run: dict, command: str) -> int:
    if os.environ.get("CI") and not run["seed_from_flag"]:
        raise UsageError(f"{command} needs --seed when CI is set")
    seed = 0 if run["seed"] is None else run["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise UsageError("seed must be an unsigned 64-bit integer")
    return seed


def _positive(run: dict, key: str) -> int:
    value = run[key]
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise UsageError(f"{key} must be a positive integer, got {value!r}")
    return value


def _build_signal(kind: str, params: MarketParams, grid: int):
    if kind == "truthful":
        return truthful_signal()
    if kind == "uninformative":
        return uninformative_signal(params.prior)
    return optimal_signal(confounding_curve(params, grid), params.prior)


def cmd_solve(params, run, out: Path) -> tuple[list[Path], dict]:
    mode = run["mode"] or "confounding"
    if mode not in ("myopic", "confounding", "observable", "baseline"):
        raise UsageError(f"unknown mode {mode!r}")
    curve = solve_policy_curve(params, mode, run["grid"])
    path = out / f"policy_curve_{mode}.csv"
    curve.to_csv(path)
    return [path], {"mode": mode}


def cmd_metrics(params, run, out: Path):
    table = metrics_table(params, run["grid"])
    path = out / "metrics.csv"
    table.to_csv(path)
    return [path], {}


def cmd_signal(params, run, out: Path):
    wc = confounding_curve(params, run["grid"])
    co = concavify(wc)
    mu0 = params.prior
    sig = optimal_signal(wc, mu0, co)
    data = {
        "mu0": mu0,
        "probLowGivenLow": sig.prob_low_given_low,
        "probHighGivenLow": sig.prob_high_given_low,
        "probLowGivenHigh": sig.prob_low_given_high,
        "probHighGivenHigh": sig.prob_high_given_high,
        "muPrime": sig.mu_prime,
        "muDoublePrime": sig.mu_double_prime,
        "probMessageLow": sig.prob_message_low(mu0),
        "envelopeValue": float(np.interp(mu0, co.mu_grid, co.values)),
        "signalValue": sig.expected_value(wc, mu0),
    }
    path = out / "signal.json"
    path.write_text(json.dumps(data, indent=2) + "\n")
    return [path], {}


def cmd_simulate(params, run, out: Path):
    mode = run["mode"] or "confounding"
    if mode not in SIMULATE_POLICIES:
        raise UsageError(f"simulate supports policies {SIMULATE_POLICIES}, got {mode!r}")
    kind = run["signal"]
    if kind not in SIGNALS:
        raise UsageError(f"unknown signal {kind!r}")
    horizon, episodes = _positive(run, "horizon"), _positive(run, "episodes")
    seed = _seed(run, "simulate")
    curve = solve_policy_curve(params, mode, run["grid"])
    config = EpisodeConfig(params, curve, _build_signal(kind, params, run["grid"]), horizon, seed)
    summary = run_batch(config, episodes)
    path = out / "batch_summary.csv"
    write_batch_csv(
        path, [(mode, kind, params.prior, horizon, episodes, summary.mean_surplus, summary.stderr)]
    )
    outputs = [path]
    if run["trace"]:
        trace_path = out / "trace.jsonl"
        run_episode(config, 0).to_jsonl(trace_path)
        outputs.append(trace_path)
    return outputs, {"mode": mode, "signal": kind, "horizon": horizon, "episodes": episodes, "seed": seed}


def cmd_convergence(params, run, out: Path):
    horizon, episodes = _positive(run, "horizon"), _positive(run, "episodes")
    seed = _seed(run, "convergence")
    curve = solve_policy_curve(params, "myopic", run["grid"])
    config = EpisodeConfig(params, curve, uninformative_signal(params.prior), horizon, seed)
    summary = run_batch(config, episodes)
    path_csv = out / "belief_path.csv"
    checks = martingale_check(summary, params.prior)
    with open(path_csv, "w") as fh:
        fh.write("period,meanMuLow,meanMuHigh,meanMu,stderrMu,martingaleOk\n")
        for t in range(horizon + 1):
            cols = (summary.belief_path_low, summary.belief_path_high, summary.belief_mean, summary.belief_stderr)
            fh.write(",".join([str(t + 1), *(repr(float(c[t])) for c in cols), str(int(checks[t]))]) + "\n")
    rate, r2 = fit_convergence_rate(summary.belief_path_low)
    fit_path = out / "convergence.json"
    fit_path.write_text(
        json.dumps({"rate": rate, "rSquared": r2, "martingaleAllOk": bool(checks.all())}, indent=2) + "\n"
    )
    return [path_csv, fit_path], {"horizon": horizon, "episodes": episodes, "seed": seed}


COMMANDS = {
    "solve": cmd_solve,
    "metrics": cmd_metrics,
    "signal": cmd_signal,
    "simulate": cmd_simulate,
    "convergence": cmd_convergence,
}


def _write_manifest(out: Path, command, params, run, outputs, extra, started, seconds) -> Path:
    manifest = {
        "command": command,
        "version": __version__,
        "market": params.to_mapping(),
        "grid": run["grid"],
        "settings": extra,
        "outputs": [str(p) for p in outputs],
        "startedAt": started,
        "durationSeconds": seconds,
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    try:
        params, run = load_settings(args)
        args.out.mkdir(parents=True, exist_ok=True)
        outputs, extra = COMMANDS[args.command](params, run, args.out)
        _write_manifest(args.out, args.command, params, run, outputs, extra, started, time.perf_counter() - t0)
    except (RegimeError, InfeasibleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (UsageError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, FloatingPointError, RuntimeError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
