"""Command line interface.

    protoscope run --scenario default --seed 1 [--steps N] [--out DIR] [--config FILE]
    protoscope sweep --scenario sweep_n_obj --param n_obj --values 1,2,3 --seeds 1,2
    protoscope report --in DIR

Config files are TOML with [grid], [explore], [similarity] and [spectral]
sections; command-line flags override file values. Exit codes: 0 success,
1 config error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .harness import (ConfigError, PRESETS, apply_sweep_value, make_scenario,
                      render_report_dir, run_scenario, sweep)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); bad flags are config errors
        raise ConfigError(message)


def load_config_file(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        with open(p, "rb") as f:
            raw = tomllib.load(f)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {p}: {exc}") from exc
    known = {"grid", "explore", "similarity", "spectral", "scenario"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    return raw


def _scenario_from_args(args) -> tuple:
    overrides: dict = {}
    name = args.scenario
    if args.config:
        raw = load_config_file(args.config)
        overrides.update({k: dict(v) for k, v in raw.items()
                          if k in ("grid", "similarity", "spectral")})
        explore = raw.get("explore", {})
        if "n_step" in explore:
            overrides["n_step"] = int(explore["n_step"])
        section = raw.get("scenario", {})
        if "name" in section and name is None:
            name = section["name"]
    if name is None:
        name = "default"
    if args.steps is not None:
        overrides["n_step"] = args.steps
    if getattr(args, "knee", None):
        overrides.setdefault("spectral", {})["knee"] = args.knee
    return make_scenario(name, **overrides)


def _parse_list(text: str, caster):
    try:
        return [caster(tok) for tok in text.split(",") if tok != ""]
    except ValueError as exc:
        raise ConfigError(f"bad list {text!r}: {exc}") from exc


def _number(tok: str):
    return float(tok) if any(ch in tok for ch in ".eE") else int(tok)


def build_parser() -> _Parser:
    parser = _Parser(prog="protoscope",
                     description="proto-object discovery experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario")
    run_p.add_argument("--scenario", choices=sorted(PRESETS), default=None)
    run_p.add_argument("--seed", type=int, required=True)
    run_p.add_argument("--steps", type=int, default=None, help="override n_step")
    run_p.add_argument("--out", default=None, help="artifact directory")
    run_p.add_argument("--config", default=None, help="TOML config file")
    run_p.add_argument("--knee", choices=["centered", "verbatim"], default=None)

    sweep_p = sub.add_parser("sweep", help="run a parameter sweep")
    sweep_p.add_argument("--scenario", choices=sorted(PRESETS), default=None)
    sweep_p.add_argument("--param", default=None, help="config field to sweep")
    sweep_p.add_argument("--values", default=None, help="comma-separated values")
    sweep_p.add_argument("--seeds", required=True, help="comma-separated seeds")
    sweep_p.add_argument("--steps", type=int, default=None)
    sweep_p.add_argument("--out", default=None)
    sweep_p.add_argument("--config", default=None)
    sweep_p.add_argument("--knee", choices=["centered", "verbatim"], default=None)
    sweep_p.add_argument("--workers", type=int, default=1)

    report_p = sub.add_parser("report", help="re-render exports from report.json")
    report_p.add_argument("--in", dest="in_dir", required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            config = _scenario_from_args(args)
            report = run_scenario(config, args.seed, args.out)
            d = report.data
            print(f"scenario={d['scenario']} seed={d['seed']} n_star={d['n_star']} "
                  f"(verbatim={d['n_star_verbatim']}, centered={d['n_star_centered']}) "
                  f"ari={d['ari']:.3f} self_transition={d['self_transition_null_motor']:.3f}")
            for c in d["cluster_stats"]:
                print(f"  cluster {c['cluster']}: {c['n_states']} states, "
                      f"majority={c['majority_label']}, purity={c['purity']:.3f}")
            if args.out:
                print(f"artifacts in {args.out}")
        elif args.command == "sweep":
            config = _scenario_from_args(args)
            param = args.param or config.sweep_param
            if param is None:
                raise ConfigError("no --param given and the scenario has no sweep preset")
            if args.values is not None:
                values = _parse_list(args.values, _number)
            elif config.sweep_values is not None:
                values = list(config.sweep_values)
            else:
                raise ConfigError("no --values given and the scenario has no sweep preset")
            apply_sweep_value(config, param, values[0])  # fail fast on bad param
            seeds = _parse_list(args.seeds, int)
            reports = sweep(config, param, values, seeds, args.out, workers=args.workers)
            for r in reports:
                d = r.data
                value = d["config"]["grid"].get(param, d["config"].get(param))
                print(f"{param}={value} seed={d['seed']} n_star={d['n_star']} ari={d['ari']:.3f}")
        else:
            files = render_report_dir(args.in_dir)
            print(f"re-rendered {len(files)} artifacts in {args.in_dir}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
