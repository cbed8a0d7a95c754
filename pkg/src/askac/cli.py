"""Command-line interface: train / eval / metrics / sweep / report."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig, config_from_mapping
from .harness import load_actor, load_run, make_env, run_experiment, run_seed_sweep
from .metrics import compute_anr, compute_ser
from .protocol import AdvisorServer
from .report import render_comparison, render_run
from .trainer import evaluate_policy, spawn_rngs


def _add_train_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algo", help="a2c | ppo | aska2c | askppo | cm | heu")
    p.add_argument("--env", help="cartpole | doorkey")
    p.add_argument("--env-param", action="append", default=[], metavar="KEY=VAL",
                   help="environment parameter, e.g. pole_length=1.0 or grid_size=6")
    p.add_argument("--advisor", help="none | scripted | noisy | remote")
    p.add_argument("--advisor-accuracy", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--total-steps", type=int)
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--out", help="output directory for metrics/params/summary")
    p.add_argument("--serve", type=int, metavar="PORT",
                   help="serve the advisor console protocol on this port")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VAL",
                   help="override any config key")


def _build_config(args) -> dict:
    mapping: dict = {}
    if args.config:
        mapping.update(
            {k: v for k, v in _file_pairs(args.config)}
        )
    for flag, key in (("algo", "algorithm"), ("env", "env"), ("advisor", "advisor"),
                      ("advisor_accuracy", "advisor_accuracy"), ("seed", "seed"),
                      ("total_steps", "total_steps"), ("out", "out_dir")):
        value = getattr(args, flag, None)
        if value is not None:
            mapping[key] = str(value)
    for pair in list(args.env_param) + list(args.set):
        if "=" not in pair:
            raise ConfigError(f"expected KEY=VAL, got {pair!r}")
        key, value = pair.split("=", 1)
        mapping[key.strip()] = value.strip()
    return mapping


def _file_pairs(path: str):
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, value = line.split("=", 1)
        yield key.strip(), value.strip()


def cmd_train(args) -> int:
    cfg = config_from_mapping(_build_config(args))
    server = None
    if args.serve is not None:
        if cfg.advisor != "remote":
            cfg = dataclasses.replace(cfg, advisor="remote")
        env_tag = cfg.env
        names = ("left", "right") if env_tag == "cartpole" else (
            "turn-left", "turn-right", "forward", "pickup", "toggle")
        server = AdvisorServer(args.serve, env_tag, names)
        print(f"advisor console protocol on ws://{server.address[0]}:{server.address[1]}",
              flush=True)
        print("waiting for a console to connect...", flush=True)
        server.wait_for_client(cfg.advisor_timeout)
    try:
        summary, _ = run_experiment(cfg, server=server, quiet=False)
    finally:
        if server:
            server.close()
    print(f"test AR {summary.test_ar_mean:.2f} +- {summary.test_ar_std:.2f} "
          f"over {len(summary.test_returns)} episodes; "
          f"asks {summary.total_ask_count} in {summary.effective_steps} steps")
    return 0


def cmd_eval(args) -> int:
    run_dir = Path(args.params).parent if args.params.endswith(".npz") else Path(args.params)
    params_path = Path(args.params) if args.params.endswith(".npz") else run_dir / "params.npz"
    cfg = config_from_mapping(json_config(run_dir / "config.json"))
    actor = load_actor(params_path)
    rngs = spawn_rngs(cfg.seed + 1)
    env = make_env(cfg, rngs["eval"])  # the config's initial task parameters
    mean, std, returns = evaluate_policy(actor, env, args.episodes)
    print(f"test AR {mean:.2f} +- {std:.2f} over {args.episodes} episodes")
    print("returns:", " ".join(f"{r:.2f}" for r in returns))
    return 0


def json_config(path: Path) -> dict:
    """Reload a config sidecar, dropping derived fields and None defaults."""
    raw = json.loads(Path(path).read_text())
    fields = {f.name for f in dataclasses.fields(ExperimentConfig)}
    out = {}
    for k, v in raw.items():
        if k not in fields or v is None:
            continue
        if k == "changepoints":
            out[k] = tuple((int(s), float(x)) for s, x in v)
        elif isinstance(v, list):
            out[k] = tuple(v)
        else:
            out[k] = v
    return out


def cmd_metrics(args) -> int:
    run = load_run(args.run)
    ref = load_run(args.ref)
    if args.compute == "ser":
        value = compute_ser(run, ref, args.target)
    else:
        value = compute_anr(run, ref, args.target)
    if value is None:
        print(f"{args.compute}: undefined (a run never reached target {args.target})")
        return 1
    print(f"{args.compute} = {value:.4f} at target {args.target}")
    return 0


def cmd_sweep(args) -> int:
    cfg = config_from_mapping(_build_config(args))
    seeds = list(range(args.seed_base, args.seed_base + args.seeds))
    summaries = run_seed_sweep(cfg, seeds, quiet=True)
    for seed, s in zip(seeds, summaries):
        print(f"seed {seed}: test AR {s.test_ar_mean:.2f} +- {s.test_ar_std:.2f}, "
              f"asks {s.total_ask_count}")
    import numpy as np

    means = [s.test_ar_mean for s in summaries]
    print(f"median test AR over {len(seeds)} seeds: {np.median(means):.2f}")
    return 0


def cmd_report(args) -> int:
    if args.runs:
        out = render_comparison(args.runs, args.labels, args.out or "comparison.png")
        print(f"wrote {out}")
        return 0
    written = render_run(args.run, args.out)
    for path in written:
        print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = argparse.ArgumentParser(prog="askac",
                                     description="advisor-in-the-loop actor-critic training")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run one training configuration")
    _add_train_args(p_train)

    p_eval = sub.add_parser("eval", help="greedy evaluation of saved parameters")
    p_eval.add_argument("--params", required=True, help="params.npz or run directory")
    p_eval.add_argument("--episodes", type=int, default=10)

    p_metrics = sub.add_parser("metrics", help="derived ratios between two runs")
    p_metrics.add_argument("--compute", choices=("ser", "anr"), required=True)
    p_metrics.add_argument("--run", required=True, help="interactive/ask run directory")
    p_metrics.add_argument("--ref", required=True, help="reference (original or CM) run directory")
    p_metrics.add_argument("--target", type=float, required=True)

    p_sweep = sub.add_parser("sweep", help="independent seed sweep of one configuration")
    _add_train_args(p_sweep)
    p_sweep.add_argument("--seeds", type=int, default=5)
    p_sweep.add_argument("--seed-base", type=int, default=1)

    p_report = sub.add_parser("report", help="render metrics CSVs to figures")
    p_report.add_argument("--run", help="single run directory")
    p_report.add_argument("--runs", nargs="*", help="multiple run directories to overlay")
    p_report.add_argument("--labels", nargs="*")
    p_report.add_argument("--out", help="output directory (single) or file (overlay)")

    args = parser.parse_args(argv)
    try:
        return {"train": cmd_train, "eval": cmd_eval, "metrics": cmd_metrics,
                "sweep": cmd_sweep, "report": cmd_report}[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
