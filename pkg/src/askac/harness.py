"""Experiment runner: builds the environment/advisor/trainer from a config,
persists metrics and parameters, and evaluates the trained policy."""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .advisors import Advisor, NoisyAdvisor, scripted_advisor_for
from .config import ExperimentConfig, config_to_json, resolve
from .envs import CartPole, CartPoleParams, DoorKey
from .metrics import MetricsWriter, read_metrics, save_summary
from .nn import Mlp
from .protocol import AdvisorServer, RemoteAdvisor
from .trainer import Trainer, evaluate_policy, spawn_rngs

log = logging.getLogger(__name__)


@dataclass
class RunSummary:
    test_ar_mean: float
    test_ar_std: float
    test_returns: list[float]
    total_ask_count: int
    total_queries: int
    effective_steps: int
    iterations: int
    out_dir: str | None


def make_env(cfg: ExperimentConfig, rng: np.random.Generator):
    if cfg.env == "cartpole":
        return CartPole(CartPoleParams(pole_half_length=cfg.pole_length), seed=rng)
    sizes = [cfg.grid_size] + [int(v) for _, v in cfg.changepoints]
    return DoorKey(size=cfg.grid_size, seed=rng, encode_size=max(sizes))


def make_eval_env(cfg: ExperimentConfig, env, rng: np.random.Generator):
    """Fresh environment at the live (post-schedule) parameters."""
    if cfg.env == "cartpole":
        return CartPole(env.params, seed=rng)
    return DoorKey(size=env.size, seed=rng, encode_size=env.encode_size)


def make_advisor(cfg: ExperimentConfig, env, rng: np.random.Generator,
                 server: AdvisorServer | None = None) -> Advisor | None:
    if cfg.advisor == "none":
        return None
    if cfg.advisor == "remote":
        if server is None:
            raise ValueError("remote advisor needs a protocol server (--serve PORT)")
        return RemoteAdvisor(server, timeout=cfg.advisor_timeout)
    scripted = scripted_advisor_for(env)
    if cfg.advisor == "noisy":
        return NoisyAdvisor(scripted, cfg.advisor_accuracy, rng)
    return scripted


def save_params(path: str | Path, trainer: Trainer) -> None:
    arrays = {}
    for name, net in (("actor", trainer.actor), ("critic", trainer.critic),
                      ("requester", trainer.requester)):
        if net is None:
            continue
        for i, (w, b) in enumerate(zip(net.weights, net.biases)):
            arrays[f"{name}_w{i}"] = w
            arrays[f"{name}_b{i}"] = b
    np.savez(path, **arrays)


def load_actor(path: str | Path) -> Mlp:
    data = np.load(path)
    weights, biases = [], []
    for i in range(64):
        if f"actor_w{i}" not in data:
            break
        weights.append(data[f"actor_w{i}"])
        biases.append(data[f"actor_b{i}"])
    if not weights:
        raise ValueError(f"no actor parameters found in {path}")
    return Mlp(weights, biases)


def run_experiment(cfg: ExperimentConfig, server: AdvisorServer | None = None,
                   quiet: bool = False) -> tuple[RunSummary, Trainer]:
    """Train one configuration end to end, persisting results when the
    config names an output directory."""
    cfg = resolve(cfg) if cfg.timesteps_per_iteration is None else cfg
    rngs = spawn_rngs(cfg.seed)
    env = make_env(cfg, rngs["env"])
    advisor = make_advisor(cfg, env, rngs["advisor"], server)
    trainer = Trainer(cfg, env, advisor, rngs)

    out_dir = Path(cfg.out_dir) if cfg.out_dir else None
    writer = None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "config.json").write_text(config_to_json(cfg))
        writer = MetricsWriter(out_dir / "metrics.csv")

    def on_row(row):
        if writer:
            writer.write(row)
        if server is not None:
            server.send_stats(row.iteration, row.roa, row.train_return)
        if not quiet and (row.iteration % 10 == 0 or row.iteration == 1):
            log.info("iter %d step %d return %.1f roa %.3f",
                     row.iteration, row.global_step, row.train_return, row.roa)

    try:
        trainer.train(on_row)
    finally:
        if writer:
            writer.close()

    eval_env = make_eval_env(cfg, env, rngs["eval"])
    mean, std, returns = evaluate_policy(trainer.actor, eval_env, cfg.eval_episodes)
    summary = RunSummary(
        test_ar_mean=mean,
        test_ar_std=std,
        test_returns=returns,
        total_ask_count=int(sum(r.ask_count for r in trainer.rows)),
        total_queries=trainer.query_count,
        effective_steps=cfg.effective_steps,
        iterations=len(trainer.rows),
        out_dir=str(out_dir) if out_dir else None,
    )
    if out_dir:
        save_params(out_dir / "params.npz", trainer)
        save_summary(out_dir / "summary.json", dataclasses.asdict(summary))
    return summary, trainer


def run_seed_sweep(cfg: ExperimentConfig, seeds: list[int],
                   quiet: bool = True) -> list[RunSummary]:
    """Independent runs over a seed list; per-seed outputs go to seed-named
    subdirectories of the configured output directory."""
    summaries = []
    for seed in seeds:
        sub = dataclasses.replace(
            cfg, seed=seed,
            out_dir=str(Path(cfg.out_dir) / f"seed{seed}") if cfg.out_dir else None)
        summary, _ = run_experiment(resolve(sub), quiet=quiet)
        summaries.append(summary)
        log.info("seed %d: test AR %.2f +- %.2f, asks %d",
                 seed, summary.test_ar_mean, summary.test_ar_std, summary.total_ask_count)
    return summaries


def load_run(out_dir: str | Path) -> dict[str, np.ndarray]:
    return read_metrics(Path(out_dir) / "metrics.csv")
