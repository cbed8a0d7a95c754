"""Experiment configuration: schema, per-task defaults, and the flat
key/value config-file format used by the CLI."""

from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass
from pathlib import Path

ALGORITHMS = ("a2c", "ppo", "aska2c", "askppo", "cm", "heu")
ENVS = ("cartpole", "doorkey")
ADVISORS = ("none", "scripted", "noisy", "remote")

A2C_FAMILY = ("a2c", "aska2c")
ASK_ALGOS = ("aska2c", "askppo")
ADVISOR_ALGOS = ("aska2c", "askppo", "cm", "heu")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    algorithm: str = "ppo"
    env: str = "cartpole"
    pole_length: float = 0.5
    grid_size: int = 5
    changepoints: tuple[tuple[int, float], ...] = ()
    advisor: str | None = None  # defaulted per algorithm
    advisor_accuracy: float = 1.0
    advisor_timeout: float = 60.0
    total_steps: int = 200_000
    seed: int = 1
    out_dir: str | None = None

    # hyperparameters (None entries are filled per task/backbone defaults)
    policy_hidden_layers: tuple[int, ...] = (64, 64)
    value_hidden_layers: tuple[int, ...] = (64, 64)
    timesteps_per_iteration: int | None = None
    learning_rate: float | None = None
    num_epochs: int | None = None
    minibatch_size: int | None = None
    discount_factor: float = 0.99
    gae_discount: float | None = None
    ppo_clipping: float = 0.2
    gradient_clipping: float = 0.5
    vf_coeff: float = 0.5
    entropy_coeff: float = 0.0
    anneal: bool | None = None

    # advisor-in-the-loop knobs
    exponential_decay_rate: float = 0.9
    max_unstable_rate: float = 0.1
    advisor_loss_coeff: float = 1.0
    ask_loss_coeff: float = 0.5
    requester_enabled: bool = True

    # baselines and evaluation
    heu_threshold: float = 0.6
    eval_episodes: int = 10

    @property
    def backbone(self) -> str:
        return "a2c" if self.algorithm in A2C_FAMILY else "ppo"

    @property
    def uses_requester(self) -> bool:
        return self.algorithm in ASK_ALGOS and self.requester_enabled

    @property
    def n_iterations(self) -> int:
        assert self.timesteps_per_iteration
        return self.total_steps // self.timesteps_per_iteration

    @property
    def effective_steps(self) -> int:
        assert self.timesteps_per_iteration
        return self.n_iterations * self.timesteps_per_iteration


# (timesteps/iter, learning rate, epochs, minibatch, gae, anneal)
_DEFAULTS = {
    ("cartpole", "ppo"): (2048, 1e-3, 10, 256, 0.95, True),
    ("cartpole", "a2c"): (40, 7e-4, 1, None, 1.0, True),
    ("doorkey", "ppo"): (1024, 2.5e-4, 10, 64, 0.95, False),
    ("doorkey", "a2c"): (40, 7e-4, 1, None, 1.0, False),
}


def resolve(cfg: ExperimentConfig) -> ExperimentConfig:
    """Fill per-task defaults and validate; returns a new config."""
    if cfg.algorithm not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {cfg.algorithm!r}; choose from {ALGORITHMS}")
    if cfg.env not in ENVS:
        raise ConfigError(f"unknown environment {cfg.env!r}; choose from {ENVS}")
    t, lr, epochs, mb, gae, anneal = _DEFAULTS[(cfg.env, cfg.backbone)]
    advisor = cfg.advisor
    if advisor is None:
        advisor = "scripted" if cfg.algorithm in ADVISOR_ALGOS else "none"
    out = dataclasses.replace(
        cfg,
        advisor=advisor,
        timesteps_per_iteration=cfg.timesteps_per_iteration or t,
        learning_rate=cfg.learning_rate if cfg.learning_rate is not None else lr,
        num_epochs=cfg.num_epochs if cfg.num_epochs is not None else epochs,
        minibatch_size=cfg.minibatch_size if cfg.minibatch_size is not None else mb,
        gae_discount=cfg.gae_discount if cfg.gae_discount is not None else gae,
        anneal=cfg.anneal if cfg.anneal is not None else anneal,
    )
    validate(out)
    return out


def validate(cfg: ExperimentConfig) -> None:
    if cfg.advisor not in ADVISORS:
        raise ConfigError(f"unknown advisor {cfg.advisor!r}; choose from {ADVISORS}")
    if cfg.algorithm in ADVISOR_ALGOS and cfg.advisor == "none":
        raise ConfigError(f"algorithm {cfg.algorithm!r} needs an advisor")
    if not 0.0 <= cfg.discount_factor <= 1.0:
        raise ConfigError("discount_factor must be within [0, 1]")
    if not 0.0 <= cfg.advisor_accuracy <= 1.0:
        raise ConfigError("advisor_accuracy must be within [0, 1]")
    if not 0.0 < cfg.exponential_decay_rate < 1.0:
        raise ConfigError("exponential_decay_rate must be within (0, 1)")
    if not 0.0 <= cfg.max_unstable_rate <= 1.0:
        raise ConfigError("max_unstable_rate must be within [0, 1]")
    if cfg.advisor_loss_coeff < 0 or cfg.ask_loss_coeff < 0:
        raise ConfigError("loss coefficients must be nonnegative")
    if cfg.total_steps <= 0 or cfg.timesteps_per_iteration <= 0:
        raise ConfigError("step counts must be positive")
    if cfg.total_steps < cfg.timesteps_per_iteration:
        raise ConfigError("total_steps smaller than a single iteration")
    if cfg.learning_rate <= 0:
        raise ConfigError("learning_rate must be positive")
    if cfg.grid_size < 5:
        raise ConfigError("grid_size must be at least 5")
    if cfg.pole_length <= 0:
        raise ConfigError("pole_length must be positive")
    if not 0.0 < cfg.heu_threshold <= 1.0:
        raise ConfigError("heu_threshold must be within (0, 1]")
    steps = [s for s, _ in cfg.changepoints]
    if any(b <= a for a, b in zip(steps, steps[1:])):
        raise ConfigError("changepoint steps must be strictly increasing")


# -- flat key/value config files ----------------------------------------------

_FIELD_NAMES = {f.name for f in dataclasses.fields(ExperimentConfig)}

# table-caption names normalize onto these schema keys
_ALIASES = {
    "number_of_epochs": "num_epochs",
    "timesteps_per_iter": "timesteps_per_iteration",
    "policy_network_hidden_layers": "policy_hidden_layers",
    "value_network_hidden_layers": "value_hidden_layers",
}


def normalize_key(key: str) -> str:
    """Map a config key (or a hyperparameter table caption) to a field name:
    'PPO clipping' -> ppo_clipping, 'Max unstable rate (Ask)' ->
    max_unstable_rate."""
    k = key.strip().lower()
    k = re.sub(r"\(\s*ask\s*\)", "", k)
    k = re.sub(r"[^a-z0-9]+", "_", k).strip("_")
    return _ALIASES.get(k, k)


def _parse_value(name: str, raw: str):
    raw = raw.strip()
    if name in ("policy_hidden_layers", "value_hidden_layers"):
        inner = raw.strip("[]() ")
        return tuple(int(x) for x in inner.split(",") if x.strip())
    if name == "changepoints":
        if not raw or raw.lower() == "none":
            return ()
        pairs = []
        for part in raw.split(","):
            step, value = part.split(":")
            pairs.append((int(step), float(value)))
        return tuple(pairs)
    if name in ("anneal", "requester_enabled"):
        if raw.lower() in ("true", "yes", "1", "on"):
            return True
        if raw.lower() in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{name} must be a boolean, got {raw!r}")
    if name in ("algorithm", "env", "advisor", "out_dir"):
        return raw
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"cannot parse value {raw!r} for key {name!r}") from exc


def config_from_mapping(mapping: dict) -> ExperimentConfig:
    """Build a config from raw key/value pairs; unknown keys are rejected."""
    kwargs = {}
    for key, raw in mapping.items():
        name = normalize_key(str(key))
        if name not in _FIELD_NAMES:
            raise ConfigError(f"unknown config key {key!r}")
        kwargs[name] = _parse_value(name, str(raw)) if isinstance(raw, str) else raw
    return resolve(ExperimentConfig(**kwargs))


def load_config_file(path: str | Path) -> ExperimentConfig:
    """Parse a flat `key = value` file ('#' starts a comment)."""
    mapping = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        mapping[key.strip()] = value.strip()
    return config_from_mapping(mapping)


def config_to_json(cfg: ExperimentConfig) -> str:
    d = dataclasses.asdict(cfg)
    d["effective_steps"] = cfg.effective_steps
    d["n_iterations"] = cfg.n_iterations
    return json.dumps(d, indent=2, sort_keys=True)
