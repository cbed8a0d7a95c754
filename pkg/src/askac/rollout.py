"""Rollout storage and return/advantage computation for one training iteration."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ASK = 0
EXEC = 1


@dataclass
class RolloutBuffer:
    """Per-step arrays for one iteration; episodes are concatenated and may
    span iteration boundaries.

    `behavior_logp` is the joint log-probability of the recorded step under
    the collection-time networks: log g(y|s) plus, on executed steps,
    log pi(a|s). `pg_mask` marks steps whose action log-prob enters the
    policy term (advisor-executed steps are excluded for requester-less
    baselines). `advisor_action` is -1 where no label was collected.
    """

    obs: np.ndarray
    meta: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    terminated: np.ndarray
    truncated: np.ndarray
    advisor_provided: np.ndarray
    advisor_action: np.ndarray
    behavior_logp: np.ndarray
    pg_mask: np.ndarray
    values: np.ndarray
    next_values: np.ndarray
    returns: np.ndarray = field(default=None)  # type: ignore[assignment]
    advantages: np.ndarray = field(default=None)  # type: ignore[assignment]

    @classmethod
    def empty(cls, n_steps: int, obs_dim: int) -> "RolloutBuffer":
        return cls(
            obs=np.zeros((n_steps, obs_dim)),
            meta=np.full(n_steps, EXEC, dtype=np.int8),
            actions=np.zeros(n_steps, dtype=np.int64),
            rewards=np.zeros(n_steps),
            terminated=np.zeros(n_steps, dtype=bool),
            truncated=np.zeros(n_steps, dtype=bool),
            advisor_provided=np.zeros(n_steps, dtype=bool),
            advisor_action=np.full(n_steps, -1, dtype=np.int64),
            behavior_logp=np.zeros(n_steps),
            pg_mask=np.ones(n_steps),
            values=np.zeros(n_steps),
            next_values=np.zeros(n_steps),
        )

    def __len__(self) -> int:
        return len(self.rewards)


def compute_returns(
    rewards: np.ndarray,
    terminated: np.ndarray,
    truncated: np.ndarray,
    next_values: np.ndarray,
    gamma: float,
) -> np.ndarray:
    """Discounted returns G_t by backward recursion, reset at episode ends.

    Terminated steps stop the recursion at r_t; truncated steps (time limit
    or iteration cut) bootstrap with the stored value of the next state.
    The caller marks the final step of the buffer truncated if the episode
    is still running there.
    """
    n = len(rewards)
    returns = np.zeros(n)
    g = 0.0
    for t in range(n - 1, -1, -1):
        if terminated[t]:
            g = rewards[t]
        elif truncated[t]:
            g = rewards[t] + gamma * next_values[t]
        else:
            g = rewards[t] + gamma * g
        returns[t] = g
    return returns


def compute_gae(
    rewards: np.ndarray,
    values: np.ndarray,
    next_values: np.ndarray,
    terminated: np.ndarray,
    truncated: np.ndarray,
    gamma: float,
    lam: float,
) -> np.ndarray:
    """Generalized advantage estimates with episode-boundary resets.

    delta_t = r_t + gamma * V(s_{t+1}) * (1 - terminated_t) - V(s_t); the
    lambda-chain resets at terminations and truncations alike, while the
    bootstrap through next_values survives truncation.
    """
    n = len(rewards)
    adv = np.zeros(n)
    last = 0.0
    for t in range(n - 1, -1, -1):
        delta = rewards[t] + gamma * next_values[t] * (not terminated[t]) - values[t]
        if terminated[t] or truncated[t]:
            last = delta
        else:
            last = delta + gamma * lam * last
        adv[t] = last
    return adv


def normalize_advantages(adv: np.ndarray) -> np.ndarray:
    """Mean-zero, unit-std advantages (the PPO per-iteration convention)."""
    return (adv - adv.mean()) / (adv.std() + 1e-8)


def anneal_fraction(global_step: int, total_steps: int) -> float:
    """Linear 1 -> 0 schedule over the training budget."""
    if not 0 <= global_step <= total_steps:
        raise ValueError(f"global_step {global_step} outside [0, {total_steps}]")
    return 1.0 - global_step / total_steps
