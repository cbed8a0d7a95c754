"""Changepoint scheduling: swaps environment parameters at fixed global
timesteps, producing a piecewise-stationary task sequence. The agent is
never told that a switch happened."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable


@dataclass
class ChangepointSchedule:
    """Ordered (global timestep, parameter value) switch points.

    `apply` installs a value on the environment: the pole half-length for
    the cart-pole task, the grid size for the gridworld. An empty schedule
    leaves the task stationary forever.
    """

    changepoints: list[tuple[int, float]] = field(default_factory=list)
    _next: int = 0

    def __post_init__(self) -> None:
        steps = [t for t, _ in self.changepoints]
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise ValueError("changepoint timesteps must be strictly increasing")

    def advance(self, global_step: int, apply: Callable[[float], None]) -> bool:
        """Install every parameter set whose changepoint has been crossed.

        Call with a nondecreasing global step count; returns True when a
        switch fired at this call.
        """
        fired = False
        while self._next < len(self.changepoints) and global_step >= self.changepoints[self._next][0]:
            apply(self.changepoints[self._next][1])
            self._next += 1
            fired = True
        return fired


def apply_env_param(env, value: float) -> None:
    """Route a scheduled parameter to the environment's knob."""
    if hasattr(env, "set_pole_half_length"):
        env.set_pole_half_length(value)
    elif hasattr(env, "set_grid_size"):
        env.set_grid_size(value)
    else:
        raise TypeError(f"environment {type(env).__name__} has no schedulable parameter")
