"""Cart-pole balancing task: explicit Euler integration of the classic
cart-pole ODE, +1 reward per step, 500-step cap."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .base import StepResult

LEFT = 0
RIGHT = 1

ACTION_NAMES = ("left", "right")


@dataclass(frozen=True)
class CartPoleParams:
    gravity: float = 9.8
    cart_mass: float = 1.0
    pole_mass: float = 0.1
    pole_half_length: float = 0.5  # the experiments vary this one
    force_mag: float = 10.0
    tau: float = 0.02
    x_threshold: float = 2.4
    theta_threshold: float = 12.0 * math.pi / 180.0
    max_steps: int = 500

    def __post_init__(self) -> None:
        for name in ("gravity", "cart_mass", "pole_mass", "pole_half_length",
                     "force_mag", "tau", "x_threshold", "theta_threshold"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def total_mass(self) -> float:
        return self.cart_mass + self.pole_mass


def cartpole_derivatives(
    state: np.ndarray, force: float, p: CartPoleParams
) -> tuple[float, float]:
    """(x_acc, theta_acc) of the cart-pole ODE at the given state and force."""
    _, _, theta, theta_dot = state
    sin_t, cos_t = math.sin(theta), math.cos(theta)
    pml = p.pole_mass * p.pole_half_length
    temp = (force + pml * theta_dot**2 * sin_t) / p.total_mass
    theta_acc = (p.gravity * sin_t - cos_t * temp) / (
        p.pole_half_length * (4.0 / 3.0 - p.pole_mass * cos_t**2 / p.total_mass)
    )
    x_acc = temp - pml * theta_acc * cos_t / p.total_mass
    return x_acc, theta_acc


def cartpole_euler_step(state: np.ndarray, action: int, p: CartPoleParams) -> np.ndarray:
    """One explicit Euler step: kinematics advance on the pre-step derivatives."""
    force = p.force_mag if action == RIGHT else -p.force_mag
    x, x_dot, theta, theta_dot = state
    x_acc, theta_acc = cartpole_derivatives(state, force, p)
    return np.array([
        x + p.tau * x_dot,
        x_dot + p.tau * x_acc,
        theta + p.tau * theta_dot,
        theta_dot + p.tau * theta_acc,
    ])


class CartPole:
    """Stateful cart-pole environment over a mutable parameter set.

    `params` may be swapped between steps (the changepoint scheduler does
    exactly that); the physical state carries over unchanged.
    """

    env_tag = "cartpole"
    n_actions = 2
    obs_dim = 4
    action_names = ACTION_NAMES

    def __init__(self, params: CartPoleParams | None = None, seed: int | None = None):
        self.params = params or CartPoleParams()
        self.rng = np.random.default_rng(seed)
        self.state: np.ndarray | None = None
        self.steps = 0
        self._done = True

    def set_pole_half_length(self, length: float) -> None:
        self.params = replace(self.params, pole_half_length=float(length))

    def reset(self) -> np.ndarray:
        self.state = self.rng.uniform(-0.05, 0.05, size=4)
        self.steps = 0
        self._done = False
        return self.state.copy()

    def step(self, action: int) -> StepResult:
        if self._done or self.state is None:
            raise RuntimeError("step() called on a finished episode; reset() first")
        if action not in (LEFT, RIGHT):
            raise ValueError(f"invalid action {action}")
        p = self.params
        self.state = cartpole_euler_step(self.state, action, p)
        self.steps += 1
        x, _, theta, _ = self.state
        terminated = abs(x) > p.x_threshold or abs(theta) > p.theta_threshold
        truncated = not terminated and self.steps >= p.max_steps
        self._done = terminated or truncated
        return StepResult(self.state.copy(), 1.0, terminated, truncated)

    def render_payload(self) -> dict:
        x, x_dot, theta, theta_dot = (self.state if self.state is not None else np.zeros(4))
        return {
            "x": float(x),
            "x_dot": float(x_dot),
            "theta": float(theta),
            "theta_dot": float(theta_dot),
            "pole_half_length": self.params.pole_half_length,
            "x_threshold": self.params.x_threshold,
            "theta_threshold": self.params.theta_threshold,
        }
