"""Task environments: cart-pole, the key-and-door gridworld, and the
changepoint scheduler for non-stationary runs."""

from .base import StepResult
from .cartpole import CartPole, CartPoleParams
from .doorkey import DoorKey, DoorKeyLayout
from .schedule import ChangepointSchedule, apply_env_param

__all__ = [
    "StepResult",
    "CartPole",
    "CartPoleParams",
    "DoorKey",
    "DoorKeyLayout",
    "ChangepointSchedule",
    "apply_env_param",
]
