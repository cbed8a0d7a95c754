"""Adaptive state selector: EWMA tracking of the per-iteration value loss,
the spike-sensitive unstable rate, and top-k unstable state selection."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def value_errors(values: np.ndarray, returns: np.ndarray) -> np.ndarray:
    """Squared error between state-value estimates and their return targets."""
    values = np.asarray(values, dtype=np.float64)
    returns = np.asarray(returns, dtype=np.float64)
    if values.shape != returns.shape:
        raise ValueError("values and returns must align")
    d = values - returns
    return d * d


def value_loss(errors: np.ndarray) -> float:
    """Mean value error over the iteration's history states."""
    if len(errors) == 0:
        raise ValueError("iteration produced no history states")
    return float(np.mean(errors))


def update_ewma(ewma: float, loss: float, decay: float) -> float:
    """Exponentially weighted moving average step for the value loss."""
    if loss < 0:
        raise ValueError("value loss cannot be negative")
    return decay * ewma + (1.0 - decay) * loss


def unstable_rate(loss: float, ewma: float, decay: float) -> float:
    """Share of the updated EWMA contributed by the newest loss.

    The EWMA must already include `loss` (the ratio is then <= 1). A zero
    EWMA only occurs when the loss itself is zero; the rate is 0 there.
    """
    if ewma == 0.0:
        return 0.0
    return (1.0 - decay) * loss / ewma


def unstable_count(rate: float, max_rate: float, n_states: int) -> int:
    """Size of the unstable set: ceil(rate * max_rate * |history|)."""
    return int(math.ceil(rate * max_rate * n_states))


def select_unstable(errors: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest-error states, ties broken by earlier index."""
    if k > len(errors):
        raise ValueError(f"k={k} exceeds {len(errors)} states")
    if k == 0:
        return np.empty(0, dtype=np.int64)
    order = np.argsort(-np.asarray(errors, dtype=np.float64), kind="stable")
    return order[:k].astype(np.int64)


@dataclass
class SelectorState:
    """EWMA of the value loss plus the rates that size the unstable set."""

    decay: float = 0.9
    max_unstable_rate: float = 0.1
    ewma: float = 0.0
    iteration: int = 0

    def update(self, values: np.ndarray, returns: np.ndarray) -> tuple[np.ndarray, dict]:
        """Run one iteration of the selector over the history states.

        Updates the EWMA in place and returns the unstable-state indices
        plus diagnostics (value_loss, ewma, unstable_rate, unstable_count).
        """
        errors = value_errors(values, returns)
        loss = value_loss(errors)
        self.iteration += 1
        self.ewma = update_ewma(self.ewma, loss, self.decay)
        rate = unstable_rate(loss, self.ewma, self.decay)
        assert -1e-12 <= rate <= 1.0 + 1e-12, f"unstable rate {rate} outside [0, 1]"
        rate = min(max(rate, 0.0), 1.0)
        k = unstable_count(rate, self.max_unstable_rate, len(errors))
        idx = select_unstable(errors, k)
        diag = {
            "value_loss": loss,
            "ewma": self.ewma,
            "unstable_rate": rate,
            "unstable_count": k,
        }
        return idx, diag
