"""Loss terms and their exact gradients w.r.t. network outputs.

Each function returns (scalar loss, gradient w.r.t. its input array); the
trainer assembles per-network d(loss)/d(logits) contributions and hands
them to the MLP backward pass. Advantages are treated as constants
throughout.
"""

from __future__ import annotations

import numpy as np

from .nn import cross_entropy_rows, log_softmax, softmax


def log_prob_rows(logits: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Per-row log-probability of the chosen index."""
    logp = log_softmax(np.atleast_2d(logits))
    return logp[np.arange(len(idx)), np.asarray(idx, dtype=np.int64)]


def pg_loss_vanilla(logp: np.ndarray, adv: np.ndarray, n_total: int) -> tuple[float, np.ndarray]:
    """Vanilla policy-gradient surrogate -sum(logp * adv) / n_total.

    `logp` covers only the steps that carry a policy term; zeros elsewhere
    are accounted for by dividing by the full batch size `n_total`.
    """
    loss = -float(np.sum(logp * adv)) / n_total
    dlogp = -adv / n_total
    return loss, dlogp


def pg_loss_clipped(
    logp_new: np.ndarray,
    logp_old: np.ndarray,
    adv: np.ndarray,
    clip: float,
    n_total: int,
) -> tuple[float, np.ndarray]:
    """PPO clipped surrogate over the steps carrying a policy term.

    loss = -sum(min(rho * A, clip(rho, 1 +- clip) * A)) / n_total with
    rho = exp(logp_new - logp_old). The gradient flows only where the
    unclipped branch is active.
    """
    rho = np.exp(logp_new - logp_old)
    s1 = rho * adv
    s2 = np.clip(rho, 1.0 - clip, 1.0 + clip) * adv
    loss = -float(np.sum(np.minimum(s1, s2))) / n_total
    active = s1 <= s2
    dlogp = np.where(active, -adv * rho, 0.0) / n_total
    return loss, dlogp


def value_mse(values: np.ndarray, targets: np.ndarray, coeff: float) -> tuple[float, np.ndarray]:
    """coeff * mean squared value error and its gradient w.r.t. values."""
    d = values - targets
    loss = coeff * float(np.mean(d * d))
    dvalues = coeff * 2.0 * d / len(values)
    return loss, dvalues


def weighted_ce(
    logits: np.ndarray, targets: np.ndarray, weights: np.ndarray
) -> tuple[float, np.ndarray]:
    """sum_i w_i * CE(target_i, logits_i) and its logit gradients.

    The caller bakes set-membership masks, loss coefficients, and any
    minibatch reweighting into `weights`.
    """
    losses, dlogits = cross_entropy_rows(logits, targets)
    loss = float(np.sum(weights * losses))
    dlogits *= weights[:, None]
    return loss, dlogits


def entropy_mean(logits: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean categorical entropy over rows and d(mean H)/d(logits)."""
    logits = np.atleast_2d(logits)
    p = softmax(logits)
    logp = log_softmax(logits)
    h = -np.sum(p * logp, axis=1)
    dlogits = -p * (logp + h[:, None]) / len(logits)
    return float(np.mean(h)), dlogits


def total_loss(
    org: float, adv: float, ask: float, adv_coeff: float = 1.0, ask_coeff: float = 0.5
) -> float:
    """Weighted sum of the backbone, advisor, and ask terms."""
    return org + adv_coeff * adv + ask_coeff * ask
