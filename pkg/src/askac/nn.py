"""Dense-network numerical core: tanh MLPs with explicit reverse-mode
gradients, categorical utilities, Adam, and global-norm gradient clipping.

Everything is float64 numpy. Forward passes keep a cache of layer
activations so each loss can hand its d(loss)/d(output) to `mlp_backward`
and get exact parameter gradients back.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class ConfigurationError(ValueError):
    """Shape or parameter mismatch in network construction or use."""


class NumericError(RuntimeError):
    """Non-finite values where finite ones are required."""


def orthogonal(shape: tuple[int, int], gain: float, rng: np.random.Generator) -> np.ndarray:
    """Orthogonal weight matrix scaled by `gain` (QR of a gaussian draw)."""
    rows, cols = shape
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))  # deterministic sign convention
    if rows < cols:
        q = q.T
    return np.ascontiguousarray(gain * q[:rows, :cols])


@dataclass
class Mlp:
    """Parameters of input -> hidden... -> output dense net, tanh hidden layers."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def params(self) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def copy(self) -> "Mlp":
        return Mlp([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def check_finite(self) -> None:
        for p in self.params():
            if not np.all(np.isfinite(p)):
                raise NumericError("non-finite network parameter")


def init_mlp(
    sizes: Sequence[int],
    rng: np.random.Generator,
    out_gain: float = 1.0,
    hidden_gain: float = np.sqrt(2.0),
) -> Mlp:
    """Build an MLP with orthogonal hidden layers and a scaled output layer.

    Policy/requester heads use a small `out_gain` (near-uniform initial
    distributions); the critic head uses 1.0.
    """
    if len(sizes) < 2:
        raise ConfigurationError("need at least input and output sizes")
    weights, biases = [], []
    for i in range(len(sizes) - 1):
        gain = out_gain if i == len(sizes) - 2 else hidden_gain
        weights.append(orthogonal((sizes[i], sizes[i + 1]), gain, rng))
        biases.append(np.zeros(sizes[i + 1]))
    return Mlp(weights, biases)


def mlp_forward(net: Mlp, x: np.ndarray) -> np.ndarray:
    """Forward pass; accepts (d,) or (N, d), returns matching shape."""
    out, _ = mlp_forward_cache(net, x)
    return out


def mlp_forward_cache(net: Mlp, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Forward pass keeping per-layer activations for `mlp_backward`.

    The cache holds the input to every layer (post-activation of the
    previous one); tanh derivatives are recovered from the activations.
    """
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    h = x[None, :] if squeeze else x
    if h.shape[1] != net.weights[0].shape[0]:
        raise ConfigurationError(
            f"input width {h.shape[1]} != first layer width {net.weights[0].shape[0]}"
        )
    cache = [h]
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = h @ w + b
        if i < last:
            h = np.tanh(h)
            cache.append(h)
    return (h[0] if squeeze else h), cache


@dataclass
class GradBundle:
    """Per-parameter gradients mirroring an Mlp."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @classmethod
    def zeros_like(cls, net: Mlp) -> "GradBundle":
        return cls(
            [np.zeros_like(w) for w in net.weights],
            [np.zeros_like(b) for b in net.biases],
        )

    def arrays(self) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def add_(self, other: "GradBundle") -> "GradBundle":
        for a, b in zip(self.arrays(), other.arrays()):
            a += b
        return self

    def scale_(self, c: float) -> "GradBundle":
        for a in self.arrays():
            a *= c
        return self

    def global_norm(self) -> float:
        return float(np.sqrt(sum(float(np.sum(a * a)) for a in self.arrays())))


def mlp_backward(net: Mlp, cache: list[np.ndarray], dout: np.ndarray) -> GradBundle:
    """Reverse-mode gradients of sum(dout * output) w.r.t. all parameters."""
    dout = np.asarray(dout, dtype=np.float64)
    if dout.ndim == 1:
        dout = dout[None, :]
    grads = GradBundle.zeros_like(net)
    d = dout
    for i in range(len(net.weights) - 1, -1, -1):
        h_in = cache[i]
        grads.weights[i][...] = h_in.T @ d
        grads.biases[i][...] = d.sum(axis=0)
        if i > 0:
            d = (d @ net.weights[i].T) * (1.0 - h_in * h_in)  # tanh'
    return grads


def clip_grad_norm(bundles: GradBundle | Sequence[GradBundle], max_norm: float) -> float:
    """Scale gradients in place so the joint global L2 norm is <= max_norm.

    Accepts one bundle or several (clipped against their combined norm).
    Returns the pre-clip norm.
    """
    if max_norm <= 0:
        raise ConfigurationError("max_norm must be positive")
    if isinstance(bundles, GradBundle):
        bundles = [bundles]
    norm = float(np.sqrt(sum(b.global_norm() ** 2 for b in bundles)))
    if not np.isfinite(norm):
        raise NumericError("non-finite gradient norm")
    if norm > max_norm:
        for b in bundles:
            b.scale_(max_norm / norm)
    return norm


# -- categorical utilities ---------------------------------------------------


def softmax(logits: np.ndarray) -> np.ndarray:
    """Max-subtracted stable softmax over the last axis."""
    logits = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite logits")
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    logits = np.asarray(logits, dtype=np.float64)
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def sample_categorical(probs: np.ndarray, rng: np.random.Generator) -> int:
    """Draw an index from one probability vector, reproducibly under `rng`."""
    u = rng.random()
    return int(min(np.searchsorted(np.cumsum(probs), u, side="right"), len(probs) - 1))


def cross_entropy(target: int, logits: np.ndarray) -> float:
    """-log softmax(logits)[target] for a single logit row."""
    logits = np.asarray(logits, dtype=np.float64)
    if not (0 <= target < logits.shape[-1]):
        raise ConfigurationError(f"target {target} out of range for {logits.shape[-1]} classes")
    return float(-log_softmax(logits)[..., target])


def cross_entropy_rows(logits: np.ndarray, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-row CE losses and d(ce)/d(logits) = softmax - onehot for a batch."""
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    targets = np.asarray(targets, dtype=np.int64)
    if targets.min(initial=0) < 0 or targets.max(initial=-1) >= logits.shape[1]:
        raise ConfigurationError("cross-entropy target out of range")
    logp = log_softmax(logits)
    rows = np.arange(len(targets))
    losses = -logp[rows, targets]
    dlogits = np.exp(logp)
    dlogits[rows, targets] -= 1.0
    return losses, dlogits


# -- optimizer ---------------------------------------------------------------


@dataclass
class Adam:
    """Adam over one or more networks' parameter lists.

    The effective step size is base_lr * the anneal fraction supplied by the
    caller at each step.
    """

    nets: list[Mlp]
    base_lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self) -> None:
        params = [p for net in self.nets for p in net.params()]
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads: Sequence[GradBundle], anneal: float = 1.0) -> None:
        """One Adam update with effective lr = base_lr * anneal."""
        gs = [g for bundle in grads for g in bundle.arrays()]
        params = [p for net in self.nets for p in net.params()]
        if len(gs) != len(params):
            raise ConfigurationError("gradient bundles do not match optimizer networks")
        for g in gs:
            if not np.all(np.isfinite(g)):
                raise NumericError("non-finite gradient in optimizer step")
        self.t += 1
        lr = self.base_lr * anneal
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, gs, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)
