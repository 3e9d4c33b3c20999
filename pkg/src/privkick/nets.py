"""Feed-forward ReLU networks with hand-written backward passes.

Policy networks end in an eta-floored softmax,
``pi = (1 - m * eta) * softmax(logits) + eta``, so every action keeps at
least probability eta.  Value networks end in a single linear unit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Sequence

import numpy as np

DEFAULT_ETA = 1e-3


class ShapeMismatch(ValueError):
    pass


@dataclass
class NetworkParameters:
    weights: List[np.ndarray]  # each (fan_in, fan_out)
    biases: List[np.ndarray]
    head: str = "policy"
    eta: float = 0.0

    def __post_init__(self):
        if self.head not in ("policy", "linear"):
            raise ValueError(f"unknown head {self.head!r}")
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ShapeMismatch("need one bias per weight matrix")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ShapeMismatch(f"layer {i}: weight {w.shape}, bias {b.shape}")
            if i and self.weights[i - 1].shape[1] != w.shape[0]:
                raise ShapeMismatch(f"layer {i} does not chain from layer {i - 1}")
        if self.head == "policy" and not 0.0 <= self.eta * self.out_dim <= 1.0:
            raise ValueError(f"eta={self.eta} infeasible for {self.out_dim} actions")

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def sizes(self) -> List[int]:
        return [self.in_dim] + [w.shape[1] for w in self.weights]

    def tensors(self) -> List[np.ndarray]:
        return [t for pair in zip(self.weights, self.biases) for t in pair]

    def copy(self) -> "NetworkParameters":
        return NetworkParameters(
            [w.copy() for w in self.weights], [b.copy() for b in self.biases], self.head, self.eta
        )

    def zeros_like(self) -> "NetworkParameters":
        return NetworkParameters(
            [np.zeros_like(w) for w in self.weights], [np.zeros_like(b) for b in self.biases], self.head, self.eta
        )

    def flat(self) -> np.ndarray:
        return np.concatenate([t.ravel() for t in self.tensors()])

    def set_flat(self, v: np.ndarray) -> None:
        i = 0
        for t in self.tensors():
            n = t.size
            t[...] = v[i : i + n].reshape(t.shape)
            i += n

    def to_dict(self) -> dict:
        return {
            "head": self.head,
            "eta": self.eta,
            "layers": [
                {"shape": list(w.shape), "weight": w.ravel().tolist(), "bias": b.tolist()}
                for w, b in zip(self.weights, self.biases)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkParameters":
        ws, bs = [], []
        for layer in d["layers"]:
            ws.append(np.asarray(layer["weight"], dtype=np.float64).reshape(layer["shape"]))
            bs.append(np.asarray(layer["bias"], dtype=np.float64))
        return cls(ws, bs, d["head"], d["eta"])


def init_params(
    sizes: Sequence[int], rng: np.random.Generator, head: str = "policy", eta: float = DEFAULT_ETA
) -> NetworkParameters:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases."""
    ws, bs = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        ws.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        bs.append(rng.uniform(-bound, bound, size=fan_out))
    return NetworkParameters(ws, bs, head, eta if head == "policy" else 0.0)


def save_checkpoint(path, nets: dict) -> None:
    Path(path).write_text(json.dumps({name: p.to_dict() for name, p in nets.items()}))


def load_checkpoint(path) -> dict:
    raw = json.loads(Path(path).read_text())
    return {name: NetworkParameters.from_dict(d) for name, d in raw.items()}


@dataclass
class ForwardCache:
    inputs: List[np.ndarray] = field(default_factory=list)  # input to each layer
    pre: List[np.ndarray] = field(default_factory=list)  # hidden pre-activations


def mlp_forward(params: NetworkParameters, x: np.ndarray):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != params.in_dim:
        raise ShapeMismatch(f"observation has dimension {x.shape[-1]}, network expects {params.in_dim}")
    cache = ForwardCache()
    h = x
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        cache.inputs.append(h)
        z = h @ w + b
        if i < last:
            cache.pre.append(z)
            h = np.maximum(z, 0.0)
        else:
            h = z
    return h, cache


def mlp_backward(params: NetworkParameters, cache: ForwardCache, grad_out: np.ndarray) -> NetworkParameters:
    """Gradients of sum(grad_out * output) with respect to every tensor."""
    grads = params.zeros_like()
    g = grad_out
    for i in range(len(params.weights) - 1, -1, -1):
        h = cache.inputs[i]
        if h.ndim == 1:
            grads.weights[i] = np.outer(h, g)
            grads.biases[i] = g.copy()
        else:
            grads.weights[i] = h.T @ g
            grads.biases[i] = g.sum(axis=0)
        if i:
            g = (g @ params.weights[i].T) * (cache.pre[i - 1] > 0.0)
    return grads


def softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class PolicyOutput:
    pi: np.ndarray
    logits: np.ndarray
    probs: np.ndarray  # the softmax before flooring
    cache: ForwardCache


def policy_forward(params: NetworkParameters, observation: np.ndarray) -> PolicyOutput:
    if params.head != "policy":
        raise ShapeMismatch("not a policy network")
    logits, cache = mlp_forward(params, observation)
    s = softmax(logits)
    m = params.out_dim
    pi = (1.0 - m * params.eta) * s + params.eta
    return PolicyOutput(pi, logits, s, cache)


def value_forward(params: NetworkParameters, observation: np.ndarray):
    out, _ = mlp_forward(params, observation)
    return out[..., 0] if out.ndim > 1 else float(out[0])


def value_forward_cached(params: NetworkParameters, observation: np.ndarray):
    out, cache = mlp_forward(params, observation)
    return out[..., 0], cache


def head_backward(probs: np.ndarray, grad_pi: np.ndarray, eta: float) -> np.ndarray:
    """Pull dL/dpi back through the floored softmax to dL/dlogits."""
    m = probs.shape[-1]
    inner = np.sum(probs * grad_pi, axis=-1, keepdims=True)
    return (1.0 - m * eta) * probs * (grad_pi - inner)


def backward(params: NetworkParameters, out: PolicyOutput | ForwardCache, upstream: np.ndarray) -> NetworkParameters:
    """Parameter gradients given dL/dpi (policy output) or dL/dvalue (value cache)."""
    if isinstance(out, PolicyOutput):
        return mlp_backward(params, out.cache, head_backward(out.probs, upstream, params.eta))
    return mlp_backward(params, out, upstream[..., None] if np.ndim(upstream) else np.array([upstream]))


class Adam:
    """Adaptive-moment gradient descent on a NetworkParameters in place."""

    def __init__(self, params: NetworkParameters, lr: float = 3e-4, b1: float = 0.9, b2: float = 0.999, eps: float = 1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m = [np.zeros_like(t) for t in params.tensors()]
        self.v = [np.zeros_like(t) for t in params.tensors()]
        self.t = 0

    def step(self, params: NetworkParameters, grads: NetworkParameters) -> None:
        self.t += 1
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        for p, g, m, v in zip(params.tensors(), grads.tensors(), self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
