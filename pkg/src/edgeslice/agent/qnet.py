"""Feed-forward Q-network with hand-written backprop and an Adam optimiser."""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

CHECKPOINT_MAGIC = "# edgeslice q-network checkpoint v1"


class QNetwork:
    """Affine / ReLU stack with a linear output layer.

    ``weights[i]`` has shape ``(sizes[i], sizes[i + 1])``; inputs are row
    vectors, so a batch is ``(batch, sizes[0])``.
    """

    def __init__(self, sizes, rng: np.random.Generator | None = None):
        self.sizes = [int(s) for s in sizes]
        if len(self.sizes) < 2 or min(self.sizes) < 1:
            raise ValueError(f"bad layer sizes {sizes}")
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            if rng is None:
                self.weights.append(np.zeros((fan_in, fan_out)))
                self.biases.append(np.zeros(fan_out))
            else:
                self.weights.append(rng.uniform(-bound, bound, (fan_in, fan_out)))
                self.biases.append(rng.uniform(-bound, bound, fan_out))

    @property
    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "QNetwork":
        net = QNetwork(self.sizes)
        net.weights = [w.copy() for w in self.weights]
        net.biases = [b.copy() for b in self.biases]
        return net

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.sizes[0]:
            raise ValueError(f"observation has dimension {x.shape[-1]}, expected {self.sizes[0]}")
        return x

    def forward(self, x) -> np.ndarray:
        x = self._check(x)
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = np.maximum(h, 0.0)
        return h

    __call__ = forward

    def forward_with_cache(self, x):
        x = self._check(x)
        acts = [x]
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = np.maximum(h, 0.0)
            acts.append(h)
        return h, acts

    def backward(self, acts, grad_out: np.ndarray) -> list[np.ndarray]:
        """Gradients of a scalar loss given ``dL/d(output)``, in ``params`` order."""
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.weights)
        g = grad_out
        for i in range(len(self.weights) - 1, -1, -1):
            grads_w[i] = acts[i].T @ g
            grads_b[i] = g.sum(axis=0)
            if i > 0:
                g = (g @ self.weights[i].T) * (acts[i] > 0)
        out = []
        for gw, gb in zip(grads_w, grads_b):
            out += [gw, gb]
        return out

    # -- checkpoint -------------------------------------------------------
    def dumps(self) -> str:
        buf = io.StringIO()
        buf.write(CHECKPOINT_MAGIC + "\n")
        buf.write("layers " + " ".join(str(s) for s in self.sizes) + "\n")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            for name, arr in ((f"W{i}", w), (f"b{i}", b)):
                a2 = arr.reshape(arr.shape[0], -1) if arr.ndim == 2 else arr.reshape(1, -1)
                buf.write(f"param {name} " + " ".join(str(d) for d in arr.shape) + "\n")
                for row in a2:
                    buf.write(" ".join(format(float(v), ".17g") for v in row) + "\n")
        return buf.getvalue()

    @classmethod
    def loads(cls, text: str) -> "QNetwork":
        lines = text.splitlines()
        if not lines or lines[0].strip() != CHECKPOINT_MAGIC:
            raise ValueError("not a q-network checkpoint")
        head = lines[1].split()
        if head[0] != "layers":
            raise ValueError("missing layer header")
        net = cls([int(s) for s in head[1:]])
        pos = 2
        for i in range(len(net.weights)):
            for target in (net.weights, net.biases):
                parts = lines[pos].split()
                shape = tuple(int(d) for d in parts[2:])
                pos += 1
                rows = shape[0] if len(shape) == 2 else 1
                vals = np.array([float(v) for ln in lines[pos:pos + rows] for v in ln.split()])
                pos += rows
                arr = vals.reshape(shape)
                if arr.shape != target[i].shape:
                    raise ValueError(f"parameter shape {arr.shape} != {target[i].shape}")
                target[i] = arr
        return net


def forward(qnet: QNetwork, observation) -> np.ndarray:
    return qnet.forward(observation)


def soft_update(target: QNetwork, online: QNetwork, tau: float) -> QNetwork:
    """In place: ``theta_target <- tau * theta + (1 - tau) * theta_target``."""
    if target.sizes != online.sizes:
        raise ValueError(f"architecture mismatch {target.sizes} vs {online.sizes}")
    for t, o in zip(target.params, online.params):
        t *= 1.0 - tau
        t += tau * o
    return target


@dataclass
class Adam:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float | None = 10.0

    def __post_init__(self):
        self.m = None
        self.v = None
        self.t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> float:
        """Update ``params`` in place; returns the pre-clip gradient norm."""
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
        scale = 1.0
        if self.clip_norm is not None and norm > self.clip_norm:
            scale = self.clip_norm / norm
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            g = g * scale
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
        return norm
