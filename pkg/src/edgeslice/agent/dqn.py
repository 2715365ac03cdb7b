"""DQN agent: epsilon-greedy acting, prioritized replay, soft target updates."""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Mapping

import numpy as np
import yaml

from ..scenario import ConfigError
from .qnet import Adam, QNetwork, soft_update
from .replay import Experience, PrioritizedReplay


@dataclass(frozen=True)
class Hyperparams:
    gamma: float = 0.99
    lr: float = 1e-3
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_steps: int = 20_000
    tau: float = 0.005
    batch_size: int = 64
    buffer_capacity: int = 50_000
    train_start: int = 1_000
    alpha_prio: float = 0.6
    beta_start: float = 0.4
    beta_end: float = 1.0
    hidden: tuple[int, ...] = (128, 128)
    grad_clip: float = 10.0
    train_every: int = 1
    reward_scale: float = 1.0
    max_steps: int = 40_000
    plateau_window: int = 100
    plateau_tol: float = 0.01

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ConfigError(f"must lie in (0, 1), got {self.gamma}", key="gamma")
        if not 0 < self.tau <= 1:
            raise ConfigError(f"must lie in (0, 1], got {self.tau}", key="tau")
        for k in ("eps_start", "eps_end"):
            if not 0 <= getattr(self, k) <= 1:
                raise ConfigError("must lie in [0, 1]", key=k)
        for k in ("batch_size", "buffer_capacity", "eps_decay_steps", "max_steps",
                  "train_every"):
            if getattr(self, k) < 1:
                raise ConfigError("must be >= 1", key=k)
        if self.train_start < self.batch_size:
            raise ConfigError("must be >= batch_size", key="train_start")

    def epsilon(self, step: int) -> float:
        frac = min(step / self.eps_decay_steps, 1.0)
        return self.eps_start + frac * (self.eps_end - self.eps_start)

    def beta(self, step: int) -> float:
        frac = min(step / self.max_steps, 1.0)
        return self.beta_start + frac * (self.beta_end - self.beta_start)


def hyperparams_from_dict(doc: Mapping | None) -> Hyperparams:
    doc = dict(doc or {})
    known = {f.name: f for f in fields(Hyperparams)}
    kwargs = {}
    for k, v in doc.items():
        if k not in known:
            raise ConfigError("unknown key", key=k)
        default = known[k].default
        try:
            if k == "hidden":
                kwargs[k] = tuple(int(x) for x in v)
            elif isinstance(default, int):
                kwargs[k] = int(v)
            else:
                kwargs[k] = float(v)
        except (TypeError, ValueError):
            raise ConfigError(f"bad value {v!r}", key=k) from None
    return Hyperparams(**kwargs)


def load_hyperparams(text: str) -> Hyperparams:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"parse failure: {e}") from None
    if doc is not None and not isinstance(doc, Mapping):
        raise ConfigError("top level must be a mapping")
    return hyperparams_from_dict(doc)


def select_action(q_values, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy; ``np.argmax`` breaks ties toward the lowest index."""
    if not 0 <= epsilon <= 1:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    q = np.asarray(q_values)
    if rng.random() < epsilon:
        return int(rng.integers(q.size))
    return int(np.argmax(q))


def td_targets(target_net: QNetwork, rewards, next_states, dones, gamma: float) -> np.ndarray:
    nq = target_net.forward(next_states)
    return np.asarray(rewards) + gamma * (1.0 - np.asarray(dones)) * nq.max(axis=1)


def td_loss_and_grads(qnet: QNetwork, states, actions, targets, weights):
    """Importance-weighted mean squared TD error and its parameter gradients.

    Returns ``(loss, grads, td_errors)`` with grads in ``qnet.params`` order.
    """
    q, acts = qnet.forward_with_cache(states)
    n = q.shape[0]
    rows = np.arange(n)
    td = q[rows, actions] - targets
    loss = float(np.mean(weights * td * td))
    g = np.zeros_like(q)
    g[rows, actions] = 2.0 * weights * td / n
    return loss, qnet.backward(acts, g), td


class DQNAgent:
    def __init__(self, obs_dim: int, n_actions: int, hyper: Hyperparams,
                 rng: np.random.Generator):
        self.hyper = hyper
        self.rng = rng
        self.n_actions = int(n_actions)
        self.qnet = QNetwork([obs_dim, *hyper.hidden, n_actions], rng)
        self.target = self.qnet.copy()
        self.optim = Adam(lr=hyper.lr, clip_norm=hyper.grad_clip)
        self.buffer = PrioritizedReplay(hyper.buffer_capacity, obs_dim, hyper.alpha_prio)
        self.steps = 0
        self.updates = 0

    @property
    def epsilon(self) -> float:
        return self.hyper.epsilon(self.steps)

    def act(self, obs, greedy: bool = False) -> int:
        eps = 0.0 if greedy else self.epsilon
        return select_action(self.qnet.forward(obs), eps, self.rng)

    def remember(self, s, a, r, s2, done) -> None:
        self.buffer.add(Experience(np.asarray(s), int(a), float(r) * self.hyper.reward_scale,
                                   np.asarray(s2), bool(done)))
        self.steps += 1

    def ready(self) -> bool:
        return len(self.buffer) >= self.hyper.train_start

    def train_step(self) -> float:
        if not self.ready():
            raise ValueError(f"buffer holds {len(self.buffer)} < {self.hyper.train_start}")
        return train_step(self.buffer, self.qnet, self.target, self.optim, self.hyper,
                          self.rng, self.steps)


def train_step(buffer: PrioritizedReplay, qnet: QNetwork, target_net: QNetwork, optim: Adam,
               hyper: Hyperparams, rng: np.random.Generator, step: int = 0) -> float:
    """One prioritized mini-batch update of ``qnet`` followed by a soft target update."""
    if len(buffer) < hyper.train_start:
        raise ValueError(f"buffer holds {len(buffer)} < {hyper.train_start}")
    idx, (s, a, r, s2, d), w = buffer.sample(hyper.batch_size, rng, hyper.beta(step))
    y = td_targets(target_net, r, s2, d, hyper.gamma)
    loss, grads, td = td_loss_and_grads(qnet, s, a, y, w)
    if not np.isfinite(loss):
        raise FloatingPointError(f"non-finite loss {loss} at step {step}")
    optim.step(qnet.params, grads)
    buffer.update_priorities(idx, td)
    soft_update(target_net, qnet, hyper.tau)
    return loss
