"""Proportional prioritized experience replay backed by a sum tree."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Experience:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    done: bool


class SumTree:
    """Binary tree over ``capacity`` leaves; each node holds its subtree sum."""

    def __init__(self, capacity: int):
        self.capacity = int(capacity)
        size = 1
        while size < self.capacity:
            size *= 2
        self.leaf0 = size
        self.tree = np.zeros(2 * size)

    def set(self, idx: int, value: float) -> None:
        i = idx + self.leaf0
        self.tree[i] = value
        i //= 2
        while i >= 1:
            self.tree[i] = self.tree[2 * i] + self.tree[2 * i + 1]
            i //= 2

    def set_many(self, idx, values) -> None:
        nodes = np.asarray(idx, dtype=int) + self.leaf0
        self.tree[nodes] = values
        nodes = np.unique(nodes // 2)
        while nodes.size and nodes[0] >= 1:
            self.tree[nodes] = self.tree[2 * nodes] + self.tree[2 * nodes + 1]
            if nodes[0] == 1:
                break
            nodes = np.unique(nodes // 2)

    def get(self, idx: int) -> float:
        return float(self.tree[idx + self.leaf0])

    @property
    def total(self) -> float:
        return float(self.tree[1])

    def find(self, mass: float) -> int:
        """Smallest leaf index whose prefix sum exceeds ``mass``."""
        i = 1
        while i < self.leaf0:
            left = self.tree[2 * i]
            if mass < left:
                i = 2 * i
            else:
                mass -= left
                i = 2 * i + 1
        return min(i - self.leaf0, self.capacity - 1)

    def find_many(self, masses) -> np.ndarray:
        """Vectorised :meth:`find`."""
        mass = np.array(masses, dtype=float)
        i = np.ones(mass.size, dtype=int)
        while i[0] < self.leaf0:
            left = self.tree[2 * i]
            go_left = mass < left
            mass = np.where(go_left, mass, mass - left)
            i = np.where(go_left, 2 * i, 2 * i + 1)
        return np.minimum(i - self.leaf0, self.capacity - 1)


class PrioritizedReplay:
    """Ring buffer sampled with probability ``p_i**alpha / sum_j p_j**alpha``.

    New transitions enter with the current maximum priority so they are seen
    at least once.  Importance weights ``(N P(i))**-beta`` are normalised by
    their batch maximum.
    """

    def __init__(self, capacity: int, obs_dim: int, alpha: float = 0.6,
                 priority_floor: float = 1e-6):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self.alpha = float(alpha)
        self.floor = float(priority_floor)
        self.states = np.zeros((capacity, obs_dim))
        self.next_states = np.zeros((capacity, obs_dim))
        self.actions = np.zeros(capacity, dtype=int)
        self.rewards = np.zeros(capacity)
        self.dones = np.zeros(capacity)
        self.tree = SumTree(capacity)
        self.max_priority = 1.0
        self.next_idx = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def add(self, exp: Experience, priority: float | None = None) -> int:
        i = self.next_idx
        self.states[i] = exp.state
        self.next_states[i] = exp.next_state
        self.actions[i] = exp.action
        self.rewards[i] = exp.reward
        self.dones[i] = float(exp.done)
        p = self.max_priority if priority is None else max(float(priority), self.floor)
        self.max_priority = max(self.max_priority, p)
        self.tree.set(i, p ** self.alpha)
        self.next_idx = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        return i

    def probabilities(self) -> np.ndarray:
        leaves = self.tree.tree[self.tree.leaf0:self.tree.leaf0 + self.size]
        return leaves / leaves.sum()

    def sample(self, batch_size: int, rng: np.random.Generator, beta: float = 0.4):
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        total = self.tree.total
        masses = rng.random(batch_size) * total
        idx = np.minimum(self.tree.find_many(masses), self.size - 1)
        probs = self.tree.tree[idx + self.tree.leaf0] / total
        weights = (self.size * probs) ** (-beta)
        weights /= weights.max()
        batch = (self.states[idx], self.actions[idx], self.rewards[idx],
                 self.next_states[idx], self.dones[idx])
        return idx, batch, weights

    def update_priorities(self, idx, td_errors) -> None:
        p = np.abs(np.asarray(td_errors, dtype=float)) + self.floor
        self.max_priority = max(self.max_priority, float(p.max()))
        # Duplicate indices: the last write wins, as with sequential updates.
        self.tree.set_many(idx, p ** self.alpha)
