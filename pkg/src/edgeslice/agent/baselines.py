"""Reference policies the DQN is compared against."""
from __future__ import annotations

import numpy as np

from ..env import CacheOp, SliceEnv
from ..qos import jain_fairness

BASELINES = ("static-equal", "static-cache", "fairness-driven", "greedy-one-step", "random",
             "no-cache")


def _jfi(u: np.ndarray) -> float:
    return jain_fairness(u) if np.any(u > 0) else 0.0


def greedy_action(env: SliceEnv) -> int:
    """Action with the highest immediate reward, found on cloned worlds."""
    best, best_r = 0, -np.inf
    for a in range(env.actions.n):
        r = env.clone().step(a).reward.total
        if r > best_r:
            best, best_r = a, r
    return best


def fairness_action(env: SliceEnv) -> int:
    """Template (no cache op) maximising next-interval JFI of utilities."""
    best, best_j = 0, -np.inf
    for t in range(env.actions.n_templates):
        a = env.actions.encode(t, CacheOp.NOOP)
        j = _jfi(env.clone().step(a).metrics.utility)
        if j > best_j:
            best, best_j = a, j
    return best


def baseline_policy(kind: str, env: SliceEnv, rng: np.random.Generator | None = None) -> int:
    """Action index chosen by a baseline in the current world.

    ``no-cache`` returns the static split; the caller runs it on a scenario
    without edge servers.  ``static-cache`` is the static split with the
    cache-hottest operation every interval.
    """
    if kind in ("static-equal", "no-cache"):
        return env.actions.encode(0, CacheOp.NOOP)
    if kind == "static-cache":
        return env.actions.encode(0, CacheOp.CACHE_HOTTEST)
    if kind == "fairness-driven":
        return fairness_action(env)
    if kind == "greedy-one-step":
        return greedy_action(env)
    if kind == "random":
        if rng is None:
            raise ValueError("random baseline needs an rng")
        return int(rng.integers(env.actions.n))
    raise ValueError(f"unknown baseline {kind!r}")
