"""DQN training loop, checkpoints and learning curves."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..agent.dqn import DQNAgent, Hyperparams
from ..agent.qnet import QNetwork
from ..env import SliceEnv
from ..scenario import Scenario, rng_streams

log = logging.getLogger(__name__)

CURVE_HEADER = ("step", "episode", "epsilon", "loss", "episode_return")


def episode_seed(base_seed: int, episode: int) -> int:
    """Per-episode world seed derived from the run seed."""
    return int(np.random.SeedSequence([int(base_seed), int(episode)]).generate_state(1)[0])


@dataclass
class TrainingResult:
    agent: DQNAgent
    curve: list[tuple] = field(default_factory=list)
    episode_returns: list[float] = field(default_factory=list)
    stopped_on_plateau: bool = False

    @property
    def qnet(self) -> QNetwork:
        return self.agent.qnet


def plateaued(returns: list[float], window: int, tol: float) -> bool:
    """Moving average over ``window`` episodes changed by less than ``tol`` (relative)."""
    if len(returns) < 2 * window:
        return False
    cur = float(np.mean(returns[-window:]))
    prev = float(np.mean(returns[-2 * window:-window]))
    return abs(cur - prev) <= tol * max(abs(prev), 1e-12)


def run_training(scenario: Scenario, hyper: Hyperparams, seed: int,
                 max_steps: int | None = None) -> TrainingResult:
    """Train a DQN until the return plateau rule fires or the step budget runs out.

    Every episode starts from a fresh world whose seed derives from ``seed``;
    the agent's weights, exploration and replay sampling use the ``agent``
    stream of the same seed, so a run is reproducible end to end.
    """
    budget = hyper.max_steps if max_steps is None else int(max_steps)
    env = SliceEnv(scenario, seed=episode_seed(seed, 0))
    agent = DQNAgent(env.obs_dim, env.actions.n, hyper, rng_streams(seed)["agent"])
    result = TrainingResult(agent)
    obs = env.observe()
    episode, ep_return = 0, 0.0
    while agent.steps < budget:
        a = agent.act(obs)
        step = env.step(a)
        agent.remember(obs, a, step.reward.total, step.observation, step.done)
        ep_return += step.reward.total
        loss = float("nan")
        if agent.ready() and agent.steps % hyper.train_every == 0:
            loss = agent.train_step()
        obs = step.observation
        done_return = None
        if step.done:
            done_return = ep_return
            result.episode_returns.append(ep_return)
            episode += 1
            ep_return = 0.0
            obs = env.reset(episode_seed(seed, episode))
        result.curve.append((agent.steps, episode, agent.epsilon, loss, done_return))
        if step.done and agent.epsilon <= hyper.eps_end and plateaued(
                result.episode_returns, hyper.plateau_window, hyper.plateau_tol):
            result.stopped_on_plateau = True
            log.info("return plateau after %d episodes", episode)
            break
    return result


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if np.isnan(v) else format(v, ".10g")
    return str(v)


def write_curve(path, curve) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_HEADER)
        for row in curve:
            w.writerow([_fmt(v) for v in row])


def save_checkpoint(path, qnet: QNetwork) -> None:
    Path(path).write_text(qnet.dumps(), encoding="utf-8")


def load_checkpoint(path) -> QNetwork:
    try:
        return QNetwork.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise FileNotFoundError(f"checkpoint not found: {path}") from None
