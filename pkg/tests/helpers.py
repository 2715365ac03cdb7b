"""Shared fixtures for the agent and acceptance suites."""
import numpy as np

from edgeslice.agent import DQNAgent, Hyperparams

# Two states, two actions; action a moves the world to state a.
TOY_REWARDS = np.array([[0.5, 0.0],
                        [0.0, 2.0]])
TOY_GAMMA = 0.5


def toy_q_star(rewards=TOY_REWARDS, gamma=TOY_GAMMA, iters=2000) -> np.ndarray:
    q = np.zeros_like(rewards)
    for _ in range(iters):
        v = q.max(axis=1)
        q = rewards + gamma * v[None, :]  # next state == action
    return q


def train_toy_dqn(steps: int = 4000, seed: int = 0) -> np.ndarray:
    """Train on uniformly explored transitions; return the learned Q table."""
    hyper = Hyperparams(gamma=TOY_GAMMA, lr=1e-3, eps_start=1.0, eps_end=1.0, tau=0.01,
                        batch_size=32, buffer_capacity=5000, train_start=64,
                        hidden=(16, 16), max_steps=steps)
    rng = np.random.default_rng(seed)
    agent = DQNAgent(2, 2, hyper, rng)
    eye = np.eye(2)
    s = 0
    for _ in range(steps):
        a = agent.act(eye[s])
        agent.remember(eye[s], a, TOY_REWARDS[s, a], eye[a], False)
        if agent.ready():
            agent.train_step()
        s = a
    return agent.qnet.forward(eye)
