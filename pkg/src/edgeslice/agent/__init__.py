"""From-scratch DQN, prioritized replay and baseline policies."""
from .baselines import BASELINES, baseline_policy, fairness_action, greedy_action
from .dqn import (DQNAgent, Hyperparams, load_hyperparams, select_action, td_loss_and_grads,
                  td_targets, train_step)
from .qnet import Adam, QNetwork, forward, soft_update
from .replay import Experience, PrioritizedReplay, SumTree

__all__ = [
    "Adam", "BASELINES", "DQNAgent", "Experience", "Hyperparams", "PrioritizedReplay",
    "QNetwork", "SumTree", "baseline_policy", "fairness_action", "forward", "greedy_action",
    "load_hyperparams", "select_action", "soft_update", "td_loss_and_grads", "td_targets",
    "train_step",
]
