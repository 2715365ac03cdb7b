"""Episode rollouts and their aggregate metrics."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..agent.baselines import BASELINES, baseline_policy
from ..agent.qnet import QNetwork
from ..env import SliceEnv, StepMetrics
from ..qos import SlaReport, jain_fairness, sla_satisfaction
from ..scenario import SLICES

Policy = Callable[[SliceEnv, np.ndarray], int]


@dataclass
class MetricsRecord:
    slices: np.ndarray
    user_throughput_bps: np.ndarray
    user_latency_s: np.ndarray
    user_utility: np.ndarray
    jfi: dict[str, float]
    sla: dict[str, float]
    hit_ratio: float
    episode_return: float

    def row(self) -> dict[str, float]:
        out = {
            "mean_latency_ms": float(np.mean(self.user_latency_s)) * 1e3,
            "median_latency_ms": float(np.median(self.user_latency_s)) * 1e3,
            "mean_throughput_mbps": float(np.mean(self.user_throughput_bps)) / 1e6,
            "median_throughput_mbps": float(np.median(self.user_throughput_bps)) / 1e6,
            "sla_overall": self.sla["overall"],
        }
        for s in SLICES:
            out[f"sla_{s.label}"] = self.sla[s.label]
        for s in SLICES:
            out[f"jfi_{s.label}"] = self.jfi[s.label]
        out["hit_ratio"] = self.hit_ratio
        out["episode_return"] = self.episode_return
        return out


def slice_jfi(values: np.ndarray) -> float:
    # An all-zero slice is perfectly (if uselessly) fair.
    return jain_fairness(values) if np.any(values > 0) else 1.0


def aggregate(trace: list[StepMetrics], slices: np.ndarray) -> MetricsRecord:
    """Per-user episode averages, per-slice JFI of mean utilities, SLA fractions."""
    thr = np.mean([m.throughput_bps for m in trace], axis=0)
    lat = np.mean([m.delay_s for m in trace], axis=0)
    util = np.mean([m.utility for m in trace], axis=0)
    jfi = {}
    for s in SLICES:
        mask = slices == s
        jfi[s.label] = slice_jfi(util[mask]) if mask.any() else float("nan")
    sla = sla_satisfaction(SlaReport.concat([m.sla for m in trace]))
    hits = sum(float(m.cache_hits.sum()) for m in trace)
    reqs = sum(float(m.cache_requests.sum()) for m in trace)
    ret = float(sum(m.reward.total for m in trace))
    return MetricsRecord(slices, thr, lat, util, jfi, sla, hits / reqs if reqs else 0.0, ret)


def rollout(env: SliceEnv, policy: Policy, seed: int | None = None):
    """Run one full episode; returns ``(MetricsRecord, trace)``."""
    obs = env.reset(seed)
    trace = []
    done = False
    while not done:
        res = env.step(policy(env, obs))
        trace.append(res.metrics)
        obs = res.observation
        done = res.done
    return aggregate(trace, env.slices), trace


def greedy_qnet_policy(qnet: QNetwork) -> Policy:
    return lambda env, obs: int(np.argmax(qnet.forward(obs)))


def make_baseline(kind: str, seed: int = 0) -> Policy:
    if kind not in BASELINES:
        raise ValueError(f"unknown baseline {kind!r}; choose from {BASELINES}")
    rng = np.random.default_rng(seed)
    return lambda env, obs: baseline_policy(kind, env, rng)
