"""Parameter sweeps (cache gain weight, edge-server count, ablation ladder) and CSV export."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..agent.dqn import Hyperparams
from ..agent.qnet import QNetwork
from ..env import SliceEnv
from ..scenario import Scenario, Slice
from .metrics import MetricsRecord, greedy_qnet_policy, make_baseline, rollout
from .training import load_checkpoint, run_training

log = logging.getLogger(__name__)

DEFAULT_VALUES = {
    "kappa": (0.1, 0.4, 0.7, 1.0),
    "servers": (1, 3, 5, 7),
    "ablation": ("baseline", "caching", "dqn", "latency", "throughput", "full"),
}

# Ablation row -> (policy, utility mode, caching enabled)
ABLATION_ROWS = {
    "baseline": ("no-cache", "full", False),
    "caching": ("static-cache", "full", True),
    "dqn": ("dqn", "unshaped", True),
    "latency": ("dqn", "latency", True),
    "throughput": ("dqn", "throughput", True),
    "full": ("dqn", "full", True),
}


@dataclass
class SweepSpec:
    parameter: str  # "kappa" | "servers" | "ablation"
    values: Sequence = ()
    seeds: Sequence[int] = (0, 1, 2, 3, 4)
    policy: str = "dqn"  # "dqn" or a baseline name
    checkpoint: str | None = None  # frozen network; otherwise train one per value
    train_seed: int = 0

    def __post_init__(self):
        if self.parameter not in DEFAULT_VALUES:
            raise ValueError(f"unknown sweep parameter {self.parameter!r}")
        if not self.values:
            self.values = DEFAULT_VALUES[self.parameter]
        if not self.seeds:
            raise ValueError("seed list is empty")
        if not self.values:
            raise ValueError("value list is empty")


@dataclass
class SweepResult:
    rows: list[dict] = field(default_factory=list)  # one per (value, seed)
    samples: list[dict] = field(default_factory=list)  # one per (value, seed, user)

    def summary(self) -> list[dict]:
        """Seed-averaged metric rows, one per swept value, in sweep order."""
        out = []
        seen = []
        for r in self.rows:
            if r["value"] not in seen:
                seen.append(r["value"])
        for v in seen:
            rs = [r for r in self.rows if r["value"] == v]
            avg = {"value": v, "n_seeds": len(rs)}
            for k in rs[0]:
                if k in ("value", "seed"):
                    continue
                avg[k] = float(np.mean([r[k] for r in rs]))
            out.append(avg)
        return out


def variant(scenario: Scenario, parameter: str, value) -> tuple[Scenario, str | None]:
    """Scenario for one sweep point and, for ablation rows, the policy it implies."""
    if parameter == "kappa":
        return scenario.with_kappa(float(value)), None
    if parameter == "servers":
        return scenario.with_edge_servers(int(value)), None
    if value not in ABLATION_ROWS:
        raise ValueError(f"unknown ablation row {value!r}; choose from {tuple(ABLATION_ROWS)}")
    policy, mode, caching = ABLATION_ROWS[value]
    sc = scenario.with_utility_mode(mode)
    if not caching:
        sc = sc.with_edge_servers(0)
    return sc, policy


def run_sweep(spec: SweepSpec, scenario: Scenario, hyper: Hyperparams | None = None,
              networks: dict | None = None) -> SweepResult:
    """Fresh environment per (value, seed), frozen-policy rollout, metrics.

    With ``policy == "dqn"`` and no checkpoint, one network is trained per
    swept value on that value's scenario (``networks`` caches them by value).
    """
    hyper = hyper or Hyperparams()
    networks = {} if networks is None else networks
    frozen = load_checkpoint(spec.checkpoint) if spec.checkpoint else None
    result = SweepResult()
    for value in spec.values:
        sc, implied = variant(scenario, spec.parameter, value)
        kind = implied or spec.policy
        qnet: QNetwork | None = None
        if kind == "dqn":
            if frozen is not None:
                qnet = frozen
            else:
                if value not in networks:
                    log.info("training for %s=%s", spec.parameter, value)
                    networks[value] = run_training(sc, hyper, spec.train_seed).qnet
                qnet = networks[value]
        for seed in spec.seeds:
            env = SliceEnv(sc, seed=int(seed))
            if qnet is not None and qnet.sizes[0] != env.obs_dim:
                raise ValueError(f"checkpoint expects {qnet.sizes[0]} inputs, "
                                 f"environment provides {env.obs_dim}")
            policy = greedy_qnet_policy(qnet) if qnet is not None else make_baseline(kind, seed)
            rec, _ = rollout(env, policy, int(seed))
            result.rows.append({"value": value, "seed": int(seed), **rec.row()})
            result.samples.extend(_samples(value, int(seed), rec))
    key = {v: i for i, v in enumerate(spec.values)}
    result.rows.sort(key=lambda r: (key[r["value"]], r["seed"]))
    result.samples.sort(key=lambda r: (key[r["value"]], r["seed"], r["user"]))
    return result


def _samples(value, seed: int, rec: MetricsRecord) -> list[dict]:
    return [
        {"value": value, "seed": seed, "user": u, "slice": Slice(int(rec.slices[u])).label,
         "throughput_bps": float(rec.user_throughput_bps[u]),
         "latency_s": float(rec.user_latency_s[u]),
         "utility": float(rec.user_utility[u])}
        for u in range(rec.slices.size)
    ]


def fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".10g")
    return str(v)


def write_rows(path, rows: list[dict]) -> None:
    if not rows:
        raise ValueError(f"nothing to write to {path}")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(rows[0]))
        for r in rows:
            w.writerow([fmt(r[k]) for k in rows[0]])


def write_sweep(result: SweepResult, out_dir, prefix: str) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / f"{prefix}_metrics.csv", out / f"{prefix}_summary.csv",
             out / f"{prefix}_samples.csv"]
    write_rows(paths[0], result.rows)
    write_rows(paths[1], result.summary())
    write_rows(paths[2], result.samples)
    return paths


def export_cdf(samples) -> list[tuple[float, float]]:
    """Empirical CDF points ``(x_(i), (i + 1) / n)`` in ascending order."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    if x.size == 0:
        raise ValueError("no samples")
    n = x.size
    return [(float(v), (i + 1) / n) for i, v in enumerate(x)]


def write_cdf(path, samples, column: str = "value") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([column, "cumulative_fraction"])
        for v, p in export_cdf(samples):
            w.writerow([fmt(v), fmt(p)])
