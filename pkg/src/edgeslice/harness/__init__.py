"""Training, evaluation sweeps, metrics aggregation and CSV export."""
from .metrics import MetricsRecord, aggregate, greedy_qnet_policy, make_baseline, rollout
from .sweeps import SweepResult, SweepSpec, export_cdf, run_sweep, write_cdf, write_sweep
from .training import load_checkpoint, run_training, save_checkpoint, write_curve

__all__ = [
    "MetricsRecord", "SweepResult", "SweepSpec", "aggregate", "export_cdf",
    "greedy_qnet_policy", "load_checkpoint", "make_baseline", "rollout", "run_sweep",
    "run_training", "save_checkpoint", "write_cdf", "write_curve", "write_sweep",
]
