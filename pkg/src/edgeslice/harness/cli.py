"""Command-line entry point: ``edgeslice {train,eval,sweep,cdf}``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from ..agent.dqn import Hyperparams, load_hyperparams
from ..scenario import ConfigError, load_scenario_file
from .metrics import greedy_qnet_policy, make_baseline, rollout
from .sweeps import SweepSpec, run_sweep, write_cdf, write_rows, write_sweep, _samples
from .training import load_checkpoint, run_training, save_checkpoint, write_curve
from ..env import SliceEnv

log = logging.getLogger("edgeslice")


def _seeds(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("empty seed list")
    return out


def _hyper(path: str | None) -> Hyperparams:
    if path is None:
        return Hyperparams()
    return load_hyperparams(Path(path).read_text(encoding="utf-8"))


def cmd_train(args) -> None:
    scenario = load_scenario_file(args.scenario)
    hyper = _hyper(args.hyper)
    res = run_training(scenario, hyper, args.seed, max_steps=args.max_steps)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out / "checkpoint.txt", res.qnet)
    write_curve(out / "curve.csv", res.curve)
    log.info("trained %d steps, %d episodes", res.agent.steps, len(res.episode_returns))


def cmd_eval(args) -> None:
    scenario = load_scenario_file(args.scenario)
    rows, samples = [], []
    for seed in args.seeds:
        env = SliceEnv(scenario, seed=seed)
        if args.policy == "dqn":
            if not args.checkpoint:
                raise ConfigError("--checkpoint is required for the dqn policy", key="checkpoint")
            policy = greedy_qnet_policy(load_checkpoint(args.checkpoint))
        else:
            policy = make_baseline(args.policy, seed)
        rec, _ = rollout(env, policy, seed)
        rows.append({"value": args.policy, "seed": seed, **rec.row()})
        samples.extend(_samples(args.policy, seed, rec))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_rows(out / "eval_metrics.csv", rows)
    write_rows(out / "eval_samples.csv", samples)


def cmd_sweep(args) -> None:
    scenario = load_scenario_file(args.scenario)
    values = None
    if args.values:
        parts = [v.strip() for v in args.values.split(",") if v.strip()]
        if args.kind == "kappa":
            values = [float(v) for v in parts]
        elif args.kind == "servers":
            values = [int(v) for v in parts]
        else:
            values = parts
    spec = SweepSpec(args.kind, values or (), args.seeds, args.policy, args.checkpoint,
                     args.train_seed)
    result = run_sweep(spec, scenario, _hyper(args.hyper))
    write_sweep(result, args.out, args.kind)


def cmd_cdf(args) -> None:
    with open(args.input, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if rows and args.column not in rows[0]:
        raise ConfigError(f"column not in {list(rows[0])}", key=args.column)
    for flt in args.where or ():
        k, _, v = flt.partition("=")
        rows = [r for r in rows if r.get(k) == v]
    write_cdf(args.out, [float(r[args.column]) for r in rows], args.column)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="edgeslice", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a DQN and write checkpoint + learning curve")
    t.add_argument("--scenario", required=True)
    t.add_argument("--hyper")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--max-steps", type=int)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="roll out a policy over seeds")
    e.add_argument("--scenario", required=True)
    e.add_argument("--policy", default="dqn")
    e.add_argument("--checkpoint")
    e.add_argument("--seeds", type=_seeds, default=[0, 1, 2, 3, 4])
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep", help="kappa / edge-server / ablation sweep")
    s.add_argument("--kind", choices=("kappa", "servers", "ablation"), required=True)
    s.add_argument("--values")
    s.add_argument("--scenario", required=True)
    s.add_argument("--hyper")
    s.add_argument("--policy", default="dqn")
    s.add_argument("--checkpoint")
    s.add_argument("--train-seed", type=int, default=0)
    s.add_argument("--seeds", type=_seeds, default=[0, 1, 2, 3, 4])
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("cdf", help="empirical CDF of one column of a samples CSV")
    c.add_argument("--input", required=True)
    c.add_argument("--column", required=True)
    c.add_argument("--where", action="append", help="KEY=VALUE row filter, repeatable")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_cdf)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ConfigError, ValueError, OSError, FloatingPointError) as e:
        print(f"edgeslice {args.command}: error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
