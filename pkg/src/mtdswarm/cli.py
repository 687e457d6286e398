"""Command-line entry point: train, eval, and sweep.

Owns all file formats. Every default output is reproducible from
(config, seed, command line); wall-clock timings go to an opt-in sidecar.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import ConfigError, load_config, parse_overrides, serialize_config
from .federated import run_training
from .runner import evaluate, make_policy, parse_policy_name, trace_records

CSV_SCHEMA = ("episode,agent,return,mitigation_rate,mean_recovery_s,"
              "energy_J,cumulative_cost,agg_round")
CSV_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

STRATEGIES = ("fixed", "random", "greedy")
KINDS = ("node", "link")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return ""
        return repr(x)
    return str(x)


def _write_metrics_csv(path, rows):
    lines = [f"# mtdswarm metrics schema v{CSV_VERSION}: {CSV_SCHEMA}",
             CSV_SCHEMA]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _episode_csv_rows(episode_rows):
    out = []
    for row in episode_rows:
        out.append((row.episode, "mean", row.mean_return, row.mitigation_rate,
                    row.mean_recovery, row.energy, row.cumulative_cost,
                    row.agg_round))
    return out


def _summary_stats(values):
    values = np.asarray([v for v in values if not (isinstance(v, float)
                                                   and math.isnan(v))],
                        dtype=float)
    if values.size == 0:
        return {"mean": None, "std": None, "n": 0}
    return {"mean": float(values.mean()), "std": float(values.std()),
            "n": int(values.size)}


def _write_json(path, payload):
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def _parse_seed_range(raw: str):
    """'3' -> [3]; '1..5' -> [1, 2, 3, 4, 5]."""
    if ".." in raw:
        lo, hi = raw.split("..", 1)
        lo, hi = int(lo), int(hi)
        if hi < lo:
            raise UsageError(f"empty seed range {raw!r}")
        return list(range(lo, hi + 1))
    return [int(raw)]


def _load_cfg(args):
    overrides = parse_overrides(args.set or [])
    return load_config(args.config, overrides)


# -- train -------------------------------------------------------------------

def cmd_train(args) -> int:
    cfg = _load_cfg(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.cfg").write_text(serialize_config(cfg), encoding="utf-8")

    timings = []
    last = time.monotonic()

    def on_episode(row):
        nonlocal last
        now = time.monotonic()
        timings.append((row.episode, (now - last) * 1000.0))
        last = now
        if args.progress and row.episode % args.progress == 0:
            print(f"episode {row.episode}: return {row.mean_return:.2f} "
                  f"mitigation {row.mitigation_rate:.4f}", flush=True)

    result = run_training(cfg, args.seed, args.attacker, args.attack_kind,
                          on_episode=on_episode)

    _write_metrics_csv(out / "metrics.csv", _episode_csv_rows(result.episodes))
    if args.timing:
        lines = ["episode,wall_ms"]
        lines += [f"{ep},{ms:.3f}" for ep, ms in timings]
        (out / "timing.csv").write_text("\n".join(lines) + "\n",
                                        encoding="utf-8")

    with open(out / "rounds.jsonl", "w", encoding="utf-8") as fh:
        for r in result.rounds:
            fh.write(json.dumps({"round": r.round_index, "episode": r.episode,
                                 "rbars": r.rbars, "weights": r.weights},
                                sort_keys=True) + "\n")

    meta = {"attacker": args.attacker, "attack_kind": args.attack_kind,
            "seed": args.seed, "episodes": cfg.max_episodes}
    save_checkpoint(out / "checkpoint_final.ckpt", result.params, meta)
    save_checkpoint(out / "checkpoint_latest.ckpt", result.params, meta)

    tail = result.episodes[-min(100, len(result.episodes)):]
    summary = {
        "scenario": {"attacker": args.attacker, "attack_kind": args.attack_kind},
        "seed": args.seed,
        "episodes": cfg.max_episodes,
        "complete": True,
        "final": {
            "mean_return": _summary_stats([r.mean_return for r in tail]),
            "mitigation_rate": _summary_stats([r.mitigation_rate for r in tail]),
            "mean_recovery_s": _summary_stats([r.mean_recovery for r in tail]),
            "energy_J": _summary_stats([r.energy for r in tail]),
            "cumulative_cost": _summary_stats([r.cumulative_cost for r in tail]),
        },
    }
    _write_json(out / "summary.json", summary)
    return EXIT_OK


# -- eval --------------------------------------------------------------------

def cmd_eval(args) -> int:
    cfg = _load_cfg(args)
    kind, period = parse_policy_name(args.policy)
    params_list = None
    meta = {}
    if kind == "learned":
        if not args.checkpoint:
            raise UsageError("--checkpoint is required for --policy learned")
        params_list, meta = load_checkpoint(args.checkpoint)
        if len(params_list) != cfg.n_uavs:
            raise CheckpointError(
                f"checkpoint holds {len(params_list)} agents, config expects "
                f"{cfg.n_uavs}")
    act = make_policy(kind, params_list, period, stochastic=args.stochastic_eval)
    seeds = _parse_seed_range(args.seeds)
    result = evaluate(cfg, args.attacker, args.attack_kind, act, seeds,
                      args.episodes, keep_traces=bool(args.dump_trace))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.dump_trace:
        with open(out / "eval_trace.jsonl", "w", encoding="utf-8") as fh:
            for ep in result.episodes:
                for record in trace_records(ep):
                    fh.write(json.dumps(record, sort_keys=True) + "\n")
    rows = []
    for idx, ep in enumerate(result.episodes, start=1):
        m = ep.metrics
        rows.append((idx, "mean", m.mean_return, m.mitigation_rate,
                     m.mean_recovery, m.energy, m.cumulative_cost, 0))
    _write_metrics_csv(out / "eval_metrics.csv", rows)

    summary = {
        "scenario": {"attacker": args.attacker, "attack_kind": args.attack_kind},
        "policy": args.policy,
        "stochastic": bool(args.stochastic_eval),
        "checkpoint_meta": meta,
        "seeds": seeds,
        "episodes_per_seed": args.episodes,
        "complete": True,
        "mitigation_rate": _summary_stats(result.mitigation()),
        "mean_recovery_s": _summary_stats(result.mean_recoveries()),
        "energy_J": _summary_stats(result.energies()),
        "cumulative_cost": _summary_stats(result.costs()),
        "mean_return": _summary_stats(result.returns()),
        "cumcost_curve": [float(v) for v in result.mean_cumcost_curve()],
    }
    _write_json(out / "eval_summary.json", summary)
    return EXIT_OK


# -- sweep -------------------------------------------------------------------

def _scenario_list(raw):
    if not raw:
        return [(s, k) for s in STRATEGIES for k in KINDS]
    out = []
    for token in raw.split(","):
        token = token.strip()
        try:
            strategy, kind = token.split(":")
        except ValueError:
            raise UsageError(f"scenario {token!r} is not strategy:kind")
        if strategy not in STRATEGIES or kind not in KINDS:
            raise UsageError(f"unknown scenario {token!r}")
        out.append((strategy, kind))
    return out


def _sweep_one(payload):
    """Worker: train + eval one (strategy, kind, seed) cell."""
    (strategy, kind, seed, config_path, set_pairs, out_dir, episodes,
     eval_seeds, eval_episodes) = payload
    run_dir = Path(out_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    train_args = argparse.Namespace(
        config=config_path, set=set_pairs, seed=seed, attacker=strategy,
        attack_kind=kind, out=str(run_dir), timing=False, progress=0)
    cmd_train(train_args)
    eval_args = argparse.Namespace(
        config=config_path, set=set_pairs, checkpoint=str(
            run_dir / "checkpoint_final.ckpt"),
        policy="learned", seeds=eval_seeds, episodes=eval_episodes,
        attacker=strategy, attack_kind=kind, stochastic_eval=False,
        dump_trace=False, out=str(run_dir))
    cmd_eval(eval_args)
    return str(run_dir)


def cmd_sweep(args) -> int:
    cfg = _load_cfg(args)  # validated once up front
    scenarios = _scenario_list(args.scenarios)
    seeds = _parse_seed_range(args.seeds)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    jobs = []
    for strategy, kind in scenarios:
        for seed in seeds:
            run_dir = out / "runs" / f"{strategy}_{kind}_seed{seed}"
            jobs.append((strategy, kind, seed, args.config, args.set or [],
                         str(run_dir), cfg.max_episodes, args.eval_seeds,
                         args.eval_episodes))

    manifest = {"scenarios": [f"{s}:{k}" for s, k in scenarios],
                "seeds": seeds, "runs": []}
    statuses = {}
    try:
        if args.workers > 1:
            with concurrent.futures.ProcessPoolExecutor(args.workers) as pool:
                futures = {pool.submit(_sweep_one, job): job for job in jobs}
                for fut in concurrent.futures.as_completed(futures):
                    job = futures[fut]
                    key = (job[0], job[1], job[2])
                    try:
                        fut.result()
                        statuses[key] = "complete"
                    except Exception as exc:   # worker failure is per-run
                        statuses[key] = f"failed: {exc}"
        else:
            for job in jobs:
                key = (job[0], job[1], job[2])
                try:
                    _sweep_one(job)
                    statuses[key] = "complete"
                except Exception as exc:
                    statuses[key] = f"failed: {exc}"
    except KeyboardInterrupt:
        pass  # fall through: whatever is missing gets flagged incomplete

    comparison = []
    for strategy, kind in scenarios:
        per_seed = []
        complete = True
        for seed in seeds:
            run_dir = out / "runs" / f"{strategy}_{kind}_seed{seed}"
            status = statuses.get((strategy, kind, seed), "incomplete")
            manifest["runs"].append({
                "scenario": f"{strategy}:{kind}", "seed": seed,
                "dir": str(run_dir.relative_to(out)), "status": status})
            summary_path = run_dir / "eval_summary.json"
            if status == "complete" and summary_path.exists():
                per_seed.append(json.loads(summary_path.read_text()))
            else:
                complete = False
        scenario_summary = {
            "scenario": f"{strategy}:{kind}",
            "seeds": seeds,
            "complete": complete,
            "n_runs": len(per_seed),
        }
        for key in ("mitigation_rate", "mean_recovery_s", "energy_J",
                    "cumulative_cost", "mean_return"):
            vals = [s[key]["mean"] for s in per_seed
                    if s[key]["mean"] is not None]
            scenario_summary[key] = _summary_stats(vals)
        if per_seed:
            curves = np.array([s["cumcost_curve"] for s in per_seed])
            scenario_summary["cumcost_curve"] = [float(v)
                                                 for v in curves.mean(axis=0)]
        comparison.append(scenario_summary)
        summaries_dir = out / "summaries"
        summaries_dir.mkdir(exist_ok=True)
        _write_json(summaries_dir / f"{strategy}_{kind}.json", scenario_summary)

    _write_json(out / "sweep_manifest.json", manifest)
    rows = [(i + 1, row["scenario"],
             row["mitigation_rate"]["mean"], row["mean_recovery_s"]["mean"],
             row["energy_J"]["mean"], row["cumulative_cost"]["mean"],
             row["mean_return"]["mean"], row["complete"])
            for i, row in enumerate(comparison)]
    lines = ["scenario_id,scenario,mitigation_rate,mean_recovery_s,energy_J,"
             "cumulative_cost,mean_return,complete"]
    for row in rows:
        lines.append(",".join("" if v is None else str(v) for v in row))
    (out / "comparison.csv").write_text("\n".join(lines) + "\n",
                                        encoding="utf-8")
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="mtdswarm",
                     description="UAV swarm DoS-defense simulator and trainer")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="scenario config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key (repeatable)")

    train = sub.add_parser("train", help="train defense policies")
    common(train)
    train.add_argument("--seed", type=int, default=1)
    train.add_argument("--attacker", choices=STRATEGIES, default="fixed")
    train.add_argument("--attack-kind", choices=KINDS, default="node")
    train.add_argument("--out", required=True)
    train.add_argument("--timing", action="store_true",
                       help="also write wall-clock timing.csv (not reproducible)")
    train.add_argument("--progress", type=int, default=0, metavar="N",
                       help="print a progress line every N episodes")
    train.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="evaluate a checkpoint or baseline")
    common(ev)
    ev.add_argument("--checkpoint", default=None)
    ev.add_argument("--policy", default="learned",
                    help="learned | none | random | periodic:<k>")
    ev.add_argument("--seeds", default="1..10",
                    help="seed or inclusive range A..B")
    ev.add_argument("--episodes", type=int, default=10,
                    help="episodes per seed")
    ev.add_argument("--attacker", choices=STRATEGIES, default="fixed")
    ev.add_argument("--attack-kind", choices=KINDS, default="node")
    ev.add_argument("--stochastic-eval", action="store_true",
                    help="sample actions instead of argmax")
    ev.add_argument("--dump-trace", action="store_true",
                    help="also write per-step records to eval_trace.jsonl")
    ev.add_argument("--out", required=True)
    ev.set_defaults(func=cmd_eval)

    sweep = sub.add_parser("sweep", help="train+eval the scenario grid")
    common(sweep)
    sweep.add_argument("--seeds", default="1..3")
    sweep.add_argument("--scenarios", default=None,
                       help="comma list like fixed:node,greedy:link (default all 6)")
    sweep.add_argument("--workers", type=int, default=1)
    sweep.add_argument("--eval-seeds", default="1..5")
    sweep.add_argument("--eval-episodes", type=int, default=2)
    sweep.add_argument("--out", required=True)
    sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # runtime failures map to exit code 2
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
