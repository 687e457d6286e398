"""Pre-warm the acceptance training cache (parallel over scenario-seed cells)."""

import concurrent.futures
import os
import sys
import time
from pathlib import Path

import numpy as np

CACHE = Path(__file__).resolve().parent / ".acceptance_cache"


def train_one(job):
    strategy, kind, seed = job
    from mtdswarm.checkpoint import load_checkpoint, save_checkpoint
    from mtdswarm.config import ScenarioConfig
    from mtdswarm.federated import run_training

    stem = CACHE / f"{strategy}_{kind}_seed{seed}"
    ckpt = stem.with_suffix(".ckpt")
    curve = stem.with_suffix(".npz")
    if ckpt.exists() and curve.exists():
        return f"{strategy}:{kind}:s{seed} cached"
    t0 = time.monotonic()
    result = run_training(ScenarioConfig(), seed, strategy, kind)
    returns = np.array([row.mean_return for row in result.episodes])
    save_checkpoint(ckpt, result.params,
                    {"strategy": strategy, "kind": kind, "seed": seed})
    np.savez(curve, mean_return=returns)
    return f"{strategy}:{kind}:s{seed} trained in {time.monotonic() - t0:.0f}s"


def main():
    workers = int(sys.argv[1]) if len(sys.argv) > 1 else 2
    CACHE.mkdir(exist_ok=True)
    jobs = [(s, k, seed)
            for s in ("fixed", "random", "greedy")
            for k in ("node", "link")
            for seed in (1, 2, 3, 4, 5)]
    with concurrent.futures.ProcessPoolExecutor(workers) as pool:
        for msg in pool.map(train_one, jobs):
            print(msg, flush=True)


if __name__ == "__main__":
    main()
