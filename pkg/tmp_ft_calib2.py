import sys
import numpy as np
import mtdswarm.federated as fed
from mtdswarm.config import ScenarioConfig
from mtdswarm.runner import make_policy, evaluate

lr, clip = float(sys.argv[1]), float(sys.argv[2])


def per_tensor_clip(grads, max_norm):
    out = {}
    for k, g in grads.items():
        norm = float(np.sqrt(np.sum(g * g)))
        out[k] = g * (max_norm / norm) if norm > max_norm else g
    return out


fed.clip_gradients = per_tensor_clip

cfg = ScenarioConfig(finetune_lr=lr, finetune_grad_clip=clip)
for seed in (1, 2, 3):
    res = fed.run_training(cfg, seed, "greedy", "node")
    ev = evaluate(cfg, "greedy", "node", make_policy("learned", res.params),
                  [1, 2, 3, 4, 5], 2)
    print(f"greedy:node PT lr={lr} clip={clip} seed={seed} "
          f"mit={ev.mitigation().mean():.4f} cost={ev.costs().mean():.1f} "
          f"ret={ev.returns().mean():.1f}", flush=True)
