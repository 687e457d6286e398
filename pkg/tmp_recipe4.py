import sys
import numpy as np
import mtdswarm.federated as fed
from mtdswarm.config import ScenarioConfig
from mtdswarm.runner import make_policy, evaluate

mode = sys.argv[1]   # pt | glob
recent = int(sys.argv[2])

if mode == "pt":
    def per_tensor_clip(grads, max_norm):
        out = {}
        for k, g in grads.items():
            norm = float(np.sqrt(np.sum(g * g)))
            out[k] = g * (max_norm / norm) if norm > max_norm else g
        return out
    fed.clip_gradients = per_tensor_clip
    cfg = ScenarioConfig(finetune_lr=1e-2, finetune_grad_clip=0.3,
                         finetune_recent_episodes=recent)
else:
    cfg = ScenarioConfig(finetune_lr=5e-3, finetune_grad_clip=1.0,
                         finetune_recent_episodes=recent)

for token in sys.argv[3:]:
    scenario, seed = token.rsplit(":", 1)
    strategy, kind = scenario.split(":")
    seed = int(seed)
    res = fed.run_training(cfg, seed, strategy, kind)
    ev = evaluate(cfg, strategy, kind, make_policy("learned", res.params),
                  [1, 2, 3, 4, 5], 2)
    rec = (np.mean(ev.mean_recoveries()) if len(ev.mean_recoveries())
           else float("nan"))
    print(f"{mode} recent={recent} {strategy}:{kind} seed={seed} "
          f"mit={ev.mitigation().mean():.4f} cost={ev.costs().mean():.1f} "
          f"recovery={rec:.2f} ret={ev.returns().mean():.1f}", flush=True)
