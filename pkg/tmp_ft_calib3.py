import sys
import numpy as np
import mtdswarm.federated as fed
from mtdswarm.config import ScenarioConfig
from mtdswarm.runner import make_policy, evaluate

scenario_kind = sys.argv[1]
strategy, kind = scenario_kind.split(":")
ema = float(sys.argv[2])
floor = float(sys.argv[3])
seeds = [int(s) for s in sys.argv[4].split(",")]


def per_tensor_clip(grads, max_norm):
    out = {}
    for k, g in grads.items():
        norm = float(np.sqrt(np.sum(g * g)))
        out[k] = g * (max_norm / norm) if norm > max_norm else g
    return out


fed.clip_gradients = per_tensor_clip

# floor the credit normalizer
import math
class FlooredCredit(fed.CreditAssigner):
    def credit(self, rewards):
        omega, _ = fed.compute_returns(rewards, self.gamma)
        if self.seen == 0:
            self.baseline[:] = omega
            self.var = float(np.mean((omega - self.baseline) ** 2)) or 1.0
        advantage = omega - self.baseline
        self.baseline += self.ema * (omega - self.baseline)
        self.var += self.ema * (float(np.mean(advantage ** 2)) - self.var)
        self.seen += 1
        scale = max(math.sqrt(max(self.var, 0.0)), 1.0)
        return omega, np.clip(advantage / scale, -self.clip, self.clip)

if floor > 0:
    fed.CreditAssigner = FlooredCredit

cfg = ScenarioConfig(finetune_lr=1e-2, finetune_grad_clip=0.3,
                     baseline_ema=ema)
for seed in seeds:
    res = fed.run_training(cfg, seed, strategy, kind)
    ev = evaluate(cfg, strategy, kind, make_policy("learned", res.params),
                  [1, 2, 3, 4, 5], 2)
    print(f"{strategy}:{kind} ema={ema} floor={floor} seed={seed} "
          f"mit={ev.mitigation().mean():.4f} cost={ev.costs().mean():.1f} "
          f"ret={ev.returns().mean():.1f}", flush=True)
