"""
Checking the hand-written backward pass with finite differences
===============================================================

The network and its gradients are written by hand in numpy; no autodiff
framework is involved. Central finite differences over every parameter
confirm the analytic gradient.
"""

import numpy as np

from stampseg import data, net
from stampseg.loss import LossWeights

config = net.ModelConfig(input_dim=3, num_classes=3, num_stages=2,
                         layers_per_stage=2, channels=4)
model = net.init_model(config, seed=0)

rng = np.random.default_rng(0)
feats = rng.standard_normal((9, 3))
target = rng.integers(0, 3, size=9)
ts = data.TimestampSet(np.array([2, 6]), np.array([int(target[2]), int(target[6])]))
weights = LossWeights(alpha=0.15, beta=0.075)

value, grads = net.loss_and_grad(model, feats, target, None, ts, weights)
print(f"loss {value:.6f} over {sum(g.size for g in grads.values())} parameters")

# Perturb every scalar parameter by +/- eps and compare the slope.
eps = 1e-4
worst = 0.0
for key, grad in grads.items():
    flat = model.params[key].reshape(-1)
    for j in range(flat.size):
        keep = flat[j]
        flat[j] = keep + eps
        up = net.loss_value(model, feats, target, None, ts, weights)
        flat[j] = keep - eps
        down = net.loss_value(model, feats, target, None, ts, weights)
        flat[j] = keep
        numeric = (up - down) / (2 * eps)
        analytic = grad.reshape(-1)[j]
        rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-6)
        worst = max(worst, rel)
print(f"worst relative error vs finite differences: {worst:.2e}")
assert worst < 1e-3
print("analytic gradients agree with numeric slopes.")
