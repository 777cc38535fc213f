"""
The three training loss terms and their gradients
=================================================

Training combines a masked cross-entropy, a truncated smoothing term on
adjacent log-probability differences, and a confidence term that keeps the
annotated class's probability monotone around its timestamp.
"""

import numpy as np

from stampseg import data, loss

rng = np.random.default_rng(1)


def random_probs(num_frames, num_classes):
    logits = rng.standard_normal((num_frames, num_classes))
    e = np.exp(logits - logits.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


# Cross-entropy over a sparse mask: only annotated frames contribute.
probs = random_probs(10, 4)
target = rng.integers(0, 4, size=10)
full, _ = loss.cls_loss_grad(probs, target)
sparse, grad = loss.cls_loss_grad(probs, target, mask=[2, 7])
print(f"cls over all frames {full:.4f}, over two annotated frames {sparse:.4f}")
print("gradient rows outside the mask are zero:",
      bool((grad[[0, 1, 3, 4, 5, 6, 8, 9]] == 0).all()))

# Time-constant probabilities have nothing to smooth.
flat = np.tile(random_probs(1, 4), (20, 1))
print("tmse on constant probabilities:", loss.tmse_loss_grad(flat)[0])

# Large jumps are clipped, so one outlier frame cannot dominate.
jumpy = flat.copy()
jumpy[10] = random_probs(1, 4)
value, _ = loss.tmse_loss_grad(jumpy, tau=4.0)
print(f"tmse with one jump {value:.5f} (bounded by tau^2 per transition)")

# The confidence term is zero when each annotated class's probability only
# falls while moving away from its timestamp.
num_frames = 15
ts = data.TimestampSet(np.array([3, 11]), np.array([0, 1]))
peaked = np.full((num_frames, 2), 0.5)
for frame, cls in zip(ts.frames, ts.labels):
    peaked[:, cls] = 0.9 * 0.8 ** np.abs(np.arange(num_frames) - frame)
print("conf on peaked columns:", loss.conf_loss_grad(peaked, ts)[0])
print("conf on random columns:",
      f"{loss.conf_loss_grad(random_probs(num_frames, 2), ts)[0]:.5f}")

# The total is a weighted sum; weights mirror the training defaults.
weights = loss.LossWeights(alpha=0.15, beta=0.075, tau=4.0)
total, grads = loss.total_loss_grad(probs, target, None, None, weights)
parts = (loss.cls_loss_grad(probs, target)[0], loss.tmse_loss_grad(probs)[0])
print(f"total {total:.5f} = cls {parts[0]:.5f} + 0.15 * tmse {parts[1]:.5f}")
