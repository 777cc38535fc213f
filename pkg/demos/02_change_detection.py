"""
Locating action changes between consecutive timestamps
======================================================

Between two annotated frames the action changes exactly once. The split
energy scores every candidate boundary by how tightly the frames on each
side cluster around their own mean; the best split minimizes the sum of
Euclidean distances to the two side means.
"""

import numpy as np

from stampseg import change, data

# A toy video: 12 frames of class A, then 18 of class B, with mild noise.
rng = np.random.default_rng(0)
mu_a, mu_b = np.array([1.0, 0.0]), np.array([0.0, 1.0])
feats = np.vstack([mu_a + 0.1 * rng.standard_normal((12, 2)),
                   mu_b + 0.1 * rng.standard_normal((18, 2))])

# Timestamps at frame 4 (class A) and frame 20 (class B). The true boundary
# is frame 11, the last frame of the left segment.
t = change.s2s_boundary(feats, left=4, right=20)
print("stamp-to-stamp boundary:", t, "(true boundary 11)")

# The forward-backward variant runs two sweeps whose spans lean on the
# previously estimated boundaries, then averages the two estimates.
ts = data.TimestampSet(np.array([4, 20]), np.array([0, 1]))
bounds = change.fb_boundaries(feats, ts, num_frames=30)
print("forward-backward boundary:", bounds.tolist())

# With zero feature noise, detection is exact on whole videos.
spec = data.SyntheticSpec(videos=1, num_classes=4, mean_frames=120, dim=6,
                          noise=0.0, segment_range=(4, 6))
clean_feats, labels = data.generate_synthetic(spec, seed=5)[0]
stamps = data.sample_timestamps(labels, "center", seed=0)
recovered = change.labels_from_boundaries(
    stamps, change.fb_boundaries(clean_feats, stamps, len(labels)), len(labels))
print("noise-free recovery exact:", bool((recovered == labels).all()))

# The uniform baseline ignores features entirely: boundaries sit midway
# between consecutive timestamps. Cheap, but durations come out wrong
# whenever the annotated frames are off-center.
print("uniform boundaries:", change.uniform_boundaries(ts, 30).tolist(),
      "(midpoint of 4 and 20 is 12)")

# There is also a probability-based variant for a trained model's output:
# it maximizes the mean probability of the left class before the split plus
# the mean probability of the right class after it.
probs = np.zeros((30, 2))
probs[:12, 0] = 0.9; probs[:12, 1] = 0.1
probs[12:, 0] = 0.1; probs[12:, 1] = 0.9
t = change.s2s_boundary_prob(probs, left_class=0, left=4, right_class=1, right=20)
print("probability-based boundary:", t)
