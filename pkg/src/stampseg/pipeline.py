"""Training schedules, inference, and corpus evaluation.

Supervision modes
-----------------
timestamps  warm up on the annotated frames only, then regenerate dense
            pseudo-labels from the model's own activations at every step.
full        dense ground-truth labels for every frame.
naive       the annotated frames only, for the whole run.
uniform     dense labels from midpoint boundaries, fixed before training.

The smoothing term always applies; the confidence term applies whenever
timestamps are available. One optimizer step is taken per batch of videos,
with per-video gradients summed in batch order, so a run is a pure function
of the data, the configs, and the seed.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import change, net
from .data import TimestampSet
from .loss import LossWeights
from .metrics import MetricsReport, report

SUPERVISION_MODES = ("timestamps", "full", "naive", "uniform")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    warmup_epochs: int = 30
    lr: float = 0.0005
    batch_size: int = 8
    weights: LossWeights = field(default_factory=LossWeights)
    supervision: str = "timestamps"
    boundary_method: str = "fb"
    normalize_features: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0 <= self.warmup_epochs <= self.epochs:
            raise ValueError("warmup_epochs must lie in [0, epochs]")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not (math.isfinite(self.lr) and self.lr > 0):
            raise ValueError("lr must be finite and positive")
        if self.supervision not in SUPERVISION_MODES:
            raise ValueError(f"unknown supervision mode {self.supervision!r}")
        if self.boundary_method not in change.BOUNDARY_METHODS:
            raise ValueError(f"unknown boundary method {self.boundary_method!r}")


@dataclass
class EpochLog:
    epoch: int
    mean_loss: float
    report: MetricsReport | None = None


def format_log(entries: list[EpochLog]) -> str:
    lines = []
    for e in entries:
        line = f"{e.epoch}\t{e.mean_loss:.6f}"
        if e.report is not None:
            line += "\t" + e.report.line()
        lines.append(line)
    return "".join(line + "\n" for line in lines)


def pseudo_labels(
    outputs: net.StageOutputs,
    timestamps: TimestampSet,
    method: str = "fb",
    normalize: bool = False,
) -> np.ndarray:
    """Dense labels for one video derived from model outputs and its timestamps."""
    num_frames = outputs.penultimate.shape[0]
    if len(timestamps) < 2:
        return change.labels_from_boundaries(
            timestamps, np.empty(0, dtype=np.int64), num_frames
        )
    if method == "s2s_prob":
        probs = outputs.probs[-1]
        frames, classes = timestamps.frames, timestamps.labels
        bounds = np.array(
            [
                change.s2s_boundary_prob(
                    probs, int(classes[i]), int(frames[i]), int(classes[i + 1]), int(frames[i + 1])
                )
                for i in range(len(frames) - 1)
            ],
            dtype=np.int64,
        )
    else:
        feats = outputs.penultimate
        if normalize:
            feats = change.normalize_features(feats)
        if method == "fb":
            bounds = change.fb_boundaries(feats, timestamps, num_frames)
        elif method == "s2s_features":
            frames = timestamps.frames
            bounds = np.array(
                [
                    change.s2s_boundary(feats, int(frames[i]), int(frames[i + 1]))
                    for i in range(len(frames) - 1)
                ],
                dtype=np.int64,
            )
        else:
            raise ValueError(f"unknown boundary method {method!r}")
    return change.labels_from_boundaries(timestamps, bounds, num_frames)


def _sparse_target(ts: TimestampSet, num_frames: int) -> np.ndarray:
    target = np.zeros(num_frames, dtype=np.int64)
    target[ts.frames] = ts.labels
    return target


def _chunks(order, size):
    for i in range(0, len(order), size):
        yield order[i : i + size]


def train(
    dataset,
    annotations,
    config: TrainConfig,
    model_config: net.ModelConfig,
    val_data=None,
    on_epoch=None,
) -> tuple[net.ModelState, list[EpochLog]]:
    """Train a fresh model; returns it with one log entry per epoch.

    ``dataset`` is a sequence of (features, labels-or-None) pairs and
    ``annotations`` a parallel sequence of timestamp sets (or None per video,
    or None entirely). ``val_data`` is an optional (features, labels) list
    evaluated after each epoch. ``on_epoch(epoch, model, entry)`` runs after
    each epoch when given.
    """
    videos = [(np.asarray(f, dtype=np.float64), lab) for f, lab in dataset]
    if annotations is None:
        annotations = [None] * len(videos)
    if len(annotations) != len(videos):
        raise ValueError("annotations and dataset differ in length")
    mode = config.supervision
    for i, (ts, (feats, labels)) in enumerate(zip(annotations, videos)):
        if mode in ("timestamps", "naive", "uniform") and ts is None:
            raise ValueError(f"supervision mode {mode!r} needs timestamps for video {i}")
        if mode == "full" and labels is None:
            raise ValueError(f"supervision mode 'full' needs frame labels for video {i}")
        if ts is not None and ts.frames[-1] >= feats.shape[0]:
            raise ValueError(f"timestamp outside video {i}")

    # fixed per-video supervision material
    sparse_targets = []
    masks = []
    uniform_targets = []
    for (feats, labels), ts in zip(videos, annotations):
        num_frames = feats.shape[0]
        if ts is not None:
            sparse_targets.append(_sparse_target(ts, num_frames))
            masks.append(frozenset(int(t) for t in ts.frames))
            if mode == "uniform":
                bounds = change.uniform_boundaries(ts, num_frames)
                uniform_targets.append(change.labels_from_boundaries(ts, bounds, num_frames))
            else:
                uniform_targets.append(None)
        else:
            sparse_targets.append(None)
            masks.append(None)
            uniform_targets.append(None)

    model = net.init_model(model_config, config.seed)
    shuffle_rng = np.random.default_rng([config.seed, 1])
    logs: list[EpochLog] = []
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(len(videos))
        epoch_losses = []
        for batch in _chunks(order, config.batch_size):
            batch_grads = None
            for vi in batch:
                feats, labels = videos[vi]
                ts = annotations[vi]
                if mode == "full":
                    target, mask = labels, None
                elif mode == "naive":
                    target, mask = sparse_targets[vi], masks[vi]
                elif mode == "uniform":
                    target, mask = uniform_targets[vi], None
                elif epoch <= config.warmup_epochs:
                    target, mask = sparse_targets[vi], masks[vi]
                else:
                    outputs = net.forward(model, feats)
                    target = pseudo_labels(
                        outputs, ts, config.boundary_method, config.normalize_features
                    )
                    mask = None
                try:
                    value, grads = net.loss_and_grad(
                        model, feats, target, mask, ts, config.weights
                    )
                except FloatingPointError as err:
                    raise FloatingPointError(
                        f"training diverged at epoch {epoch}, video {vi}: {err}"
                    ) from None
                epoch_losses.append(value)
                if batch_grads is None:
                    batch_grads = grads
                else:
                    for key in batch_grads:
                        batch_grads[key] += grads[key]
            model = net.adam_step(model, batch_grads, config.lr)
        entry = EpochLog(epoch=epoch, mean_loss=float(np.mean(epoch_losses)))
        if val_data is not None:
            entry.report = evaluate(model, val_data)
        logs.append(entry)
        if on_epoch is not None:
            on_epoch(epoch, model, entry)
    return model, logs


def infer(model: net.ModelState, features) -> np.ndarray:
    """Final-stage argmax per frame; ties resolve to the smallest class index."""
    outputs = net.forward(model, features)
    return np.argmax(outputs.probs[-1], axis=1).astype(np.int64)


def evaluate(model: net.ModelState, dataset, workers: int = 1) -> MetricsReport:
    """Predict every video of (features, labels) pairs and pool the metrics."""
    dataset = list(dataset)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            preds = list(pool.map(lambda pair: infer(model, pair[0]), dataset))
    else:
        preds = [infer(model, feats) for feats, _ in dataset]
    return report(preds, [labels for _, labels in dataset])
