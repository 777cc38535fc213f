"""Multi-stage dilated temporal convolutional model with hand-derived gradients.

Every stage maps a per-frame input to per-frame class probabilities: a 1x1
input projection, a chain of dilated residual layers (dilation doubles per
layer), then a 1x1 classifier followed by a row-wise softmax. The first stage
runs two parallel residual chains with different kernel sizes over the input
features and sums their activations before the classifier; every later stage
consumes the previous stage's probabilities. All convolutions use zero "same"
padding, so sequence length is preserved.

Gradients are computed by explicit reverse-mode passes written against the
forward code; there is no autodiff involved. Parameters live in a flat dict
keyed by a stable naming scheme (see ``param_shapes``), which also fixes the
serialization order of checkpoints.
"""

import math
from dataclasses import dataclass

import numpy as np

from .data import TimestampSet
from .loss import LossWeights, total_loss_grad

CHECKPOINT_MAGIC = b"TSM1"

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class ModelConfig:
    input_dim: int
    num_classes: int
    num_stages: int = 4
    layers_per_stage: int = 10
    channels: int = 64
    first_stage_kernels: tuple[int, int] = (5, 3)
    later_kernel: int = 3

    def __post_init__(self):
        for name in ("input_dim", "num_classes", "num_stages", "layers_per_stage", "channels"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        object.__setattr__(self, "first_stage_kernels", tuple(self.first_stage_kernels))
        if len(self.first_stage_kernels) != 2:
            raise ValueError("first_stage_kernels must be a pair")
        for k in (*self.first_stage_kernels, self.later_kernel):
            if k < 1 or k % 2 == 0:
                raise ValueError(f"kernel sizes must be odd and >= 1, got {k}")


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0


@dataclass
class ModelState:
    config: ModelConfig
    params: dict[str, np.ndarray]
    adam: AdamState


@dataclass
class StageOutputs:
    """Per-stage probabilities plus the last stage's pre-classifier activation."""

    probs: list[np.ndarray]
    penultimate: np.ndarray


def param_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Canonical parameter order: stage-major, layer-major, weight before bias."""
    width = config.channels
    shapes: dict[str, tuple[int, ...]] = {}

    def stack(prefix: str, in_dim: int, kernel: int):
        shapes[f"{prefix}.proj.w"] = (width, in_dim)
        shapes[f"{prefix}.proj.b"] = (width,)
        for layer in range(config.layers_per_stage):
            shapes[f"{prefix}.l{layer}.dw"] = (width, width, kernel)
            shapes[f"{prefix}.l{layer}.db"] = (width,)
            shapes[f"{prefix}.l{layer}.pw"] = (width, width)
            shapes[f"{prefix}.l{layer}.pb"] = (width,)

    for branch, kernel in enumerate(config.first_stage_kernels):
        stack(f"s0.b{branch}", config.input_dim, kernel)
    shapes["s0.cls.w"] = (config.num_classes, width)
    shapes["s0.cls.b"] = (config.num_classes,)
    for stage in range(1, config.num_stages):
        stack(f"s{stage}", config.num_classes, config.later_kernel)
        shapes[f"s{stage}.cls.w"] = (config.num_classes, width)
        shapes[f"s{stage}.cls.b"] = (config.num_classes,)
    return shapes


def init_model(config: ModelConfig, seed: int = 0) -> ModelState:
    """Fan-in scaled uniform weights, zero biases, fresh optimizer state."""
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    for key, shape in param_shapes(config).items():
        if key.endswith("b"):
            params[key] = np.zeros(shape)
        else:
            fan_in = int(np.prod(shape[1:]))
            bound = 1.0 / math.sqrt(fan_in)
            params[key] = rng.uniform(-bound, bound, size=shape)
    adam = AdamState(
        m={k: np.zeros_like(p) for k, p in params.items()},
        v={k: np.zeros_like(p) for k, p in params.items()},
    )
    return ModelState(config=config, params=params, adam=adam)


# ---------------------------------------------------------------------------
# primitive ops

def softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _softmax_backward(probs, dprobs):
    inner = (dprobs * probs).sum(axis=1, keepdims=True)
    return probs * (dprobs - inner)


def _dilated_conv(x, w, b, dilation: int):
    # x: (T, Cin), w: (Cout, Cin, k) -> (T, Cout)
    num_frames = x.shape[0]
    kernel = w.shape[2]
    radius = dilation * (kernel - 1) // 2
    padded = np.zeros((num_frames + 2 * radius, x.shape[1]))
    padded[radius : radius + num_frames] = x
    out = np.broadcast_to(b, (num_frames, w.shape[0])).copy()
    for j in range(kernel):
        out += padded[j * dilation : j * dilation + num_frames] @ w[:, :, j].T
    return out


def _dilated_conv_backward(dy, x, w, dilation: int):
    num_frames = x.shape[0]
    kernel = w.shape[2]
    radius = dilation * (kernel - 1) // 2
    padded = np.zeros((num_frames + 2 * radius, x.shape[1]))
    padded[radius : radius + num_frames] = x
    dw = np.empty_like(w)
    dpadded = np.zeros_like(padded)
    for j in range(kernel):
        window = slice(j * dilation, j * dilation + num_frames)
        dw[:, :, j] = dy.T @ padded[window]
        dpadded[window] += dy @ w[:, :, j]
    return dw, dy.sum(axis=0), dpadded[radius : radius + num_frames]


# ---------------------------------------------------------------------------
# forward / backward

def _stack_forward(params, prefix: str, x, layers: int):
    h = x @ params[f"{prefix}.proj.w"].T + params[f"{prefix}.proj.b"]
    layer_cache = []
    for layer in range(layers):
        dilation = 1 << layer
        z = _dilated_conv(h, params[f"{prefix}.l{layer}.dw"], params[f"{prefix}.l{layer}.db"], dilation)
        r = np.maximum(z, 0.0)
        u = r @ params[f"{prefix}.l{layer}.pw"].T + params[f"{prefix}.l{layer}.pb"]
        layer_cache.append((h, z, r))
        h = h + u
    return h, {"x": x, "layers": layer_cache}


def _stack_backward(params, prefix: str, cache, dh, grads):
    for layer in range(len(cache["layers"]) - 1, -1, -1):
        h_in, z, r = cache["layers"][layer]
        dilation = 1 << layer
        grads[f"{prefix}.l{layer}.pw"] += dh.T @ r
        grads[f"{prefix}.l{layer}.pb"] += dh.sum(axis=0)
        dr = dh @ params[f"{prefix}.l{layer}.pw"]
        dz = np.where(z > 0.0, dr, 0.0)
        dw, db, dx = _dilated_conv_backward(dz, h_in, params[f"{prefix}.l{layer}.dw"], dilation)
        grads[f"{prefix}.l{layer}.dw"] += dw
        grads[f"{prefix}.l{layer}.db"] += db
        dh = dh + dx  # residual path plus conv path
    grads[f"{prefix}.proj.w"] += dh.T @ cache["x"]
    grads[f"{prefix}.proj.b"] += dh.sum(axis=0)
    return dh @ params[f"{prefix}.proj.w"]


def _check_input(config: ModelConfig, features) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] < 1:
        raise ValueError("features must be a (T, D) array with T >= 1")
    if features.shape[1] != config.input_dim:
        raise ValueError(
            f"feature dimension {features.shape[1]} does not match model input_dim "
            f"{config.input_dim}"
        )
    if not np.isfinite(features).all():
        raise ValueError("non-finite value in input features")
    return features


def _forward(model: ModelState, features):
    config, params = model.config, model.params
    stage_caches = []
    probs_list = []

    branch_out = []
    branch_caches = []
    for branch in range(len(config.first_stage_kernels)):
        h, cache = _stack_forward(params, f"s0.b{branch}", features, config.layers_per_stage)
        branch_out.append(h)
        branch_caches.append(cache)
    act = branch_out[0] + branch_out[1]
    probs = softmax_rows(act @ params["s0.cls.w"].T + params["s0.cls.b"])
    probs_list.append(probs)
    stage_caches.append({"branches": branch_caches, "act": act, "probs": probs})
    penultimate = act

    for stage in range(1, config.num_stages):
        h, cache = _stack_forward(params, f"s{stage}", probs, config.layers_per_stage)
        probs = softmax_rows(h @ params[f"s{stage}.cls.w"].T + params[f"s{stage}.cls.b"])
        probs_list.append(probs)
        stage_caches.append({"stack": cache, "act": h, "probs": probs})
        penultimate = h

    return probs_list, penultimate, stage_caches


def _backward(model: ModelState, stage_caches, dprobs_list):
    config, params = model.config, model.params
    grads = {key: np.zeros_like(value) for key, value in params.items()}
    flow = None  # gradient reaching the current stage's probs from the stage above
    for stage in range(config.num_stages - 1, -1, -1):
        cache = stage_caches[stage]
        dprobs = dprobs_list[stage]
        if flow is not None:
            dprobs = dprobs + flow
        dz = _softmax_backward(cache["probs"], dprobs)
        prefix = f"s{stage}"
        grads[f"{prefix}.cls.w"] += dz.T @ cache["act"]
        grads[f"{prefix}.cls.b"] += dz.sum(axis=0)
        dact = dz @ params[f"{prefix}.cls.w"]
        if stage == 0:
            for branch in range(len(config.first_stage_kernels)):
                _stack_backward(params, f"s0.b{branch}", cache["branches"][branch], dact, grads)
            flow = None
        else:
            flow = _stack_backward(params, prefix, cache["stack"], dact, grads)
    return grads


def forward(model: ModelState, features) -> StageOutputs:
    """Pure forward pass; identical inputs always give identical outputs."""
    features = _check_input(model.config, features)
    probs_list, penultimate, _ = _forward(model, features)
    return StageOutputs(probs=probs_list, penultimate=penultimate)


def loss_and_grad(
    model: ModelState,
    features,
    target,
    mask=None,
    timestamps: TimestampSet | None = None,
    weights: LossWeights = LossWeights(),
) -> tuple[float, dict[str, np.ndarray]]:
    """Total loss summed over every stage's probabilities, plus exact gradients."""
    features = _check_input(model.config, features)
    probs_list, _, stage_caches = _forward(model, features)
    total = 0.0
    dprobs_list = []
    for stage, probs in enumerate(probs_list):
        value, dprobs = total_loss_grad(probs, target, mask, timestamps, weights)
        if not math.isfinite(value):
            raise FloatingPointError(f"non-finite loss at stage {stage}")
        total += value
        dprobs_list.append(dprobs)
    return total, _backward(model, stage_caches, dprobs_list)


def loss_value(
    model: ModelState,
    features,
    target,
    mask=None,
    timestamps: TimestampSet | None = None,
    weights: LossWeights = LossWeights(),
) -> float:
    """Forward-only evaluation of the summed loss (used for gradient checking)."""
    features = _check_input(model.config, features)
    probs_list, _, _ = _forward(model, features)
    total = 0.0
    for stage, probs in enumerate(probs_list):
        value, _ = total_loss_grad(probs, target, mask, timestamps, weights)
        if not math.isfinite(value):
            raise FloatingPointError(f"non-finite loss at stage {stage}")
        total += value
    return total


# ---------------------------------------------------------------------------
# optimizer

def adam_step(model: ModelState, grads: dict[str, np.ndarray], lr: float) -> ModelState:
    """One Adam update with bias correction; mutates and returns the model."""
    state = model.adam
    state.step += 1
    corr1 = 1.0 - ADAM_BETA1**state.step
    corr2 = 1.0 - ADAM_BETA2**state.step
    for key, param in model.params.items():
        grad = grads[key]
        m = state.m[key]
        v = state.v[key]
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * grad
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * grad * grad
        update = lr * (m / corr1) / (np.sqrt(v / corr2) + ADAM_EPS)
        if not np.isfinite(update).all():
            raise FloatingPointError(f"non-finite update for parameter {key}")
        param -= update
    return model


# ---------------------------------------------------------------------------
# checkpoints

def save_model(model: ModelState, path) -> None:
    """Binary checkpoint: magic, config as u32s, params, Adam state, step count.

    Config order: num_stages, layers_per_stage, channels, both first-stage
    kernels, later_kernel, input_dim, num_classes. Arrays are float32
    little-endian in ``param_shapes`` order, Adam first moment then second
    moment following each parameter, and the step counter is a trailing u64.
    """
    config = model.config
    header = np.array(
        [
            config.num_stages,
            config.layers_per_stage,
            config.channels,
            config.first_stage_kernels[0],
            config.first_stage_kernels[1],
            config.later_kernel,
            config.input_dim,
            config.num_classes,
        ],
        dtype="<u4",
    )
    chunks = [CHECKPOINT_MAGIC, header.tobytes()]
    for key in param_shapes(config):
        chunks.append(model.params[key].astype("<f4").tobytes())
        chunks.append(model.adam.m[key].astype("<f4").tobytes())
        chunks.append(model.adam.v[key].astype("<f4").tobytes())
    chunks.append(np.array([model.adam.step], dtype="<u8").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


def load_model(path) -> ModelState:
    raw = open(path, "rb").read()
    if len(raw) < 4 or raw[:4] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: bad magic, not a model checkpoint")
    if len(raw) < 4 + 8 * 4 + 8:
        raise ValueError(f"{path}: truncated header")
    header = np.frombuffer(raw, dtype="<u4", count=8, offset=4)
    config = ModelConfig(
        num_stages=int(header[0]),
        layers_per_stage=int(header[1]),
        channels=int(header[2]),
        first_stage_kernels=(int(header[3]), int(header[4])),
        later_kernel=int(header[5]),
        input_dim=int(header[6]),
        num_classes=int(header[7]),
    )
    shapes = param_shapes(config)
    offset = 4 + 8 * 4
    params: dict[str, np.ndarray] = {}
    m: dict[str, np.ndarray] = {}
    v: dict[str, np.ndarray] = {}
    for key, shape in shapes.items():
        size = int(np.prod(shape))
        for store in (params, m, v):
            end = offset + size * 4
            if end > len(raw) - 8:
                raise ValueError(f"{path}: truncated parameter payload at {key}")
            store[key] = (
                np.frombuffer(raw, dtype="<f4", count=size, offset=offset)
                .reshape(shape)
                .astype(np.float64)
            )
            offset = end
    if len(raw) != offset + 8:
        raise ValueError(f"{path}: checkpoint size mismatch")
    step = int(np.frombuffer(raw, dtype="<u8", count=1, offset=offset)[0])
    return ModelState(config=config, params=params, adam=AdamState(m=m, v=v, step=step))
