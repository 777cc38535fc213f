"""Dataset handling: vocabularies, on-disk formats, annotation sampling, synthetic corpora.

File formats
------------
features    binary, little-endian: magic ``TSF1``, u32 frame count T, u32 feature
            dimension D, then T*D float32 values in frame-major order.
labels      text, one action name per line; line t holds the label of frame t.
vocabulary  text, lines ``<index> <name>`` covering indices 0..C-1 exactly once.
timestamps  text, lines ``<frame> <name>`` with strictly ascending frame indices.

All text files are UTF-8 with LF line endings. Frame indices are 0-based
everywhere, in memory and on disk.
"""

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FEATURE_MAGIC = b"TSF1"

SAMPLING_STRATEGIES = ("random", "center", "start")


@dataclass(frozen=True)
class ActionVocab:
    """Ordered action names; the class index of a name is its position."""

    names: tuple[str, ...]

    def __post_init__(self):
        if len(self.names) == 0:
            raise ValueError("empty vocabulary")
        if any(not n for n in self.names):
            raise ValueError("vocabulary contains an empty action name")
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate action name in vocabulary")

    @property
    def num_classes(self) -> int:
        return len(self.names)

    @property
    def entries(self) -> list[tuple[int, str]]:
        return list(enumerate(self.names))

    def name_of(self, index: int) -> str:
        return self.names[index]

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ValueError(f"unknown action name {name!r}") from None


@dataclass
class TimestampSet:
    """Sparse frame annotations: frames[i] is annotated with class labels[i]."""

    frames: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.int64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.frames.ndim != 1 or self.frames.shape != self.labels.shape:
            raise ValueError("frames and labels must be 1-D arrays of equal length")
        if len(self.frames) == 0:
            raise ValueError("timestamp set must contain at least one entry")
        if self.frames[0] < 0:
            raise ValueError("negative frame index in timestamp set")
        if np.any(np.diff(self.frames) <= 0):
            raise ValueError("timestamp frames must be strictly increasing")

    def __len__(self) -> int:
        return len(self.frames)


@dataclass
class VideoRecord:
    """One video of a corpus; labels and timestamps are optional."""

    name: str
    features: np.ndarray
    labels: np.ndarray | None = None
    timestamps: TimestampSet | None = None

    @property
    def num_frames(self) -> int:
        return self.features.shape[0]


# ---------------------------------------------------------------------------
# vocabulary

def load_vocab(path) -> ActionVocab:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    by_index: dict[int, str] = {}
    seen_names: set[str] = set()
    for lineno, line in enumerate(lines, start=1):
        if line == "":
            raise ValueError(f"{path}: line {lineno}: empty line in vocabulary")
        idx_str, sep, name = line.partition(" ")
        if not sep or not name:
            raise ValueError(f"{path}: line {lineno}: expected '<index> <name>'")
        try:
            idx = int(idx_str)
        except ValueError:
            raise ValueError(f"{path}: line {lineno}: malformed class index {idx_str!r}") from None
        if idx in by_index:
            raise ValueError(f"{path}: line {lineno}: duplicate class index {idx}")
        if name in seen_names:
            raise ValueError(f"{path}: line {lineno}: duplicate action name {name!r}")
        by_index[idx] = name
        seen_names.add(name)
    if not by_index:
        raise ValueError(f"{path}: empty vocabulary")
    count = len(by_index)
    if sorted(by_index) != list(range(count)):
        raise ValueError(f"{path}: gap in class indices, expected 0..{count - 1}")
    return ActionVocab(tuple(by_index[i] for i in range(count)))


def write_vocab(vocab: ActionVocab, path) -> None:
    text = "".join(f"{i} {n}\n" for i, n in vocab.entries)
    Path(path).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# features

def load_features(path) -> np.ndarray:
    """Read a binary feature file into a float64 array of shape (T, D)."""
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[:4] != FEATURE_MAGIC:
        raise ValueError(f"{path}: bad magic, not a feature file")
    if len(raw) < 12:
        raise ValueError(f"{path}: truncated header")
    header = np.frombuffer(raw, dtype="<u4", count=2, offset=4)
    num_frames, dim = int(header[0]), int(header[1])
    if num_frames < 1 or dim < 1:
        raise ValueError(f"{path}: invalid shape {num_frames}x{dim}")
    need = num_frames * dim * 4
    payload = raw[12:]
    if len(payload) < need:
        raise ValueError(
            f"{path}: truncated payload, expected {need} bytes, found {len(payload)}"
        )
    if len(payload) > need:
        raise ValueError(f"{path}: {len(payload) - need} unexpected trailing bytes")
    frames = (
        np.frombuffer(payload, dtype="<f4", count=num_frames * dim)
        .reshape(num_frames, dim)
        .astype(np.float64)
    )
    bad = ~np.isfinite(frames)
    if bad.any():
        t, d = np.argwhere(bad)[0]
        raise ValueError(f"{path}: non-finite value at frame {t}, dim {d}")
    return frames


def write_features(frames: np.ndarray, path) -> None:
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[0] < 1 or frames.shape[1] < 1:
        raise ValueError("features must be a (T, D) array with T, D >= 1")
    if not np.isfinite(frames).all():
        raise ValueError("refusing to write non-finite features")
    num_frames, dim = frames.shape
    header = np.array([num_frames, dim], dtype="<u4")
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(header.tobytes())
        fh.write(frames.astype("<f4").tobytes())


def load_features_npy(path) -> np.ndarray:
    """Read a numpy feature file stored dimension-major (D, T); returns (T, D)."""
    arr = np.load(path, allow_pickle=False)
    if arr.ndim != 2:
        raise ValueError(f"{path}: expected a 2-D feature array, got shape {arr.shape}")
    frames = np.asarray(arr, dtype=np.float64).T
    if not np.isfinite(frames).all():
        raise ValueError(f"{path}: non-finite value in feature array")
    return frames


# ---------------------------------------------------------------------------
# frame labels

def load_labels(path, vocab: ActionVocab) -> np.ndarray:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError(f"{path}: empty label file")
    out = np.empty(len(lines), dtype=np.int64)
    lookup = {n: i for i, n in vocab.entries}
    for lineno, name in enumerate(lines, start=1):
        try:
            out[lineno - 1] = lookup[name]
        except KeyError:
            raise ValueError(f"{path}: line {lineno}: unknown action name {name!r}") from None
    return out


def write_labels(labels: np.ndarray, vocab: ActionVocab, path) -> None:
    text = "".join(vocab.name_of(int(c)) + "\n" for c in labels)
    Path(path).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# timestamps on disk

def load_timestamps(path, vocab: ActionVocab, num_frames: int | None = None) -> TimestampSet:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError(f"{path}: empty timestamp file")
    frames = np.empty(len(lines), dtype=np.int64)
    labels = np.empty(len(lines), dtype=np.int64)
    for lineno, line in enumerate(lines, start=1):
        frame_str, sep, name = line.partition(" ")
        if not sep or not name:
            raise ValueError(f"{path}: line {lineno}: expected '<frame> <name>'")
        try:
            frames[lineno - 1] = int(frame_str)
        except ValueError:
            raise ValueError(f"{path}: line {lineno}: malformed frame index {frame_str!r}") from None
        labels[lineno - 1] = vocab.index_of(name)
    try:
        ts = TimestampSet(frames, labels)
    except ValueError as err:
        raise ValueError(f"{path}: {err}") from None
    if num_frames is not None and ts.frames[-1] >= num_frames:
        raise ValueError(
            f"{path}: timestamp frame {int(ts.frames[-1])} outside video of {num_frames} frames"
        )
    return ts


def write_timestamps(ts: TimestampSet, vocab: ActionVocab, path) -> None:
    text = "".join(
        f"{int(t)} {vocab.name_of(int(c))}\n" for t, c in zip(ts.frames, ts.labels)
    )
    Path(path).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# segments and annotation sampling

def segments_from_labels(labels: np.ndarray) -> list[tuple[int, int, int]]:
    """Run-length encode frame labels into (class, start, end) with end exclusive."""
    labels = np.asarray(labels)
    if labels.ndim != 1 or len(labels) == 0:
        raise ValueError("labels must be a non-empty 1-D array")
    cuts = np.flatnonzero(np.diff(labels)) + 1
    starts = np.concatenate(([0], cuts))
    ends = np.concatenate((cuts, [len(labels)]))
    return [(int(labels[s]), int(s), int(e)) for s, e in zip(starts, ends)]


def sample_timestamps(labels: np.ndarray, strategy: str, seed: int = 0) -> TimestampSet:
    """Pick one annotated frame per segment.

    ``random`` draws uniformly inside each segment, ``center`` takes
    floor((start + end - 1) / 2), ``start`` takes the first frame.
    """
    if strategy not in SAMPLING_STRATEGIES:
        raise ValueError(f"unknown sampling strategy {strategy!r}")
    segments = segments_from_labels(labels)
    rng = np.random.default_rng(seed)
    frames = np.empty(len(segments), dtype=np.int64)
    classes = np.empty(len(segments), dtype=np.int64)
    for i, (cls, start, end) in enumerate(segments):
        if strategy == "random":
            frames[i] = rng.integers(start, end)
        elif strategy == "center":
            frames[i] = (start + end - 1) // 2
        else:
            frames[i] = start
        classes[i] = cls
    return TimestampSet(frames, classes)


def sample_timestamps_fraction(labels: np.ndarray, fraction: float, seed: int = 0) -> TimestampSet:
    """Annotate ceil(fraction * T) distinct frames drawn without replacement.

    Segments may receive zero, one, or several annotations, so consecutive
    entries can repeat a class.
    """
    labels = np.asarray(labels)
    if labels.ndim != 1 or len(labels) == 0:
        raise ValueError("labels must be a non-empty 1-D array")
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    num_frames = len(labels)
    # the 1e-9 slack keeps products like 0.1 * 300 from ceiling to 31
    count = math.ceil(fraction * num_frames - 1e-9)
    count = max(1, min(count, num_frames))
    rng = np.random.default_rng(seed)
    frames = np.sort(rng.choice(num_frames, size=count, replace=False))
    return TimestampSet(frames, labels[frames])


# ---------------------------------------------------------------------------
# synthetic corpora

@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of a synthetic corpus.

    Each class gets a fixed random unit-norm mean vector; every frame is its
    class mean plus isotropic Gaussian noise of scale ``noise``. Segment
    layouts are random with adjacent segments always differing in class.
    """

    videos: int
    num_classes: int
    mean_frames: int
    dim: int
    noise: float
    segment_range: tuple[int, int] = (4, 10)

    def __post_init__(self):
        if self.videos < 1:
            raise ValueError("videos must be >= 1")
        if self.num_classes < 2:
            raise ValueError(
                "num_classes must be >= 2: adjacent segments need distinct classes"
            )
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not (math.isfinite(self.noise) and self.noise >= 0.0):
            raise ValueError("noise must be finite and >= 0")
        lo, hi = self.segment_range
        if not 1 <= lo <= hi:
            raise ValueError(f"invalid segment-count range {self.segment_range}")
        if self.mean_frames < 2 * hi:
            raise ValueError("mean_frames too small for the segment-count range")


NOISE_RHO = 0.9


def generate_synthetic(spec: SyntheticSpec, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Generate ``spec.videos`` pairs of (features, labels), deterministic in seed.

    Each frame is its class mean plus Gaussian noise of scale ``spec.noise``.
    The noise is temporally correlated (stationary AR(1), so the per-frame
    marginal stays N(0, noise^2)): consecutive video frames share most of
    their appearance, which is what makes dense supervision informative.
    """
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((spec.num_classes, spec.dim))
    means = raw / np.linalg.norm(raw, axis=1, keepdims=True)

    lo_t = max(spec.segment_range[1], int(round(0.85 * spec.mean_frames)))
    hi_t = max(lo_t, int(round(1.15 * spec.mean_frames)))
    out = []
    for _ in range(spec.videos):
        num_frames = int(rng.integers(lo_t, hi_t + 1))
        count = int(rng.integers(spec.segment_range[0], spec.segment_range[1] + 1))
        count = min(count, num_frames)

        classes = np.empty(count, dtype=np.int64)
        classes[0] = rng.integers(spec.num_classes)
        for j in range(1, count):
            step = int(rng.integers(spec.num_classes - 1))
            classes[j] = step if step < classes[j - 1] else step + 1

        min_len = max(1, num_frames // (4 * count))
        extra = num_frames - count * min_len
        shares = rng.dirichlet(np.ones(count))
        lengths = min_len + rng.multinomial(extra, shares)

        labels = np.repeat(classes, lengths)
        white = rng.standard_normal((num_frames, spec.dim))
        drift = np.empty_like(white)
        drift[0] = white[0]
        scale = math.sqrt(1.0 - NOISE_RHO**2)
        for t in range(1, num_frames):
            drift[t] = NOISE_RHO * drift[t - 1] + scale * white[t]
        feats = means[labels] + spec.noise * drift
        out.append((feats, labels))
    return out


# ---------------------------------------------------------------------------
# corpus directories

def _video_names(bundle_path) -> list[str]:
    names = []
    for line in Path(bundle_path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        # split bundles from other tools list "<video>.txt"
        names.append(line[:-4] if line.endswith(".txt") else line)
    if not names:
        raise ValueError(f"{bundle_path}: empty split bundle")
    return names


def write_corpus(
    out_dir,
    vocab: ActionVocab,
    videos: list[tuple[str, np.ndarray, np.ndarray]],
    train_names: list[str],
    test_names: list[str],
) -> None:
    """Lay out a corpus directory: features/, groundTruth/, mapping.txt, splits/."""
    root = Path(out_dir)
    (root / "features").mkdir(parents=True, exist_ok=True)
    (root / "groundTruth").mkdir(exist_ok=True)
    (root / "splits").mkdir(exist_ok=True)
    write_vocab(vocab, root / "mapping.txt")
    for name, feats, labels in videos:
        write_features(feats, root / "features" / f"{name}.tsf")
        write_labels(labels, vocab, root / "groundTruth" / f"{name}.txt")
    (root / "splits" / "train.bundle").write_text(
        "".join(n + "\n" for n in train_names), encoding="utf-8"
    )
    (root / "splits" / "test.bundle").write_text(
        "".join(n + "\n" for n in test_names), encoding="utf-8"
    )


def load_corpus(data_dir, split: str = "train") -> tuple[ActionVocab, list[VideoRecord]]:
    """Load one split of a corpus directory.

    Features are read from features/<name>.tsf, or features/<name>.npy when a
    dimension-major numpy file is supplied instead. Ground-truth labels and
    timestamps are attached when present.
    """
    root = Path(data_dir)
    vocab = load_vocab(root / "mapping.txt")
    bundle = root / "splits" / f"{split}.bundle"
    if not bundle.exists():
        raise ValueError(f"{bundle}: split bundle not found")
    records = []
    for name in _video_names(bundle):
        tsf = root / "features" / f"{name}.tsf"
        npy = root / "features" / f"{name}.npy"
        if tsf.exists():
            feats = load_features(tsf)
        elif npy.exists():
            feats = load_features_npy(npy)
        else:
            raise ValueError(f"no feature file for video {name!r} under {root / 'features'}")
        labels = None
        gt = root / "groundTruth" / f"{name}.txt"
        if gt.exists():
            labels = load_labels(gt, vocab)
            if len(labels) != feats.shape[0]:
                raise ValueError(
                    f"{gt}: {len(labels)} labels for {feats.shape[0]} feature frames"
                )
        ts = None
        ts_path = root / "timestamps" / f"{name}.txt"
        if ts_path.exists():
            ts = load_timestamps(ts_path, vocab, num_frames=feats.shape[0])
        records.append(VideoRecord(name=name, features=feats, labels=labels, timestamps=ts))
    return vocab, records
