"""Command-line entry points: synth, annotate, train, eval, boundaries.

A corpus directory holds features/, groundTruth/, mapping.txt, splits/ with
train.bundle and test.bundle, and optionally timestamps/. The STAMPSEG_THREADS
environment variable caps evaluation worker threads (default 1).
"""

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import change, data, net, pipeline
from .loss import LossWeights


def _thread_count() -> int:
    raw = os.environ.get("STAMPSEG_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"STAMPSEG_THREADS must be an integer, got {raw!r}") from None


# ---------------------------------------------------------------------------
# subcommands

def cmd_synth(args) -> int:
    spec = data.SyntheticSpec(
        videos=args.videos,
        num_classes=args.classes,
        mean_frames=args.frames,
        dim=args.dim,
        noise=args.noise,
        segment_range=(args.segments[0], args.segments[1]),
    )
    pairs = data.generate_synthetic(spec, seed=args.seed)
    vocab = data.ActionVocab(tuple(f"action_{c}" for c in range(args.classes)))
    names = [f"video_{i:04d}" for i in range(len(pairs))]
    videos = [(n, f, l) for n, (f, l) in zip(names, pairs)]
    test_count = int(round(args.test_frac * len(names)))
    train_names = names[: len(names) - test_count]
    test_names = names[len(names) - test_count :]
    if not train_names or not test_names:
        raise ValueError(
            f"test fraction {args.test_frac} leaves an empty split for {len(names)} videos"
        )
    data.write_corpus(args.out, vocab, videos, train_names, test_names)
    print(f"wrote {len(train_names)} train / {len(test_names)} test videos to {args.out}")
    return 0


def cmd_annotate(args) -> int:
    vocab, records = data.load_corpus(args.data, split=args.split)
    out_dir = Path(args.data) / "timestamps"
    out_dir.mkdir(exist_ok=True)
    strategy = args.strategy
    for rec in records:
        if rec.labels is None:
            raise ValueError(f"video {rec.name!r} has no ground-truth labels to sample from")
        if strategy.startswith("fraction:"):
            fraction = float(strategy.split(":", 1)[1])
            ts = data.sample_timestamps_fraction(rec.labels, fraction, seed=args.seed)
        else:
            ts = data.sample_timestamps(rec.labels, strategy, seed=args.seed)
        data.write_timestamps(ts, vocab, out_dir / f"{rec.name}.txt")
    print(f"annotated {len(records)} videos under {out_dir}")
    return 0


def _model_config(args, input_dim: int, num_classes: int) -> net.ModelConfig:
    return net.ModelConfig(
        input_dim=input_dim,
        num_classes=num_classes,
        num_stages=args.stages,
        layers_per_stage=args.layers,
        channels=args.channels,
        first_stage_kernels=(args.kernels[0], args.kernels[1]),
        later_kernel=args.later_kernel,
    )


def cmd_train(args) -> int:
    vocab, records = data.load_corpus(args.data, split=args.split)
    dataset = [(r.features, r.labels) for r in records]
    annotations = [r.timestamps for r in records]
    if args.mode != "full" and any(ts is None for ts in annotations):
        missing = [r.name for r in records if r.timestamps is None]
        raise ValueError(f"mode {args.mode!r} needs timestamps; missing for {missing[:3]}")
    config = pipeline.TrainConfig(
        epochs=args.epochs,
        warmup_epochs=args.warmup,
        lr=args.lr,
        batch_size=args.batch,
        weights=LossWeights(alpha=args.alpha, beta=args.beta, tau=args.tau),
        supervision=args.mode,
        boundary_method=args.boundary,
        normalize_features=args.normalize_features,
        seed=args.seed,
    )
    model_config = _model_config(args, records[0].features.shape[1], vocab.num_classes)

    val_data = None
    if args.val is not None:
        _, val_records = data.load_corpus(args.data, split=args.val)
        val_data = [(r.features, r.labels) for r in val_records]

    on_epoch = None
    if args.save_every > 0:
        out_path = Path(args.out)

        def on_epoch(epoch, model, entry, path=out_path, every=args.save_every):
            if epoch % every == 0:
                net.save_model(model, path)

    model, logs = pipeline.train(
        dataset, annotations, config, model_config, val_data=val_data, on_epoch=on_epoch
    )
    net.save_model(model, args.out)
    log_text = pipeline.format_log(logs)
    if args.log is not None:
        Path(args.log).write_text(log_text, encoding="utf-8")
    else:
        sys.stdout.write(log_text)
    print(f"saved model to {args.out}")
    return 0


def cmd_eval(args) -> int:
    vocab, records = data.load_corpus(args.data, split=args.split)
    if (args.model is None) == (args.pred is None):
        raise ValueError("pass exactly one of --model or --pred")
    if any(r.labels is None for r in records):
        raise ValueError("evaluation needs ground-truth labels for every video")
    gts = [r.labels for r in records]
    if args.model is not None:
        model = net.load_model(args.model)
        dataset = [(r.features, r.labels) for r in records]
        rep = pipeline.evaluate(model, dataset, workers=_thread_count())
    else:
        preds = []
        for r in records:
            path = Path(args.pred) / f"{r.name}.txt"
            if not path.exists():
                raise ValueError(f"{path}: missing prediction file")
            pred = data.load_labels(path, vocab)
            preds.append(pred)
        from .metrics import report as metrics_report

        rep = metrics_report(preds, gts)
    if args.header:
        print(rep.header())
    print(rep.line())
    return 0


def cmd_boundaries(args) -> int:
    vocab, records = data.load_corpus(args.data, split=args.split)
    model = net.load_model(args.model)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for rec in records:
        if rec.timestamps is None:
            raise ValueError(f"video {rec.name!r} has no timestamps")
        outputs = net.forward(model, rec.features)
        labels = pipeline.pseudo_labels(
            outputs, rec.timestamps, args.boundary, args.normalize_features
        )
        data.write_labels(labels, vocab, out_dir / f"{rec.name}.txt")
        segs = data.segments_from_labels(labels)
        bounds = [seg[2] - 1 for seg in segs[:-1]]
        sidecar = "".join(f"{i} {b}\n" for i, b in enumerate(bounds))
        (out_dir / f"{rec.name}.bounds").write_text(sidecar, encoding="utf-8")
    print(f"wrote pseudo-labels for {len(records)} videos to {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stampseg",
        description="Temporal action segmentation from one annotated frame per segment.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus directory")
    p.add_argument("--out", required=True)
    p.add_argument("--videos", type=int, default=80)
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--frames", type=int, default=300, help="mean frames per video")
    p.add_argument("--dim", type=int, default=20)
    p.add_argument("--noise", type=float, default=0.25)
    p.add_argument("--segments", type=int, nargs=2, default=(6, 12), metavar=("LO", "HI"))
    p.add_argument("--test-frac", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("annotate", help="sample timestamp annotations from ground truth")
    p.add_argument("--data", required=True)
    p.add_argument("--strategy", default="random",
                   help="random, center, start, or fraction:<p>")
    p.add_argument("--split", default="train")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("train", help="train a model on one split")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--log", default=None, help="write per-epoch log lines here")
    p.add_argument("--split", default="train")
    p.add_argument("--val", default=None, help="split to evaluate after each epoch")
    p.add_argument("--mode", default="timestamps", choices=pipeline.SUPERVISION_MODES)
    p.add_argument("--boundary", default="fb", choices=change.BOUNDARY_METHODS)
    p.add_argument("--normalize-features", action="store_true")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--warmup", type=int, default=30)
    p.add_argument("--lr", type=float, default=0.0005)
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--alpha", type=float, default=0.15)
    p.add_argument("--beta", type=float, default=0.075)
    p.add_argument("--tau", type=float, default=4.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stages", type=int, default=4)
    p.add_argument("--layers", type=int, default=10)
    p.add_argument("--channels", type=int, default=64)
    p.add_argument("--kernels", type=int, nargs=2, default=(5, 3), metavar=("K1", "K2"))
    p.add_argument("--later-kernel", type=int, default=3)
    p.add_argument("--save-every", type=int, default=0,
                   help="also checkpoint every this many epochs")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a model or stored predictions")
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--model", default=None, help="checkpoint to evaluate")
    p.add_argument("--pred", default=None, help="directory of predicted label files")
    p.add_argument("--header", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("boundaries", help="write pseudo-labels and boundary sidecars")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", default="train")
    p.add_argument("--boundary", default="fb", choices=change.BOUNDARY_METHODS)
    p.add_argument("--normalize-features", action="store_true")
    p.set_defaults(func=cmd_boundaries)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, FloatingPointError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
