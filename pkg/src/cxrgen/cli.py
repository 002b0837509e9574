"""Umbrella command line: preprocess, dataset, train, tune, evaluate,
predict, analyze-errors, serve.

Exit status: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, dataset as ds
from .bundle import ModelBundle, load_bundle, quantize_network, save_bundle
from .classifier import (
    ABNORMALITY_TAGS,
    Abnormality,
    TrainConfig,
    build_model,
    train,
    tune_ofat,
)
from .errors import CxrError, EmptyDataset
from .evaluation import (
    error_analysis,
    format_analysis,
    per_model_accuracy,
    simulate_error_analysis,
    strict_system_accuracy,
)
from .imaging import encode_pgm, preprocess
from .optimizer import OptimizerConfig
from .pipeline import predict_pipeline
from .reportgen import default_master_text, load_master_text
from .service import DEFAULT_MAX_UPLOAD, create_app

LR_GRID = (1e-2, 1e-3, 1e-4, 1e-5)


def _segment_pixels(image_path: str, abnormality: Abnormality) -> np.ndarray:
    data = Path(image_path).read_bytes()
    pre = preprocess(data)
    seg = {"I": pre.seg1, "II": pre.seg2, "III": pre.seg3}[abnormality.segment.tag]
    return seg.pixels


def _load_training_pairs(manifest_path: str | Path, abnormality: Abnormality):
    binary = ds.load_binary_dataset(manifest_path, abnormality.tag)
    return [(_segment_pixels(path, abnormality), label) for _, path, label in binary.items]


# ----------------------------------------------------------- subcommands


def _cmd_preprocess(args) -> int:
    data = Path(args.image).read_bytes()
    pre = preprocess(data, args.format)
    print(f"full: {pre.full.height}x{pre.full.width}")
    for name, img in (("seg1", pre.seg1), ("seg2", pre.seg2), ("seg3", pre.seg3)):
        print(f"{name}: {img.height}x{img.width}")
    if args.dump_segments:
        outdir = Path(args.dump_segments)
        outdir.mkdir(parents=True, exist_ok=True)
        for name, img in (
            ("full", pre.full),
            ("seg1", pre.seg1),
            ("seg2", pre.seg2),
            ("seg3", pre.seg3),
        ):
            (outdir / f"{name}.pgm").write_bytes(encode_pgm(img))
        print(f"wrote PGMs to {outdir}")
    return 0


def _cmd_dataset_build(args) -> int:
    records = ds.ingest_nih_labels(
        Path(args.nih_csv).read_text(encoding="utf-8"), image_root=args.image_root
    )
    if args.exclusions:
        records, warnings = ds.apply_exclusions(
            records, Path(args.exclusions).read_text(encoding="utf-8")
        )
        for w in warnings:
            print(f"warning: {w}", file=sys.stderr)
    sample = ds.balanced_sample(records, args.abnormality, args.n_pos, args.n_neg, args.seed)
    train_ds, test_ds = ds.split(sample, args.split, args.seed)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    ds.save_binary_dataset(train_ds, outdir / "train.csv")
    ds.save_binary_dataset(test_ds, outdir / "test.csv")
    print(f"{args.abnormality}: {len(train_ds.items)} train / {len(test_ds.items)} test -> {outdir}")
    return 0


def _train_one(tag: str, data_dir: Path, config: TrainConfig):
    abnormality = Abnormality(tag)
    train_pairs = _load_training_pairs(data_dir / "train.csv", abnormality)
    test_pairs = _load_training_pairs(data_dir / "test.csv", abnormality)
    net = build_model(abnormality, config.arch_width, config.seed)
    model, history = train(net, train_pairs, test_pairs, config, abnormality=abnormality)
    return model, history


def _cmd_train(args) -> int:
    config = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        optimizer=OptimizerConfig(kind=args.optimizer, learning_rate=args.lr),
        arch_width=args.arch_width,
    )
    dirs = {
        "cardiomegaly": args.cardiomegaly,
        "effusion": args.effusion,
        "consolidation": args.consolidation,
    }
    models = {}
    for tag in ABNORMALITY_TAGS:
        model, history = _train_one(tag, Path(dirs[tag]), config)
        quantize_network(model.network)
        models[tag] = model
        last = history[-1]
        print(
            f"{tag}: train acc {last.train_accuracy:.3f}, test acc {last.test_accuracy:.3f} "
            f"({config.epochs} epochs)"
        )
    mt = load_master_text(args.master_text) if args.master_text else default_master_text()
    bundle = ModelBundle(models=models, master_text=mt)
    save_bundle(bundle, args.out)
    print(f"wrote bundle {args.out}")
    return 0


def _cmd_tune(args) -> int:
    abnormality = Abnormality(args.abnormality)
    data_dir = Path(args.data)
    train_pairs = _load_training_pairs(data_dir / "train.csv", abnormality)
    test_pairs = _load_training_pairs(data_dir / "test.csv", abnormality)

    candidate_index = {"count": 0}

    def eval_fn(cfg):
        # independent seed per candidate training
        seed = args.seed + candidate_index["count"]
        candidate_index["count"] += 1
        config = TrainConfig(
            epochs=args.epochs,
            batch_size=args.batch_size,
            seed=seed,
            optimizer=OptimizerConfig(kind=cfg["optimizer"], learning_rate=cfg["lr"]),
            arch_width=cfg["width"],
        )
        net = build_model(abnormality, config.arch_width, seed)
        model, _ = train(net, train_pairs, test_pairs, config, abnormality=abnormality)
        return model.train_accuracy, model.test_accuracy

    factors = [
        ("lr", list(LR_GRID), 1e-3),
        ("optimizer", ["adam", "sgd"], "adam"),
        ("width", ["small", "large"], "small"),
    ]
    report = tune_ofat(factors, eval_fn)
    csv_text = report.to_csv()
    if args.out:
        Path(args.out).write_text(csv_text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(csv_text, end="")
    print(f"winning configuration: {report.final_config}")
    return 0


def _cmd_evaluate(args) -> int:
    if not args.system:
        raise CxrUsage("only --system evaluation is supported")
    bundle = _load_bundle_arg(args.bundle)
    records = ds.load_manifest_file(args.manifest)
    if not records:
        raise EmptyDataset("system evaluation manifest is empty")
    preds, truths = [], []
    for rec in records:
        response = predict_pipeline(bundle, Path(rec.path).read_bytes())
        preds.append([f.label for f in response.findings])
        truths.append(list(rec.labels))
    per_model = per_model_accuracy(preds, truths)
    strict = strict_system_accuracy(preds, truths)
    print("per-model accuracy:")
    for tag, acc in zip(ABNORMALITY_TAGS, per_model):
        print(f"  {tag}: {acc:.4f}")
    print(f"strict system accuracy: {strict:.4f}")
    print()
    print(format_analysis(error_analysis(per_model)))
    return 0


def _cmd_predict(args) -> int:
    bundle = _load_bundle_arg(args.bundle)
    response = predict_pipeline(bundle, Path(args.image).read_bytes(), args.format)
    print(f"result code: {response.result_code}")
    for f in response.findings:
        print(f"  {f.abnormality} (segment {f.segment}): label {f.label}, p={f.probability:.4f}")
    print()
    print(response.report_text)
    return 0


def _cmd_analyze_errors(args) -> int:
    try:
        acc = tuple(float(v) for v in args.acc.split(","))
    except ValueError:
        raise CxrUsage(f"--acc expects three comma-separated numbers, got {args.acc!r}")
    if len(acc) != 3:
        raise CxrUsage("--acc expects exactly three accuracies")
    analysis = error_analysis(acc)
    print(format_analysis(analysis))
    payload = {
        "p_correct": list(analysis.p_correct),
        "p_error": list(analysis.p_error),
        "p_joint_correct": analysis.p_joint_correct,
        "p_union_error": analysis.p_union_error,
    }
    if args.simulate:
        sim = simulate_error_analysis(acc, args.simulate, args.seed)
        print()
        print(f"simulated over {args.simulate} trials (seed {args.seed}):")
        print(format_analysis(sim))
        payload["simulated"] = {
            "n_trials": args.simulate,
            "seed": args.seed,
            "p_joint_correct": sim.p_joint_correct,
            "p_union_error": sim.p_union_error,
        }
    if args.json:
        print()
        print(json.dumps(payload, indent=2))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    bundle = _load_bundle_arg(args.bundle)
    app = create_app(bundle, max_upload_bytes=args.max_upload_bytes, static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


class CxrUsage(Exception):
    pass


def _load_bundle_arg(path: str | None) -> ModelBundle:
    path = path or os.environ.get("CXR_BUNDLE")
    if not path:
        raise CxrUsage("no bundle given (use --bundle or set CXR_BUNDLE)")
    return load_bundle(path)


# ----------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cxrgen", description=__doc__)
    parser.add_argument("--version", action="version", version=f"cxrgen {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="decode an image and slice segments")
    p.add_argument("image")
    p.add_argument("--format", choices=["png", "pgm"], default=None)
    p.add_argument("--dump-segments", metavar="DIR", default=None)
    p.set_defaults(fn=_cmd_preprocess)

    p = sub.add_parser("dataset", help="dataset construction")
    dsub = p.add_subparsers(dest="dataset_command", required=True)
    b = dsub.add_parser("build", help="build a balanced train/test split from NIH labels")
    b.add_argument("--nih-csv", required=True)
    b.add_argument("--image-root", default=".")
    b.add_argument("--abnormality", required=True, choices=ABNORMALITY_TAGS)
    b.add_argument("--n-pos", type=int, required=True)
    b.add_argument("--n-neg", type=int, required=True)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--split", type=float, default=0.7)
    b.add_argument("--exclusions", default=None)
    b.add_argument("--out", required=True)
    b.set_defaults(fn=_cmd_dataset_build)

    p = sub.add_parser("train", help="train all three models and write a bundle")
    p.add_argument("--cardiomegaly", required=True, metavar="DIR")
    p.add_argument("--effusion", required=True, metavar="DIR")
    p.add_argument("--consolidation", required=True, metavar="DIR")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--optimizer", choices=["adam", "sgd"], default="adam")
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--arch-width", choices=["small", "large"], default="small")
    p.add_argument("--master-text", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("tune", help="one-factor-at-a-time hyperparameter sweep")
    p.add_argument("--abnormality", required=True, choices=ABNORMALITY_TAGS)
    p.add_argument("--data", required=True, metavar="DIR")
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_tune)

    p = sub.add_parser("evaluate", help="strict system evaluation over a manifest")
    p.add_argument("--system", action="store_true")
    p.add_argument("--manifest", required=True)
    p.add_argument("--bundle", default=None)
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("predict", help="run the full pipeline on one image")
    p.add_argument("--bundle", default=None)
    p.add_argument("--image", required=True)
    p.add_argument("--format", choices=["png", "pgm"], default=None)
    p.set_defaults(fn=_cmd_predict)

    p = sub.add_parser("analyze-errors", help="closed-form error propagation")
    p.add_argument("--acc", required=True, metavar="A,B,C")
    p.add_argument("--simulate", type=int, default=0, metavar="N")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=_cmd_analyze_errors)

    p = sub.add_parser("serve", help="run the HTTP inference service")
    p.add_argument("--bundle", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--max-upload-bytes", type=int, default=DEFAULT_MAX_UPLOAD)
    p.add_argument("--static", default=None, metavar="DIR")
    p.set_defaults(fn=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CxrUsage as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CxrError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
