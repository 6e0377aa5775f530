"""``texturekit`` command-line entry point.

Exit codes: 0 success, 2 usage/parameter error, 3 I/O error, 4 data
validation error, 5 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import SynthConfig, generate, load_dataset, load_unlabeled, write_dataset
from .errors import DataValidationError, NumericalError, ParameterError, TextureKitError
from .evaluation import (
    ClassifierKind,
    ConfusionMatrix,
    EvalConfig,
    compare,
    fit_encoder,
    fit_fusion,
    loocv,
    metrics,
    prepare,
    report_dict,
)
from .features import FeatureConfig, haralick_from_image, nmf_column
from .fsutil import atomic_write_text
from .fusion import classify
from .glcm import Direction, compute_glcm
from .haralick import COLUMN_NAMES
from .images import read_image, write_pgm
from .modelio import (
    load_fusion,
    load_nmf,
    load_report,
    load_svm,
    read_features_csv,
    run_manifest,
    save_fusion,
    save_nmf,
    save_report,
    save_svm,
    write_features_csv,
    write_fusion_reference,
    write_sidecar_manifest,
)
from .nmf import NmfConfig, nmf_encode
from .preprocess import PreprocessConfig, preprocess, quantize
from .svm import KernelSpec, fit_svm, train_svm

log = logging.getLogger("texturekit")

EXIT_USAGE, EXIT_IO, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4, 5


def _default_seed(fallback: int = 0) -> int:
    env = os.environ.get("TEXTUREKIT_SEED")
    if env is None or env == "":
        return fallback
    try:
        return int(env)
    except ValueError:
        raise ParameterError(f"TEXTUREKIT_SEED must be an integer, got {env!r}") from None


# -- shared option groups ---------------------------------------------------

def _add_preprocess_opts(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("preprocessing")
    g.add_argument("--top-fraction", type=float, default=0.001,
                   help="fraction of brightest pixels averaged for the normalization reference")
    g.add_argument("--sigma-s", type=float, default=2.0, help="bilateral spatial sigma (pixels)")
    g.add_argument("--sigma-r", type=float, default=0.1, help="bilateral range sigma (intensity)")
    g.add_argument("--radius", type=int, default=None, help="bilateral radius (default 2*ceil(sigma-s))")
    g.add_argument("--no-denoise", action="store_true", help="skip the bilateral filter")
    g.add_argument("--levels", type=int, default=16, help="gray levels N_g for the GLCM")
    g.add_argument("--distance", type=int, default=1, help="GLCM neighbour distance")
    g.add_argument("--nmf-size", type=int, nargs=2, default=(64, 64), metavar=("ROWS", "COLS"),
                   help="images are resampled to this shape before NMF")


def _feature_config(args) -> FeatureConfig:
    pre = PreprocessConfig(top_fraction=args.top_fraction, sigma_spatial=args.sigma_s,
                           sigma_range=args.sigma_r, radius=args.radius, levels=args.levels,
                           denoise=not args.no_denoise)
    return FeatureConfig(preprocess=pre, distance=args.distance, nmf_shape=tuple(args.nmf_size))


def _add_kernel_opts(p: argparse.ArgumentParser, nmf: bool = False) -> None:
    g = p.add_argument_group("SVM")
    g.add_argument("--kernel", default="linear", choices=["linear", "rbf", "mlp"])
    g.add_argument("--sigma", type=float, default=40.0, help="RBF width")
    g.add_argument("--mlp-a", type=float, default=1.0, help="sigmoid (MLP) kernel scale")
    g.add_argument("--mlp-b", type=float, default=-9.0, help="sigmoid (MLP) kernel offset")
    g.add_argument("--c", dest="C", type=float, default=1.0, help="soft-margin penalty C")
    if nmf:
        g.add_argument("--nmf-kernel", default=None, choices=["linear", "rbf", "mlp"],
                       help="kernel of the NMF model (default: same as --kernel)")


def _kernel(args, name: str | None = None) -> KernelSpec:
    return KernelSpec.parse(name or args.kernel, sigma=args.sigma, a=args.mlp_a, b=args.mlp_b)


def _add_nmf_opts(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("NMF")
    g.add_argument("--rank", type=int, default=8)
    g.add_argument("--max-iters", type=int, default=500)
    g.add_argument("--rel-tol", type=float, default=1e-6)


def _nmf_config(args) -> NmfConfig:
    return NmfConfig(rank=args.rank, max_iters=args.max_iters, rel_tol=args.rel_tol, seed=args.seed)


# -- commands ---------------------------------------------------------------

def cmd_preprocess(args) -> int:
    fc = _feature_config(args)
    out = preprocess(read_image(args.input), fc.preprocess)
    if args.quantize:
        out = quantize(out, fc.levels) / (fc.levels - 1)
    write_pgm(args.out, out, bit_depth=16)
    write_sidecar_manifest(args.out, run_manifest("preprocess", fc.to_dict(), [args.input]))
    return 0


def cmd_glcm(args) -> int:
    fc = _feature_config(args)
    q = quantize(preprocess(read_image(args.input), fc.preprocess), fc.levels)
    g = compute_glcm(q, fc.levels, Direction.parse(args.direction), fc.distance)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows([[repr(float(v)) for v in row] for row in g.probs])
    atomic_write_text(args.out, buf.getvalue())
    cfg = dict(fc.to_dict(), direction=g.direction.name.lower())
    write_sidecar_manifest(args.out, run_manifest("glcm", cfg, [args.input]))
    return 0


def cmd_extract(args) -> int:
    ids, images, labels = load_unlabeled(args.input)
    if args.features == "haralick":
        fc = _feature_config(args)
        X = np.vstack([haralick_from_image(img, fc) for img in images])
        columns = list(COLUMN_NAMES)
        cfg = {"features": "haralick", **fc.to_dict()}
    else:
        if not args.model:
            raise ParameterError("--features nmf requires --model <file.nmf.json>")
        model = load_nmf(args.model)
        rep = model.representation.get("features")
        fc = FeatureConfig.from_dict(rep) if rep else _feature_config(args)
        cols = np.column_stack([nmf_column(img, fc) for img in images])
        X = nmf_encode(model, cols).T
        columns = [f"w{k}" for k in range(1, model.rank + 1)]
        cfg = {"features": "nmf", "model": str(args.model), **fc.to_dict()}
    write_features_csv(args.out, ids, X, columns, labels)
    inputs = [args.input] + ([args.model] if args.features == "nmf" else [])
    write_sidecar_manifest(args.out, run_manifest("extract", cfg, inputs))
    return 0


def cmd_nmf_train(args) -> int:
    cfg = _nmf_config(args)
    src = Path(args.input)
    if src.is_file() and src.suffix.lower() == ".csv" and not _is_manifest(src):
        _, X, columns, _ = read_features_csv(src)
        A = X.T
        rep = {"input": "csv", "columns": columns}
        fc = None
    else:
        fc = _feature_config(args)
        _, images, _ = load_unlabeled(src)
        A = np.column_stack([nmf_column(img, fc) for img in images])
        rep = None
    model = fit_encoder(A, cfg, fc)
    if rep is not None:
        model.representation = rep
    manifest = run_manifest("nmf-train", {"nmf": cfg.to_dict(), "representation": model.representation},
                            [args.input])
    save_nmf(model, args.out, manifest)
    print(f"rank={model.rank} rows={model.rows} train_residual={model.train_residual:.6g}")
    return 0


def _is_manifest(path: Path) -> bool:
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), [])
    return {"sample_id", "path", "label"} <= set(header)


def cmd_svm_train(args) -> int:
    ids, X, columns, labels = read_features_csv(args.features)
    if labels is None:
        raise DataValidationError(f"{args.features}: a label column is required for training")
    kernel = _kernel(args)
    fit = train_svm if args.no_standardize else fit_svm
    model = fit(X, labels, kernel, args.C)
    cfg = {"kernel": kernel.to_dict(), "C": args.C, "standardize": not args.no_standardize,
           "columns": columns}
    save_svm(model, args.out, run_manifest("svm-train", cfg, [args.features]))
    for w in model.warnings:
        log.warning("%s", w)
    print(f"support_vectors={len(model.alphas)} w_norm={model.w_norm:.6g} bias={model.bias:.6g}")
    return 0


def cmd_fuse(args) -> int:
    encoder = load_nmf(args.encoder)
    rep = encoder.representation.get("features")
    fc = FeatureConfig.from_dict(rep) if rep else _feature_config(args)
    h, n = load_svm(args.haralick), load_svm(args.nmf)
    if h.dim != len(COLUMN_NAMES):
        raise DataValidationError(f"{args.haralick}: expects {h.dim} features, Haralick vectors have 28")
    if n.dim != encoder.rank:
        raise DataValidationError(f"{args.nmf}: expects {n.dim} features, encoder rank is {encoder.rank}")
    manifest = run_manifest("fuse", fc.to_dict(), [args.haralick, args.nmf, args.encoder])
    write_fusion_reference(args.out, args.haralick, args.nmf, args.encoder, fc, manifest)
    return 0


def cmd_train(args) -> int:
    ds = load_dataset(args.data)
    cfg = _eval_config(args, ClassifierKind.MULTILEVEL)
    data = prepare(ds, cfg.features)
    train = np.arange(len(ds))
    fm = fit_fusion(data, train, cfg, nmf_seed=cfg.nmf.seed + cfg.seed)
    parts = save_fusion(fm, args.out, run_manifest("train", cfg.to_dict(), [args.data]))
    for key, path in parts.items():
        print(f"{key}: {path}")
    return 0


def cmd_classify(args) -> int:
    fm = load_fusion(args.fusion)
    ids, images, _ = load_unlabeled(args.input)
    rows = []
    for sid, img in zip(ids, images):
        d = classify(fm, img)
        label = "stroke" if d.label == 1 else "nonstroke"
        rows.append((sid, label, d.winner, d.score_haralick, d.score_nmf))
    if args.json:
        print(json.dumps([{"sample_id": r[0], "label": r[1], "winner": r[2],
                           "score_haralick": r[3], "score_nmf": r[4]} for r in rows], indent=1))
    else:
        for sid, label, winner, sh, sn in rows:
            print(f"{sid}\tlabel={label}\twinner={winner}\tscore_haralick={sh:.6f}\tscore_nmf={sn:.6f}")
    return 0


def _eval_config(args, kind: ClassifierKind) -> EvalConfig:
    return EvalConfig(
        classifier=kind,
        kernel=_kernel(args),
        nmf_kernel=_kernel(args, args.nmf_kernel) if args.nmf_kernel else None,
        C=args.C,
        nmf=_nmf_config(args),
        features=_feature_config(args),
        seed=args.seed,
        n_jobs=getattr(args, "jobs", 1),
    )


RECORD_FIELDS = ("fold", "sample_id", "truth", "predicted", "correct", "score",
                 "score_haralick", "score_nmf", "winner", "degenerate")


def _records_csv(results: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("classifier",) + RECORD_FIELDS)
    for kind, res in results.items():
        for r in res.records:
            vals = [r.fold, r.sample_id, r.truth, r.predicted, r.correct, r.score,
                    r.score_haralick, r.score_nmf, r.winner, r.degenerate]
            w.writerow([kind] + ["" if v is None else (repr(v) if isinstance(v, float) else v)
                                 for v in vals])
    return buf.getvalue()


def cmd_loocv(args) -> int:
    ds = load_dataset(args.data)
    if args.classifier == "all":
        cfg = _eval_config(args, ClassifierKind.MULTILEVEL)
        results = compare(ds, cfg)
        main = results[ClassifierKind.MULTILEVEL.value]
        report = report_dict(main, results)
    else:
        cfg = _eval_config(args, ClassifierKind.parse(args.classifier))
        main = loocv(ds, cfg)
        results = {cfg.classifier.value: main}
        report = report_dict(main)
    manifest = run_manifest("loocv", cfg.to_dict(), [args.data])
    if args.report:
        save_report(report, args.report, manifest)
    if args.records:
        atomic_write_text(args.records, _records_csv(results))
        write_sidecar_manifest(args.records, manifest)
    if args.plot:
        from .plotting import plot_comparison, plot_confusion
        if "comparison" in report:
            plot_comparison(report["comparison"], args.plot)
        else:
            plot_confusion(report["confusion"], args.plot, title=cfg.classifier.value)
    _print_metrics(report)
    return 0


def _fmt(v) -> str:
    return "undefined" if v is None else f"{v:.2f}"


def _print_metrics(report: dict) -> None:
    if "comparison" in report:
        print(f"{'':12s}" + "".join(f"{c['label']:>14s}" for c in report["comparison"]))
        for key, name in (("sn", "Sensitivity"), ("sp", "Specificity"), ("ac", "Accuracy")):
            print(f"{name:12s}" + "".join(f"{_fmt(c[key]):>14s}" for c in report["comparison"]))
    else:
        m, c = report["metrics"], report["confusion"]
        print(f"TP={c['tp']} TN={c['tn']} FP={c['fp']} FN={c['fn']}")
        print(f"SN={_fmt(m['sn'])} SP={_fmt(m['sp'])} AC={_fmt(m['ac'])}")


def cmd_synth(args) -> int:
    if args.n_per_class is not None:
        per_class = args.n_per_class
    else:
        if args.n % 2:
            raise ParameterError(f"--n is the total sample count and must be even, got {args.n}")
        per_class = args.n // 2
    cfg = SynthConfig(n_per_class=per_class, size=args.size, seed=args.seed, difficulty=args.difficulty)
    manifest_path = write_dataset(generate(cfg), args.out)
    write_sidecar_manifest(manifest_path, run_manifest("synth", cfg.to_dict()))
    print(f"wrote {2 * per_class} images and {manifest_path}")
    return 0


def cmd_report(args) -> int:
    from .plotting import plot_comparison, plot_confusion, plot_scores
    report = load_report(args.report)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fmt = args.format
    written = []

    comparison = report.get("comparison")
    if comparison is None:
        kind = report.get("config", {}).get("classifier", "classifier")
        comparison = [{"key": kind, "label": kind, **report["metrics"], "confusion": report["confusion"]}]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["metric"] + [c["label"] for c in comparison])
    for key, name in (("sn", "sensitivity"), ("sp", "specificity"), ("ac", "accuracy")):
        w.writerow([name] + ["" if c[key] is None else f"{c[key]:.2f}" for c in comparison])
    table = out / "metrics_table.csv"
    atomic_write_text(table, buf.getvalue())
    written.append(table)

    for c in comparison:
        written.append(plot_confusion(c["confusion"], out / f"confusion_{c['key']}.{fmt}", title=c["label"]))
    if len(comparison) > 1:
        written.append(plot_comparison(comparison, out / f"comparison.{fmt}"))
    if args.records:
        with open(args.records, newline="", encoding="utf-8") as fh:
            recs = [r for r in csv.DictReader(fh) if r["classifier"] == "multilevel"]
        for r in recs:
            for k in ("score_haralick", "score_nmf"):
                r[k] = float(r[k]) if r[k] else None
        if recs:
            written.append(plot_scores(recs, out / f"fusion_scores.{fmt}"))
    for p in written:
        print(p)
    return 0


def cmd_metrics(args) -> int:
    cm = ConfusionMatrix(tp=args.tp, tn=args.tn, fp=args.fp, fn=args.fn)
    if min(args.tp, args.tn, args.fp, args.fn) < 0:
        raise ParameterError("counts must be nonnegative")
    m = metrics(cm)
    print(f"{_fmt(m.sensitivity)} / {_fmt(m.specificity)} / {_fmt(m.accuracy)}")
    print(f"SN={_fmt(m.sensitivity)} SP={_fmt(m.specificity)} AC={_fmt(m.accuracy)}")
    for flag in m.flags:
        print(f"warning: {flag}", file=sys.stderr)
    return 0


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="texturekit",
        description="Haralick + NMF texture features, kernel SVMs and multi-level score fusion.",
    )
    parser.add_argument("--version", action="version", version=f"texturekit {__version__}")
    parser.add_argument("--config", help="JSON file whose keys override command-line flags")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("preprocess", help="normalize and denoise one image")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--quantize", action="store_true", help="write gray-level indices scaled to [0, 1]")
    _add_preprocess_opts(p)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("glcm", help="write one directional GLCM (probabilities) as CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--direction", default="h", help="h, v, ld or rd")
    p.add_argument("--out", required=True)
    _add_preprocess_opts(p)
    p.set_defaults(func=cmd_glcm)

    p = sub.add_parser("extract", help="compute Haralick or NMF feature vectors")
    p.add_argument("--in", dest="input", required=True, help="image, directory or manifest CSV")
    p.add_argument("--features", choices=["haralick", "nmf"], default="haralick")
    p.add_argument("--model", help="NMF model (.nmf.json) for --features nmf")
    p.add_argument("--out", required=True)
    _add_preprocess_opts(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("nmf-train", help="fit an NMF basis")
    p.add_argument("--in", dest="input", required=True, help="image directory, manifest or feature CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    _add_nmf_opts(p)
    _add_preprocess_opts(p)
    p.set_defaults(func=cmd_nmf_train)

    p = sub.add_parser("svm-train", help="train an SVM on a labeled feature CSV")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-standardize", action="store_true", help="train on raw feature values")
    _add_kernel_opts(p)
    p.set_defaults(func=cmd_svm_train)

    p = sub.add_parser("fuse", help="bundle a Haralick SVM, an NMF SVM and an NMF encoder")
    p.add_argument("--haralick", required=True)
    p.add_argument("--nmf", required=True)
    p.add_argument("--encoder", required=True)
    p.add_argument("--out", required=True)
    _add_preprocess_opts(p)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("train", help="fit the full multi-level model on a labeled dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="fusion file (*.fusion.json)")
    p.add_argument("--seed", type=int, default=None)
    _add_kernel_opts(p, nmf=True)
    _add_nmf_opts(p)
    _add_preprocess_opts(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="classify images with a fusion model")
    p.add_argument("--fusion", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("loocv", help="leave-one-out cross-validation")
    p.add_argument("--data", required=True, help="directory with manifest.csv, or a manifest CSV")
    p.add_argument("--classifier", default="multilevel",
                   choices=["haralick", "nmf", "concat", "multilevel", "all"])
    p.add_argument("--report")
    p.add_argument("--records")
    p.add_argument("--plot", help="figure path (.svg, .png, .pdf)")
    p.add_argument("--jobs", type=int, default=1, help="folds evaluated concurrently")
    p.add_argument("--seed", type=int, default=None)
    _add_kernel_opts(p, nmf=True)
    _add_nmf_opts(p)
    _add_preprocess_opts(p)
    p.set_defaults(func=cmd_loocv)

    p = sub.add_parser("synth", help="generate a synthetic two-class texture dataset")
    p.add_argument("--n", type=int, default=20, help="total number of images (even)")
    p.add_argument("--n-per-class", type=int, default=None)
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--difficulty", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth, seed_fallback=42)

    p = sub.add_parser("report", help="render tables and figures from a LOOCV report")
    p.add_argument("--report", required=True)
    p.add_argument("--records", help="records CSV from loocv (adds the fusion score plot)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--format", default="svg", choices=["svg", "png", "pdf"])
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("metrics", help="SN / SP / AC from confusion counts")
    for name in ("tp", "tn", "fp", "fn"):
        p.add_argument(f"--{name}", type=int, required=True)
    p.set_defaults(func=cmd_metrics)
    return parser


def _apply_config(args, parser: argparse.ArgumentParser) -> None:
    try:
        with open(args.config, encoding="utf-8") as fh:
            overrides = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataValidationError(f"{args.config}: invalid JSON ({exc})") from None
    if not isinstance(overrides, dict):
        raise DataValidationError(f"{args.config}: expected a JSON object")
    for key, value in overrides.items():
        dest = key.replace("-", "_")
        if dest == "in":
            dest = "input"
        if dest == "c":
            dest = "C"
        if not hasattr(args, dest) or dest in ("func", "command", "config"):
            parser.error(f"config key {key!r} is not an option of {args.command!r}")
        setattr(args, dest, value)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        if args.config:
            _apply_config(args, parser)
        if hasattr(args, "seed") and args.seed is None:
            args.seed = _default_seed(getattr(args, "seed_fallback", 0))
        return args.func(args)
    except ParameterError as exc:
        print(f"texturekit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataValidationError as exc:
        print(f"texturekit: invalid data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"texturekit: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"texturekit: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except TextureKitError as exc:
        print(f"texturekit: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
