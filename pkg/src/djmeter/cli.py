"""Command-line front end: synth, extract, train, evaluate, predict."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import evaluation as ev
from . import features as feat
from . import synth
from .audio_io import PreprocessConfig
from .forest import ForestConfig, ForestModel, SchemaMismatchError

log = logging.getLogger("djmeter")


class CliError(Exception):
    pass


# -- shared options ---------------------------------------------------------

def _add_preprocess_args(p):
    g = p.add_argument_group("preprocessing")
    g.add_argument("--silence-db", type=float, default=-60.0,
                   help="silence threshold for edge cropping, dBFS (default -60)")
    g.add_argument("--center-s", type=float, default=180.0,
                   help="length of the analysed central section in seconds (default 180)")
    g.add_argument("--window", type=int, default=4096, help="window length in samples")
    g.add_argument("--sample-rate", type=int, default=44100,
                   help="expected sample rate; a mismatch only warns")
    g.add_argument("--allow-mono", action="store_true",
                   help="duplicate mono files into two channels instead of rejecting them")


def _preprocess_cfg(args) -> PreprocessConfig:
    return PreprocessConfig(args.silence_db, args.center_s, args.window, args.sample_rate,
                            args.allow_mono)


def _max_features(text):
    if text in ("sqrt", "auto", "all"):
        return text
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected sqrt, all or a positive integer") from None
    if value < 1:
        raise argparse.ArgumentTypeError("max-features must be >= 1")
    return value


def _add_model_args(p):
    g = p.add_argument_group("random forest")
    d = ForestConfig()
    g.add_argument("--n-estimators", type=int, default=d.n_estimators)
    g.add_argument("--max-depth", type=int, default=d.max_depth)
    g.add_argument("--max-features", type=_max_features, default=d.max_features)
    g.add_argument("--random-state", type=int, default=d.random_state)
    g.add_argument("--min-samples-split", type=int, default=d.min_samples_split)
    g.add_argument("--no-bootstrap", action="store_true")
    g.add_argument("--pca", action="store_true", help="project onto principal components first")
    g.add_argument("--pca-k", type=int, default=1, help="number of components (default 1)")
    g.add_argument("--jobs", type=int, default=1, help="worker processes")


def _forest_cfg(args) -> ForestConfig:
    try:
        return ForestConfig(n_estimators=args.n_estimators, max_depth=args.max_depth,
                            bootstrap=not args.no_bootstrap, max_features=args.max_features,
                            random_state=args.random_state,
                            min_samples_split=args.min_samples_split)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _existing(path, what):
    path = Path(path)
    if not path.is_file():
        raise CliError(f"{what} not found: {path}")
    return path


def _writable_parent(path):
    path = Path(path)
    if not path.parent.exists():
        raise CliError(f"output folder does not exist: {path.parent}")
    return path


def _load_records(path):
    try:
        return feat.read_dataset(_existing(path, "dataset"))
    except feat.DatasetError as exc:
        raise CliError(str(exc)) from None


# -- extract ----------------------------------------------------------------

def _extract_one(job):
    entry, cfg = job
    try:
        return feat.extract_song(entry.path, entry.label, cfg, song_id=entry.song_id), None
    except feat.ExtractionError as exc:
        return None, str(exc)


def extract_entries(entries, cfg: PreprocessConfig, jobs: int = 1):
    """Records and error messages in manifest order, independent of ``jobs``."""
    work = [(e, cfg) for e in entries]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_extract_one, work))
    else:
        results = [_extract_one(w) for w in work]
    records = [r for r, _ in results if r is not None]
    errors = [e for _, e in results if e is not None]
    return records, errors


def cmd_extract(args) -> int:
    cfg = _preprocess_cfg(args)
    try:
        entries = feat.read_manifest(_existing(args.manifest, "manifest"))
    except feat.DatasetError as exc:
        raise CliError(str(exc)) from None
    if not entries:
        raise CliError(f"manifest {args.manifest} lists no songs")
    out = _writable_parent(args.out)
    records, errors = extract_entries(entries, cfg, args.jobs)
    for msg in errors:
        print(f"extract failed: {msg}", file=sys.stderr)
    if not records:
        raise CliError("no song could be extracted")
    feat.write_dataset(out, records, args.aggregation)
    short = sum(r.short for r in records)
    print(f"extracted {len(records)}/{len(entries)} songs -> {out} "
          f"({len(errors)} failed, {short} shorter than {cfg.center_duration_s:g} s)")
    return 0


# -- train ------------------------------------------------------------------

def _echo_config(cfg: ForestConfig, n_features: int, pca_k):
    d = pca_k or n_features
    print(f"n_estimators: {cfg.n_estimators}")
    print(f"max_depth: {cfg.max_depth}")
    print(f"criterion: {cfg.criterion}")
    print(f"bootstrap: {cfg.bootstrap}")
    print(f"random_state: {cfg.random_state}")
    print(f"min_samples_split: {cfg.min_samples_split}")
    print(f"max_features: {cfg.resolve_max_features(d)} ({cfg.max_features} of {d})")
    print(f"pca: {'k=' + str(pca_k) if pca_k else 'off'}")


def _aggregation_of(path):
    try:
        return feat.dataset_kind(path)
    except feat.DatasetError as exc:
        raise CliError(str(exc)) from None


def cmd_train(args) -> int:
    cfg = _forest_cfg(args)
    records = _load_records(args.dataset)
    aggregation = _aggregation_of(args.dataset)
    classes = ev.class_list(records)
    if len(classes) < 2:
        raise CliError("training needs at least two classes")
    out = _writable_parent(args.model)
    pca_k = args.pca_k if args.pca else None
    n_features = feat.N_FEATURES if aggregation == feat.MEAN_STD else feat.N_SLOTS
    _echo_config(cfg, n_features, pca_k)
    try:
        model = ev.train(records, cfg, aggregation, pca_k, classes, args.jobs)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    model.save(out)
    X, y = ev.design_matrix(records, aggregation)
    train_acc = float(np.mean(np.array(model.predict(X)) == np.array(y)))
    print(f"trained on {len(records)} songs, {len(classes)} classes, "
          f"{aggregation}; training accuracy {train_acc:.4f}")
    print(f"schema: {model.schema_hash}")
    print(f"model -> {out}")
    return 0


# -- evaluate ---------------------------------------------------------------

def _write_kv(path, items):
    with open(path, "w") as fh:
        for k, v in items:
            fh.write(f"{k}={v}\n")


def cmd_evaluate(args) -> int:
    from . import plots

    cfg = _forest_cfg(args)
    records = _load_records(args.dataset)
    aggregation = _aggregation_of(args.dataset)
    pca_k = args.pca_k if args.pca else None
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else cfg.random_state
    kw = dict(aggregation=aggregation, pca_components=pca_k, n_jobs=args.jobs)
    try:
        if args.protocol == "cv5":
            cv = ev.cross_validate(records, 5, cfg, seed, **kw)
            rep, cm = cv.pooled(), cv.confusion
            extra = [("mean_accuracy", f"{cv.mean_accuracy:.6f}")]
            extra += [(f"fold.{i + 1}.accuracy", f"{a:.6f}") for i, a in enumerate(cv.accuracies)]
        else:
            rep, cm = ev.holdout(records, cfg, 0.9, seed, not args.no_stratify, **kw)
            extra = [("mean_accuracy", f"{rep.accuracy:.6f}")]
        if args.control:
            chance = ev.shuffled_label_control(records, 5, cfg, seed, repeats=args.control, **kw)
            extra.append(("control.shuffled_label_accuracy", f"{chance:.6f}"))
    except ValueError as exc:
        raise CliError(f"evaluation protocol {args.protocol} infeasible: {exc}") from None

    text = format_header(args, len(records), aggregation) + ev.format_report(rep)
    if args.protocol == "cv5":
        text += "\nfold accuracies: " + " ".join(f"{a:.4f}" for a in cv.accuracies)
        text += f"\nmean accuracy: {cv.mean_accuracy:.4f}\n"
    if args.control:
        text += f"shuffled-label control accuracy: {chance:.4f} (chance {1 / len(rep.classes):.4f})\n"
    text += "\nconfusion matrix (rows actual, columns predicted)\n" + ev.format_confusion(cm)
    (out_dir / "report.txt").write_text(text)
    _write_kv(out_dir / "report.kv", ev.report_items(rep) + extra)
    ev.write_confusion_csv(out_dir / "confusion.csv", cm)
    if not args.no_figures:
        plots.confusion_figure(cm, out_dir / "confusion.png", title=rep.protocol)
        plots.metrics_figure(rep, out_dir / "metrics.png")
        if args.protocol == "cv5":
            plots.fold_figure(cv.accuracies, out_dir / "folds.png", chance=1 / len(rep.classes))
    sys.stdout.write(text)
    print(f"reports -> {out_dir}")
    return 0


def format_header(args, n, aggregation):
    return f"dataset: {args.dataset} ({n} songs, {aggregation})\n"


# -- predict ----------------------------------------------------------------

def cmd_predict(args) -> int:
    try:
        model = ForestModel.load(_existing(args.model, "model"))
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot load model {args.model}: {exc}") from None
    aggregation = model.meta.get("aggregation", feat.MEAN_STD)
    if args.dataset:
        records = _load_records(args.dataset)
    else:
        if not args.audio:
            raise CliError("give audio files or --dataset")
        cfg = _preprocess_cfg(args)
        records = []
        for p in args.audio:
            try:
                records.append(feat.extract_song(_existing(p, "audio file"), "", cfg))
            except feat.ExtractionError as exc:
                raise CliError(str(exc)) from None
    if aggregation == feat.PER_WINDOW and any(r.windows is None for r in records):
        raise CliError("model votes over windows but the dataset holds song aggregates")
    try:
        labels, proba = ev.predict_records(model, records)
    except SchemaMismatchError as exc:
        raise CliError(f"schema mismatch: {exc}") from None

    if args.json:
        out = [{"song_id": r.song_id, "predicted": lab,
                "probabilities": dict(zip(model.classes, map(float, p)))}
               for r, lab, p in zip(records, labels, proba)]
        print(json.dumps(out, indent=1))
    else:
        print("song_id,predicted," + ",".join(model.classes))
        for r, lab, p in zip(records, labels, proba):
            print(f"{r.song_id},{lab}," + ",".join(f"{v:.6f}" for v in p))
    return 0


# -- synth ------------------------------------------------------------------

def cmd_synth(args) -> int:
    try:
        spec = synth.load_spec(_existing(args.spec, "corpus spec")) if args.spec \
            else synth.demo_spec(args.count, args.duration, args.seed)
    except synth.SynthSpecError as exc:
        raise CliError(str(exc)) from None
    entries = synth.generate_corpus(spec, args.out_dir)
    print(f"wrote {len(entries)} songs and manifest.csv -> {args.out_dir}")
    return 0


# -- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="djmeter", description="Studio-metering features and DJ classification.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract song features from a manifest")
    p.add_argument("manifest", help="song_id,path,label table")
    p.add_argument("-o", "--out", required=True, help="dataset file to write")
    p.add_argument("--aggregation", choices=feat.AGGREGATIONS, default=feat.MEAN_STD)
    p.add_argument("--jobs", type=int, default=1)
    _add_preprocess_args(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train a random forest on a dataset")
    p.add_argument("dataset")
    p.add_argument("-o", "--model", required=True, help="model file to write")
    _add_model_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="cross-validate or hold out and write reports")
    p.add_argument("dataset")
    p.add_argument("--protocol", choices=("cv5", "split90"), default="cv5")
    p.add_argument("--seed", type=int, default=None, help="partition seed (default random-state)")
    p.add_argument("--no-stratify", action="store_true", help="plain shuffle for split90")
    p.add_argument("--control", type=int, default=0, metavar="N",
                   help="also run N shuffled-label cross-validations")
    p.add_argument("-o", "--out-dir", default="reports")
    p.add_argument("--no-figures", action="store_true")
    _add_model_args(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="predict the DJ of songs")
    p.add_argument("model")
    p.add_argument("audio", nargs="*", help="WAV files to extract and classify")
    p.add_argument("--dataset", help="classify the rows of a dataset file instead")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    _add_preprocess_args(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("synth", help="generate a synthetic WAV corpus and manifest")
    p.add_argument("out_dir")
    p.add_argument("--spec", help="JSON corpus spec (default: three built-in archetypes)")
    p.add_argument("--count", type=int, default=20, help="songs per built-in class")
    p.add_argument("--duration", type=float, default=60.0, help="seconds per built-in song")
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"djmeter {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
