"""``emovox`` command line: extract, train, classify, evaluate.

Exit status is 0 on success, 1 when the pipeline failed and 2 on bad usage.
Every output file is written through a temporary file and renamed, so a
failed run never leaves a truncated file behind.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._io import atomic_write_text
from .config import RunConfig, load_config
from .corpus import CorpusManifest, ManifestEntry, load_manifest, load_utterance
from .eval.human import human_report, import_human_annotations
from .eval.loso import inner_confidences, load_speaker_genders, run_loso
from .eval.report import dumps_report, render_text
from .exceptions import EmovoxError
from .features.cache import FeatureTable, extract_table, read_cache, write_cache
from .features.utterance import extract_feature_vector
from .fusion import (
    OaaEnsemble,
    calibrate_threshold,
    classification_csv,
    classify_with_rejection,
    load_model,
    save_model,
)

log = logging.getLogger("emovox")

CACHE_ENV = "EMOVOX_CACHE_DIR"


class UsageError(Exception):
    pass


def _coverage_list(text):
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not values or any(not 0 < v <= 1 for v in values):
        raise argparse.ArgumentTypeError("coverage values must lie in (0, 1]")
    return values


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "taxonomy", None):
        changes["taxonomy"] = args.taxonomy
    if getattr(args, "coverage", None) and args.command == "evaluate":
        changes["coverage"] = args.coverage
    return cfg.replace(**changes) if changes else cfg


def default_cache_path(manifest_path, cfg: RunConfig | None = None) -> Path:
    """``<cache dir>/<manifest stem>.features.csv``; the cache dir comes from the config, then the environment."""
    base = (cfg.cache_dir if cfg and cfg.cache_dir else "") or os.environ.get(CACHE_ENV) or Path(manifest_path).parent
    return Path(base) / f"{Path(manifest_path).stem}.features.csv"


def _write_out(text: str, out) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        atomic_write_text(Path(out), text)


def _table_manifest(table: FeatureTable) -> CorpusManifest:
    """Stand-in manifest built from a feature cache, for ground truth lookups."""
    return CorpusManifest(
        tuple(ManifestEntry(u, Path(), s, e) for u, s, e in zip(table.utterance_ids, table.speaker_ids, table.emotions))
    )


# ------------------------------------------------------------------ commands


def cmd_extract(args) -> int:
    cfg = _config(args)
    manifest = load_manifest(args.manifest)
    out = Path(args.cache or args.out or default_cache_path(args.manifest, cfg))
    table, skipped = extract_table(manifest, cfg.f0_min, cfg.f0_max, n_jobs=args.jobs)
    write_cache(table, out)
    skip_path = out.with_name(out.name + ".skipped.csv")
    lines = ["utterance_id,reason"] + [f"{u},{r.replace(',', ';')}" for u, r in skipped]
    atomic_write_text(skip_path, "\n".join(lines) + "\n")
    for uid, reason in skipped:
        log.warning("skipped %s: %s", uid, reason)
    log.info("wrote %d feature rows to %s (%d skipped)", len(table), out, len(skipped))
    return 0


def _load_table(args, cfg) -> FeatureTable:
    if args.cache and Path(args.cache).exists():
        return read_cache(args.cache)
    if getattr(args, "manifest", None):
        path = Path(args.cache) if args.cache else default_cache_path(args.manifest, cfg)
        if path.exists():
            return read_cache(path)
        table, skipped = extract_table(load_manifest(args.manifest), cfg.f0_min, cfg.f0_max, n_jobs=args.jobs)
        for uid, reason in skipped:
            log.warning("skipped %s: %s", uid, reason)
        write_cache(table, path)
        return table
    if args.cache:
        raise FileNotFoundError(f"no such feature cache: {args.cache}")
    raise UsageError("need --cache or --manifest")


def cmd_train(args) -> int:
    cfg = _config(args)
    if cfg.taxonomy == "all":
        raise UsageError("train builds one model; pick --taxonomy emotion6, apn or pnn")
    table = _load_table(args, cfg)
    out = args.model or args.out
    if not out:
        raise UsageError("train needs --model (or --out) for the model file")
    ens = OaaEnsemble(taxonomy=cfg.taxonomy, random_state=cfg.seed, n_jobs=args.jobs, **cfg.ensemble_params())
    ens.fit(table.X, table.emotions, speakers=table.speaker_ids)
    if cfg.calibration == "inner" and len(table.speakers) >= 2:
        ens.calibration_confidence_ = inner_confidences(table, cfg.taxonomy, cfg, cfg.seed)
    save_model(ens, out, config=cfg.to_dict(), seed=cfg.seed)
    log.info("wrote %s model with %d binary classifiers to %s", cfg.taxonomy, len(ens.estimators_), out)
    return 0


def cmd_classify(args) -> int:
    ens = load_model(args.model)
    if args.threshold is not None and args.coverage is not None:
        raise UsageError("give either --threshold or --coverage, not both")
    if args.coverage is not None:
        if len(args.coverage) != 1:
            raise UsageError("classify takes a single --coverage value")
        threshold = calibrate_threshold(ens.calibration_confidence_, args.coverage[0])
    elif args.threshold is not None:
        threshold = args.threshold
    else:
        threshold = float(ens.threshold)
    if not 0.0 <= threshold <= 1.0:
        raise UsageError("--threshold must lie in [0, 1]")

    if args.wav:
        ids, rows = [], []
        for w in args.wav:
            entry = ManifestEntry(Path(w).stem, Path(w).resolve(), "", "")
            vec = extract_feature_vector(
                load_utterance(entry), f0_min=ens.config_.get("f0_min", 50.0), f0_max=ens.config_.get("f0_max", 500.0)
            )
            ids.append(entry.utterance_id)
            rows.append(vec.values)
        X = np.vstack(rows)
        # single recordings carry no speaker history: use the pooled training statistics
        Z = ens.normalize(X, speakers=None)
    else:
        if not args.cache:
            raise UsageError("classify needs --cache or --wav")
        table = read_cache(args.cache)
        ids = list(table.utterance_ids)
        Z = ens.normalize(table.X, speakers=table.speaker_ids)
    results = [classify_with_rejection(ens, z, threshold, uid) for uid, z in zip(ids, Z)]
    _write_out(classification_csv(results, ens.taxonomy), args.out)
    log.info("classified %d rows at threshold %.6g, %d rejected", len(results), threshold, sum(r.rejected for r in results))
    return 0


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    table = _load_table(args, cfg)
    genders = load_speaker_genders(args.speakers) if args.speakers else None
    machine = {}
    for tax in cfg.taxonomies():
        log.info("leave-one-speaker-out evaluation for %s", tax)
        machine[tax] = run_loso(table, tax, cfg, seed=cfg.seed, n_jobs=args.jobs, speaker_genders=genders)
    human = {}
    if args.human_csv:
        manifest = load_manifest(args.manifest) if args.manifest else _table_manifest(table)
        ann = import_human_annotations(args.human_csv, manifest)
        human = {tax: human_report(ann, manifest, tax, genders) for tax in cfg.taxonomies()}
    text = render_text(machine, human)
    doc = dumps_report(machine, human)
    if args.out:
        out = Path(args.out)
        stem = out.with_suffix("") if out.suffix in (".json", ".txt") else out
        atomic_write_text(stem.with_name(stem.name + ".json"), doc)
        atomic_write_text(stem.with_name(stem.name + ".txt"), text)
    else:
        sys.stdout.write(text)
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="emovox", description="Speech emotion classification with a reject option.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *, seed=True, taxonomy=True):
        sp.add_argument("--config", help="flat key = value run configuration")
        sp.add_argument("--jobs", type=int, default=None, help="maximum parallel workers")
        if seed:
            sp.add_argument("--seed", type=int, default=None)
        if taxonomy:
            sp.add_argument("--taxonomy", choices=("emotion6", "apn", "pnn", "all"))

    sp = sub.add_parser("extract", help="compute the feature cache of a manifest")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--cache", help=f"output cache CSV (default: ${CACHE_ENV}/<manifest>.features.csv)")
    sp.add_argument("--out", help="alias of --cache")
    common(sp, seed=False, taxonomy=False)
    sp.set_defaults(func=cmd_extract)

    sp = sub.add_parser("train", help="train a one-against-all ensemble on a feature cache")
    sp.add_argument("--cache")
    sp.add_argument("--manifest", help="extract features first when no cache is given")
    sp.add_argument("--model", help="model JSON to write")
    sp.add_argument("--out", help="alias of --model")
    common(sp)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("classify", help="classify cached feature rows or WAV files")
    sp.add_argument("--model", required=True)
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--cache")
    src.add_argument("--wav", nargs="+")
    sp.add_argument("--threshold", type=float)
    sp.add_argument("--coverage", type=_coverage_list, help="target fraction to classify, calibrated on training data")
    sp.add_argument("--out", help="classification CSV (default: stdout)")
    sp.add_argument("--jobs", type=int, default=None)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("evaluate", help="leave-one-speaker-out evaluation and reports")
    sp.add_argument("--manifest")
    sp.add_argument("--cache")
    sp.add_argument("--coverage", type=_coverage_list, help="comma-separated coverage grid, e.g. 0.5,0.8,1.0")
    sp.add_argument("--human-csv", help="listener responses to compare against")
    sp.add_argument("--speakers", help="speaker_id,gender CSV for per-gender accuracy")
    sp.add_argument("--out", help="report path stem; writes <stem>.txt and <stem>.json (default: text to stdout)")
    common(sp)
    sp.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="emovox: %(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (EmovoxError, OSError, ValueError) as exc:
        print(f"emovox {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
