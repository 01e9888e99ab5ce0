"""Command line surface: synth, train, eval, vote, ablate.

Every command is deterministic given (config, seed), writes only under its
--out directory, and exits nonzero with a one-line machine-parsable message
on stderr for any contract violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import figures
from .config import load_config
from .corpus.dataset import (Dataset, SPLITS, load_manifest,
                             read_manifest_labels, save_manifest)
from .corpus.synthetic import synth_generate
from .ensemble import PredictionTable, plurality_vote, score_table
from .errors import (ConfigError, DivergedLoss, IdSetMismatch, JointrecError,
                     MissingFile)
from .metrics import evaluate, predict
from .model import load_checkpoint
from .training import train

logger = logging.getLogger("jointrec")

_LOG_LEVELS = {"debug": logging.DEBUG, "info": logging.INFO, "warn": logging.WARNING}

# ablation grid: (key, display name, TrainConfig toggle overrides)
ABLATION_ROWS = (
    ("full", "Full system", {}),
    ("no_augmentation", "w/o data augmentation", {"use_augmentation": False}),
    ("no_swfc", "w/o SWFC loss", {"use_swfc": False}),
    ("no_modality_dropout", "w/o modality dropout", {"use_modality_dropout": False}),
)


def _setup_logging() -> None:
    level = _LOG_LEVELS.get(os.environ.get("JOINTREC_LOG", "warn").lower(),
                            logging.WARNING)
    logging.basicConfig(level=level,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")


def _manifest_path(data: str | Path) -> Path:
    path = Path(data)
    if path.is_dir():
        path = path / "manifest.jsonl"
    if not path.is_file():
        raise MissingFile(f"no manifest at {path}")
    return path


def _load_dataset(data: str | Path) -> Dataset:
    manifest = _manifest_path(data)
    return load_manifest(manifest, manifest.parent)


def _predictions_table(model, dataset: Dataset, split: str, batch_size: int,
                       model_id: str) -> PredictionTable:
    rows = {}
    for sample_id, emo, intent in predict(model, dataset, split, batch_size):
        rows[sample_id] = (dataset.vocab.emotion_labels[emo],
                           dataset.vocab.intent_labels[intent])
    return PredictionTable(model_id=model_id, rows=rows)


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n")


# --- commands ---------------------------------------------------------------

def cmd_synth(args) -> int:
    cfg = load_config(args.config)
    seed = cfg.data_seed if args.seed is None else args.seed
    dataset = synth_generate(cfg.synth, seed)
    out = Path(args.out)
    save_manifest(dataset, out / "manifest.jsonl", out)
    sizes = {split: len(dataset.split(split)) for split in SPLITS}
    print(f"wrote {len(dataset.samples)} samples to {out / 'manifest.jsonl'} "
          f"(train={sizes['train']} val={sizes['val']} test={sizes['test']}, "
          f"seed={seed})")
    return 0


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_train_seed(args.seed)
    dataset = _load_dataset(args.data)
    out = Path(args.out)
    history = train(cfg.train, dataset, out)
    _write_json(out / "history.json", history.to_dict())
    figures.save_training_curves(history, out / "training_curves.png")
    best = history.best_checkpoint()
    print(f"trained {history.stopped_epoch} epoch(s); best val jrbm "
          f"{best.val_jrbm:.4f} at epoch {best.epoch}; "
          f"{len(history.checkpoints)} checkpoint(s) under {out / 'ckpt'}")
    return 0


def cmd_eval(args) -> int:
    model, sidecar = load_checkpoint(args.ckpt)
    dataset = _load_dataset(args.data)
    out = Path(args.out)
    report = evaluate(model, dataset, args.split, batch_size=args.batch_size)
    _write_json(out / "report.json", report.to_dict())
    table = _predictions_table(model, dataset, args.split, args.batch_size,
                               model_id=Path(args.ckpt).stem)
    table.to_csv(out / "preds.csv")
    figures.save_confusion_heatmaps(report, dataset.vocab.emotion_labels,
                                    dataset.vocab.intent_labels,
                                    out / "confusion.png")
    print(f"split={args.split} n={report.num_samples} "
          f"emotion_f1={report.emotion_f1:.4f} intent_f1={report.intent_f1:.4f} "
          f"jrbm={report.jrbm:.4f}")
    return 0


def cmd_vote(args) -> int:
    tables = [PredictionTable.from_csv(path) for path in args.preds]
    # eval runs all write preds.csv; fall back to full paths when stems collide
    if len({t.model_id for t in tables}) < len(tables):
        tables = [replace(t, model_id=str(path))
                  for t, path in zip(tables, args.preds)]
    _, golds = read_manifest_labels(_manifest_path(args.data))
    # tables cover one split; score against just those manifest rows
    unknown = set(tables[0].rows) - set(golds)
    if unknown:
        raise IdSetMismatch(
            f"prediction ids not in gold manifest: {sorted(unknown)[:3]}")
    golds = {i: golds[i] for i in tables[0].rows}
    voted = plurality_vote(tables)
    out = Path(args.out)
    voted.to_csv(out / "vote_preds.csv")

    members = []
    for table in tables:
        _, _, score = score_table(table, golds)
        members.append({"model_id": table.model_id, "jrbm": score})
    emo_f1, int_f1, joint = score_table(voted, golds)
    _write_json(out / "vote_report.json", {
        "members": members,
        "ensemble": {"emotion_f1": emo_f1, "intent_f1": int_f1, "jrbm": joint},
    })
    figures.save_vote_chart([(m["model_id"], m["jrbm"]) for m in members],
                            joint, out / "vote_scores.png")
    print(f"voted {len(tables)} table(s): ensemble jrbm {joint:.4f} "
          f"(best member {max(m['jrbm'] for m in members):.4f})")
    return 0


def _format_ablation_text(rows) -> str:
    headers = ("variant", "val_jrbm", "test_jrbm", "emotion_f1", "intent_f1")
    width = max(len(r["name"]) for r in rows) + 2
    lines = [headers[0].ljust(width)
             + "".join(h.rjust(12) for h in headers[1:])]
    for row in rows:
        if row["error"]:
            lines.append(row["name"].ljust(width) + f"  failed: {row['error']}")
            continue
        lines.append(row["name"].ljust(width)
                     + f"{row['val_jrbm']:12.4f}{row['test_jrbm']:12.4f}"
                     + f"{row['test_emotion_f1']:12.4f}{row['test_intent_f1']:12.4f}")
    return "\n".join(lines) + "\n"


def cmd_ablate(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_train_seed(args.seed)
    dataset = _load_dataset(args.data)
    out = Path(args.out)

    rows = []
    first_error: JointrecError | None = None
    for key, name, toggles in ABLATION_ROWS:
        row = {"key": key, "name": name, "toggles": toggles, "error": None,
               "val_jrbm": None, "test_jrbm": None,
               "test_emotion_f1": None, "test_intent_f1": None,
               "best_epoch": None}
        row_out = out / "ablate" / key
        try:
            row_cfg = replace(cfg.train, **toggles)
            history = train(row_cfg, dataset, row_out)
            _write_json(row_out / "history.json", history.to_dict())
            best = history.best_checkpoint()
            model, _ = load_checkpoint(row_out / best.path)
            report = evaluate(model, dataset, "test",
                              batch_size=cfg.train.eval_batch_size)
            row.update(val_jrbm=best.val_jrbm, test_jrbm=report.jrbm,
                       test_emotion_f1=report.emotion_f1,
                       test_intent_f1=report.intent_f1, best_epoch=best.epoch)
        except JointrecError as exc:
            logger.error("ablation row '%s' failed: %s", key, exc)
            row["error"] = f"{type(exc).__name__}: {exc}"
            first_error = first_error or exc
        rows.append(row)

    _write_json(out / "ablation.json", {"seed": cfg.train.seed, "rows": rows})
    text = _format_ablation_text(rows)
    (out / "ablation.txt").write_text(text)
    figures.save_ablation_chart(rows, out / "ablation.png")
    print(text, end="")
    if first_error is not None:
        print(f"jointrec: error: {type(first_error).__name__}: {first_error}",
              file=sys.stderr)
        return _exit_code(first_error)
    return 0


# --- wiring -------------------------------------------------------------------

def _exit_code(exc: JointrecError) -> int:
    if isinstance(exc, ConfigError):
        return 2
    if isinstance(exc, DivergedLoss):
        return 3
    if isinstance(exc, IdSetMismatch):
        return 4
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jointrec",
        description="Joint emotion and intent recognition on multimodal features.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None,
                   help="override data.seed from the config")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a model on a manifest dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True,
                   help="manifest file or directory containing manifest.jsonl")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None,
                   help="override train.seed from the config")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on one split")
    p.add_argument("--ckpt", required=True, help="checkpoint .bin path")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", default="test", choices=SPLITS)
    p.add_argument("--batch-size", type=int, default=64)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("vote", help="combine prediction CSVs by plurality")
    p.add_argument("preds", nargs="+", help="prediction CSVs, best model first")
    p.add_argument("--data", required=True, help="gold manifest (labels only)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_vote)

    p = sub.add_parser("ablate", help="run the four-variant toggle grid")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None,
                   help="override train.seed for every row")
    p.set_defaults(func=cmd_ablate)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except JointrecError as exc:
        print(f"jointrec: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
