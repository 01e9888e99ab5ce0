"""Prediction tables, plurality voting, and greedy ensemble selection."""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .errors import DuplicateId, IdSetMismatch
from .metrics import confusion, jrbm, macro_f1

CSV_HEADER = ("id", "emotion", "intent")


@dataclass(frozen=True)
class PredictionTable:
    """One model's predictions: sample id -> (emotion label, intent label).

    Labels are stored by name, matching the CSV on disk. Row order is
    preserved and defines the output order when the table is voted on.
    """

    model_id: str
    rows: Mapping[str, tuple[str, str]] = field(default_factory=dict)

    def ids(self) -> tuple[str, ...]:
        return tuple(self.rows)

    def to_csv(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            for sample_id, (emo, intent) in self.rows.items():
                writer.writerow([sample_id, emo, intent])

    @classmethod
    def from_csv(cls, path: str | Path, model_id: str | None = None) -> "PredictionTable":
        path = Path(path)
        rows: dict[str, tuple[str, str]] = {}
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = set(CSV_HEADER) - set(reader.fieldnames or ())
            if missing:
                raise ValueError(f"{path}: missing CSV columns {sorted(missing)}")
            for record in reader:
                sample_id = record["id"]
                if sample_id in rows:
                    raise DuplicateId(f"{path}: duplicate sample id '{sample_id}'")
                rows[sample_id] = (record["emotion"], record["intent"])
        return cls(model_id=model_id or path.stem, rows=rows)


def _check_id_sets(tables: Sequence[PredictionTable]) -> None:
    base = set(tables[0].rows)
    for table in tables[1:]:
        if set(table.rows) != base:
            extra = sorted(set(table.rows) - base)[:3]
            gone = sorted(base - set(table.rows))[:3]
            raise IdSetMismatch(
                f"table '{table.model_id}' id set differs from "
                f"'{tables[0].model_id}' (extra: {extra}, missing: {gone})"
            )


def plurality_vote(tables: Sequence[PredictionTable],
                   model_id: str = "vote") -> PredictionTable:
    """Combine tables by per-sample, per-task plurality.

    The label with the highest count wins; whenever two or more labels
    share the top count (including full disagreement), the first table's
    prediction is used. Emotion and intent are voted independently.
    """
    if not tables:
        raise ValueError("plurality_vote needs at least one table")
    _check_id_sets(tables)
    rows: dict[str, tuple[str, str]] = {}
    for sample_id in tables[0].rows:
        winners = []
        for task_idx in (0, 1):
            counts = Counter(t.rows[sample_id][task_idx] for t in tables)
            top = max(counts.values())
            leaders = [label for label, c in counts.items() if c == top]
            if len(leaders) > 1:
                winners.append(tables[0].rows[sample_id][task_idx])
            else:
                winners.append(leaders[0])
        rows[sample_id] = (winners[0], winners[1])
    return PredictionTable(model_id=model_id, rows=rows)


def score_table(table: PredictionTable,
                golds: Mapping[str, tuple[str, str]]) -> tuple[float, float, float]:
    """Score a table against gold labels; returns (emotion F1, intent F1, jrbm).

    The class universe per task is the union of gold and predicted labels,
    in sorted order, so stray predictions count as errors rather than
    crashing the tally.
    """
    if set(table.rows) != set(golds):
        extra = sorted(set(table.rows) - set(golds))[:3]
        gone = sorted(set(golds) - set(table.rows))[:3]
        raise IdSetMismatch(
            f"table '{table.model_id}' ids do not match gold set "
            f"(extra: {extra}, missing: {gone})"
        )
    scores = []
    for task_idx in (0, 1):
        labels = sorted({g[task_idx] for g in golds.values()}
                        | {r[task_idx] for r in table.rows.values()})
        index = {name: k for k, name in enumerate(labels)}
        gold_idx = [index[golds[i][task_idx]] for i in table.rows]
        pred_idx = [index[table.rows[i][task_idx]] for i in table.rows]
        f1, _ = macro_f1(confusion(gold_idx, pred_idx, len(labels)))
        scores.append(f1)
    return scores[0], scores[1], jrbm(scores[0], scores[1])


def greedy_ensemble(
    candidates: Sequence[PredictionTable],
    golds: Mapping[str, tuple[str, str]],
) -> tuple[list[PredictionTable], float]:
    """Forward selection of tables to vote together.

    Expects candidates ordered best-first by standalone validation score.
    Starts from the first, then repeatedly sweeps the unused candidates in
    order, keeping each one iff adding it strictly improves the voted
    score. A two-table vote always equals its first table (disagreements
    are 1-1 ties), so from any plateau where no single append helps the
    sweep also tries appending pairs in rank order; accepting a pair hands
    control back to the one-at-a-time sweep. Stops when neither improves.
    Returns the kept tables in insertion order (which fixes vote tie-break
    precedence) and the final score.
    """
    if not candidates:
        raise ValueError("greedy_ensemble needs at least one candidate")
    selected = [candidates[0]]
    used = {0}
    best = score_table(plurality_vote(selected), golds)[2]

    def try_append(extension: list[int]) -> bool:
        nonlocal selected, best
        trial = selected + [candidates[j] for j in extension]
        trial_score = score_table(plurality_vote(trial), golds)[2]
        if trial_score > best:
            selected = trial
            best = trial_score
            used.update(extension)
            return True
        return False

    while True:
        unused = [j for j in range(1, len(candidates)) if j not in used]
        if any(try_append([j]) for j in unused):
            continue
        unused = [j for j in range(1, len(candidates)) if j not in used]
        if not any(try_append([i, j])
                   for n, i in enumerate(unused) for j in unused[n + 1:]):
            break
    return selected, best


def rank_by_score(tables: Sequence[PredictionTable],
                  golds: Mapping[str, tuple[str, str]]) -> list[PredictionTable]:
    """Sort tables by standalone jrbm, best first; ties keep input order."""
    scored = [(score_table(t, golds)[2], k) for k, t in enumerate(tables)]
    order = sorted(range(len(tables)), key=lambda k: (-scored[k][0], k))
    return [tables[k] for k in order]
