"""Annotator and question-type bias localization.

Builds per-annotator mini-splits, the k x k inter-annotator accuracy /
accuracy-shift matrix, annotator-non-overlapping re-splits, and the
question-type accuracy breakdown.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional, Sequence

from qabias.data import DatasetHandle, Split
from qabias.errors import SplitError, TrainingError
from qabias.experiments import EvalResult, evaluate_split
from qabias.qtypes import QUESTION_TYPES, classify_question_type
from qabias.scorer import ScorerConfig, train_scorer

# Per-annotator mini-split sizes used for the reference TVQA analysis.
DEFAULT_MINI_TRAIN = 1980
DEFAULT_MINI_VALID = 220


def select_top_annotators(ds: DatasetHandle, k: int) -> list[str]:
    """Top-k annotators by question count, ties broken lexicographically by id."""
    if k < 1:
        raise SplitError("k must be >= 1")
    counts: dict[str, int] = {}
    for item in ds.items:
        if item.annotator_id is not None:
            counts[item.annotator_id] = counts.get(item.annotator_id, 0) + 1
    if not counts:
        raise SplitError(
            f"dataset {ds.dataset_id!r} carries no annotator ids; "
            "annotator analysis is unsupported for it"
        )
    if len(counts) < k:
        raise SplitError(f"requested top-{k} but only {len(counts)} annotators exist")
    ranked = sorted(counts, key=lambda a: (-counts[a], a))
    return ranked[:k]


def build_annotator_minisplits(
    ds: DatasetHandle,
    annotators: Sequence[str],
    per_annotator_train: int = DEFAULT_MINI_TRAIN,
    per_annotator_valid: int = DEFAULT_MINI_VALID,
    seed: int = 0,
) -> dict[str, tuple[Split, Split]]:
    """Uniform per-annotator train/valid samples without replacement."""
    need = per_annotator_train + per_annotator_valid
    out: dict[str, tuple[Split, Split]] = {}
    for annotator in annotators:
        ids = sorted(it.item_id for it in ds.items_by_annotator(annotator))
        if len(ids) < need:
            raise SplitError(
                f"annotator {annotator!r} has {len(ids)} questions, "
                f"needs {need} (short by {need - len(ids)})"
            )
        rng = random.Random((seed, annotator).__repr__())
        rng.shuffle(ids)
        prov = f"minisplit(annotator={annotator}, seed={seed})"
        train = Split(
            f"{ds.dataset_id}-{annotator}-mini-train", "train",
            frozenset(ids[:per_annotator_train]), prov,
        )
        valid = Split(
            f"{ds.dataset_id}-{annotator}-mini-valid", "valid",
            frozenset(ids[per_annotator_train:need]), prov,
        )
        out[annotator] = (train, valid)
    return out


@dataclass(frozen=True)
class ShiftMatrix:
    """k x k annotator train/eval accuracies and their same-row-diagonal shifts.

    shift[i][j] = acc[i][j] - acc[i][i]; failed cells hold None.
    """

    annotators: tuple[str, ...]
    acc: tuple[tuple[Optional[float], ...], ...]
    shift: tuple[tuple[Optional[float], ...], ...]
    errors: dict[tuple[str, str], str]

    @property
    def k(self) -> int:
        return len(self.annotators)


def compute_accuracy_shift(
    acc: Sequence[Sequence[Optional[float]]],
) -> tuple[tuple[Optional[float], ...], ...]:
    """shift[i][j] = acc[i][j] - acc[i][i]. Requires a square matrix."""
    k = len(acc)
    if any(len(row) != k for row in acc):
        raise ValueError("accuracy matrix must be square")
    shift = []
    for i, row in enumerate(acc):
        diag = row[i]
        shift.append(
            tuple(
                None if (cell is None or diag is None) else cell - diag
                for cell in row
            )
        )
    return tuple(shift)


def inter_annotator_matrix(
    ds: DatasetHandle,
    minisplits: dict[str, tuple[Split, Split]],
    config: ScorerConfig,
) -> ShiftMatrix:
    """Train one scorer per annotator mini-train, evaluate on every mini-valid.

    Every cell trains with the identical config seed so row differences
    reflect the data, not initialization. Per-cell failures are recorded
    in place.
    """
    if not minisplits:
        raise TrainingError("no annotator mini-splits given")
    annotators = tuple(minisplits)
    errors: dict[tuple[str, str], str] = {}
    acc_rows = []
    for a_train in annotators:
        train, _ = minisplits[a_train]
        try:
            scorer = train_scorer(config, train, ds)
        except Exception as e:
            errors.update(
                {(a_train, a_eval): f"train failed: {e}" for a_eval in annotators}
            )
            acc_rows.append(tuple(None for _ in annotators))
            continue
        row = []
        for a_eval in annotators:
            _, valid = minisplits[a_eval]
            try:
                row.append(evaluate_split(scorer, valid, ds).accuracy)
            except Exception as e:
                row.append(None)
                errors[(a_train, a_eval)] = str(e)
        acc_rows.append(tuple(row))
    acc = tuple(acc_rows)
    return ShiftMatrix(annotators, acc, compute_accuracy_shift(acc), errors)


@dataclass(frozen=True)
class ResplitReport:
    """Annotator-overlapping baseline vs. leave-one-annotator-out re-splits."""

    overlap_acc: float
    per_dropped: tuple[tuple[str, float, float], ...]  # (annotator, acc, shift)


def non_overlap_resplit_suite(
    ds: DatasetHandle,
    annotators: Sequence[str],
    config: ScorerConfig,
    per_annotator_train: int = DEFAULT_MINI_TRAIN,
    per_annotator_valid: int = DEFAULT_MINI_VALID,
    seed: int = 0,
) -> ResplitReport:
    """1 overlap run + k leave-one-annotator-out runs with matched train budgets.

    The overlap run trains on the same number of questions as each
    non-overlap run ((k-1) * per_annotator_train, sampled across all k
    annotators) so shifts reflect the split rule, not data volume. Each
    non-overlap validation set contains only the dropped annotator's items.
    """
    k = len(annotators)
    if k < 2:
        raise SplitError("resplit suite needs at least 2 annotators")
    minis = build_annotator_minisplits(
        ds, annotators, per_annotator_train, per_annotator_valid, seed
    )

    # Overlap: train spans all k annotators at the non-overlap budget.
    per_a_budget = per_annotator_train * (k - 1) // k
    rng = random.Random(seed)
    overlap_train_ids: set[str] = set()
    for a in annotators:
        ids = sorted(minis[a][0].item_ids)
        rng.shuffle(ids)
        overlap_train_ids.update(ids[:per_a_budget])
    overlap_valid_ids = frozenset().union(*(minis[a][1].item_ids for a in annotators))
    overlap_train = Split(
        f"{ds.dataset_id}-overlap-train", "train", frozenset(overlap_train_ids),
        f"overlap(k={k}, seed={seed})",
    )
    overlap_valid = Split(
        f"{ds.dataset_id}-overlap-valid", "valid", overlap_valid_ids,
        f"overlap(k={k}, seed={seed})",
    )
    scorer = train_scorer(config, overlap_train, ds)
    overlap_acc = evaluate_split(scorer, overlap_valid, ds).accuracy

    per_dropped = []
    for dropped in annotators:
        train_ids = frozenset().union(
            *(minis[a][0].item_ids for a in annotators if a != dropped)
        )
        train = Split(
            f"{ds.dataset_id}-drop-{dropped}-train", "train", train_ids,
            f"non_overlap(dropped={dropped}, seed={seed})",
        )
        valid = minis[dropped][1]
        scorer = train_scorer(config, train, ds)
        acc = evaluate_split(scorer, valid, ds).accuracy
        per_dropped.append((dropped, acc, acc - overlap_acc))
    return ResplitReport(overlap_acc=overlap_acc, per_dropped=tuple(per_dropped))


def accuracy_by_type(
    result: EvalResult, ds: DatasetHandle
) -> dict[str, tuple[float, int]]:
    """Partition an EvalResult by question type; per-type (accuracy, n).

    The partition is exact: counts sum to n_items and the count-weighted
    mean of the per-type accuracies equals the overall accuracy.
    """
    buckets: dict[str, list[bool]] = {}
    for r in result.per_item:
        qtype = classify_question_type(ds.get(r.item_id).question)
        buckets.setdefault(qtype, []).append(r.correct)
    out = {}
    for qtype in QUESTION_TYPES:
        if qtype in buckets:
            flags = buckets[qtype]
            out[qtype] = (100.0 * sum(flags) / len(flags), len(flags))
    return out
