"""Canonical data model for A5 multiple-choice QA items, file adapters, and splits.

The A5 task: each question carries exactly five candidate answers, one of
which is correct. All source formats are normalized into this model at
ingest; downstream code never sees a source format.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from qabias.errors import DatasetFormatError, SplitError, ValidationError
from qabias.qtypes import classify_question_type

N_ANSWERS = 5

CANONICAL_FIELDS = (
    "item_id",
    "dataset_id",
    "question",
    "answers",
    "correct_idx",
    "annotator_id",
    "source_ref",
)


@dataclass(frozen=True)
class QAItem:
    """One multiple-choice question with five candidate answers."""

    item_id: str
    dataset_id: str
    question: str
    answers: tuple[str, ...]
    correct_idx: int
    annotator_id: Optional[str] = None
    source_ref: Optional[str] = None
    # Unknown fields from the source record, preserved on round-trip.
    extra: dict = field(default_factory=dict, compare=True)

    def validate(self) -> None:
        problems = []
        if not self.item_id:
            problems.append("item_id: must be non-empty")
        if len(self.answers) != N_ANSWERS:
            problems.append(f"answers: expected {N_ANSWERS}, got {len(self.answers)}")
        if not isinstance(self.correct_idx, int) or not 0 <= self.correct_idx <= 4:
            problems.append(f"correct_idx: {self.correct_idx!r} not in [0, 4]")
        if problems:
            raise ValidationError(f"item {self.item_id!r}: " + "; ".join(problems))


@dataclass(frozen=True)
class DatasetStats:
    """Summary counts recomputable from the items themselves."""

    n_items: int
    n_annotators: int
    avg_question_len: float
    avg_answer_len: float
    pct_why_how: float


def compute_stats(items: Sequence[QAItem]) -> DatasetStats:
    """Recompute DatasetStats from scratch. Lengths are whitespace token counts."""
    n = len(items)
    annotators = {it.annotator_id for it in items if it.annotator_id is not None}
    q_tokens = sum(len(it.question.split()) for it in items)
    a_tokens = sum(len(a.split()) for it in items for a in it.answers)
    why_how = sum(
        1 for it in items if classify_question_type(it.question) in ("why", "how")
    )
    return DatasetStats(
        n_items=n,
        n_annotators=len(annotators),
        avg_question_len=q_tokens / n if n else 0.0,
        avg_answer_len=a_tokens / (n * N_ANSWERS) if n else 0.0,
        pct_why_how=100.0 * why_how / n if n else 0.0,
    )


class DatasetHandle:
    """Immutable ordered collection of QAItems with precomputed stats.

    Safe to share across concurrent readers; construction validates every
    item and enforces item_id uniqueness.
    """

    def __init__(self, dataset_id: str, items: Iterable[QAItem]):
        self.dataset_id = dataset_id
        self.items: tuple[QAItem, ...] = tuple(items)
        self._by_id: dict[str, QAItem] = {}
        for it in self.items:
            it.validate()
            if it.item_id in self._by_id:
                raise ValidationError(
                    f"duplicate item_id {it.item_id!r} in dataset {dataset_id!r}"
                )
            self._by_id[it.item_id] = it
        self.stats = compute_stats(self.items)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DatasetHandle):
            return NotImplemented
        return self.dataset_id == other.dataset_id and self.items == other.items

    def get(self, item_id: str) -> QAItem:
        try:
            return self._by_id[item_id]
        except KeyError:
            raise SplitError(
                f"item_id {item_id!r} not found in dataset {self.dataset_id!r}"
            ) from None

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._by_id

    def annotator_ids(self) -> set[str]:
        return {it.annotator_id for it in self.items if it.annotator_id is not None}

    def items_by_annotator(self, annotator_id: str) -> list[QAItem]:
        return [it for it in self.items if it.annotator_id == annotator_id]

    def verify_stats(self) -> bool:
        """Stored stats must match a full recount exactly."""
        return self.stats == compute_stats(self.items)

    def content_hash(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for it in self.items:
            h.update(_record_line(it).encode("utf-8"))
        return h.hexdigest()


@dataclass(frozen=True)
class RecordError:
    """One rejected record from a dataset file."""

    line_no: int
    field: str
    message: str


@dataclass(frozen=True)
class LoadResult:
    """Parsed dataset plus the per-record rejections collected on the way."""

    handle: DatasetHandle
    errors: tuple[RecordError, ...] = ()


# ---------------------------------------------------------------------------
# Canonical line-delimited format
# ---------------------------------------------------------------------------


def _record_line(item: QAItem) -> str:
    rec = {
        "item_id": item.item_id,
        "dataset_id": item.dataset_id,
        "question": item.question,
        "answers": list(item.answers),
        "correct_idx": item.correct_idx,
        "annotator_id": item.annotator_id,
        "source_ref": item.source_ref,
    }
    for key in sorted(item.extra):
        rec[key] = item.extra[key]
    return json.dumps(rec, ensure_ascii=False, separators=(", ", ": "))


def write_canonical(handle: DatasetHandle, path: Union[str, Path]) -> None:
    """Serialize a dataset to the canonical JSONL format (UTF-8, one record per line)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as f:
        for item in handle.items:
            f.write(_record_line(item))
            f.write("\n")


def item_to_record(item: QAItem) -> dict:
    return json.loads(_record_line(item))


def item_from_record(rec: dict, line_no: int = 0) -> QAItem:
    """Build a QAItem from a canonical record dict, validating field presence."""
    missing = [k for k in ("item_id", "question", "answers", "correct_idx") if k not in rec]
    if missing:
        raise DatasetFormatError(
            f"line {line_no}: missing field(s) {', '.join(missing)}"
        )
    answers = rec["answers"]
    if not isinstance(answers, list) or len(answers) != N_ANSWERS:
        raise DatasetFormatError(
            f"line {line_no}: field answers: expected {N_ANSWERS} strings, "
            f"got {len(answers) if isinstance(answers, list) else type(answers).__name__}"
        )
    extra = {k: v for k, v in rec.items() if k not in CANONICAL_FIELDS}
    item = QAItem(
        item_id=str(rec["item_id"]),
        dataset_id=str(rec.get("dataset_id", "")),
        question=str(rec["question"]),
        answers=tuple(str(a) for a in answers),
        correct_idx=rec["correct_idx"],
        annotator_id=rec.get("annotator_id"),
        source_ref=rec.get("source_ref"),
        extra=extra,
    )
    try:
        item.validate()
    except ValidationError as e:
        raise DatasetFormatError(f"line {line_no}: {e}") from None
    return item


def _parse_canonical(path: Path) -> tuple[list[QAItem], list[RecordError]]:
    items: list[QAItem] = []
    errors: list[RecordError] = []
    with path.open("r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                errors.append(RecordError(line_no, "<record>", f"invalid JSON: {e}"))
                continue
            try:
                items.append(item_from_record(rec, line_no))
            except DatasetFormatError as e:
                errors.append(RecordError(line_no, _guess_field(str(e)), str(e)))
    return items, errors


def _guess_field(message: str) -> str:
    for name in ("answers", "correct_idx", "question", "item_id"):
        if name in message:
            return name
    return "<record>"


# ---------------------------------------------------------------------------
# Source-format adapters
# ---------------------------------------------------------------------------

# Default key layouts for the public releases. Overridable via field_map to
# absorb minor version drift.
TVQA_FIELD_MAP = {
    "question": "q",
    "answers": ("a0", "a1", "a2", "a3", "a4"),
    "correct_idx": "answer_idx",
    "item_id": "qid",
    "source_ref": "vid_name",
    "annotator_id": "annotator_id",  # only present in privately shared dumps
}

MOVIEQA_FIELD_MAP = {
    "question": "question",
    "answers": "answers",
    "correct_idx": "correct_index",
    "item_id": "qid",
    "source_ref": "imdb_key",
}


def _parse_tvqa(
    path: Path, dataset_id: str, field_map: Optional[dict] = None
) -> tuple[list[QAItem], list[RecordError]]:
    fm = dict(TVQA_FIELD_MAP)
    if field_map:
        fm.update(field_map)
    items: list[QAItem] = []
    errors: list[RecordError] = []
    with path.open("r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                errors.append(RecordError(line_no, "<record>", f"invalid JSON: {e}"))
                continue
            try:
                answers = tuple(str(rec[a]) for a in fm["answers"] if a in rec)
                known = {fm["question"], fm["correct_idx"], fm["item_id"],
                         fm["source_ref"], fm["annotator_id"], *fm["answers"]}
                item = QAItem(
                    item_id=str(rec[fm["item_id"]]),
                    dataset_id=dataset_id,
                    question=str(rec[fm["question"]]),
                    answers=answers,
                    correct_idx=int(rec[fm["correct_idx"]]),
                    annotator_id=_opt_str(rec.get(fm["annotator_id"])),
                    source_ref=_opt_str(rec.get(fm["source_ref"])),
                    extra={k: v for k, v in rec.items() if k not in known},
                )
                item.validate()
                items.append(item)
            except (KeyError, TypeError, ValueError) as e:
                errors.append(RecordError(line_no, "<record>", f"bad record: {e}"))
            except ValidationError as e:
                errors.append(RecordError(line_no, _guess_field(str(e)), str(e)))
    return items, errors


def _parse_movieqa(
    path: Path, dataset_id: str, field_map: Optional[dict] = None
) -> tuple[list[QAItem], list[RecordError]]:
    # MovieQA ships one JSON array per file. Annotator ids are not available
    # for this corpus; every item gets annotator_id = None.
    fm = dict(MOVIEQA_FIELD_MAP)
    if field_map:
        fm.update(field_map)
    try:
        records = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DatasetFormatError(f"{path}: invalid JSON: {e}") from None
    if not isinstance(records, list):
        raise DatasetFormatError(f"{path}: expected a top-level JSON array")
    items: list[QAItem] = []
    errors: list[RecordError] = []
    for idx, rec in enumerate(records, 1):
        try:
            answers = rec[fm["answers"]]
            if not isinstance(answers, list) or len(answers) != N_ANSWERS:
                raise ValidationError(
                    f"answers: expected {N_ANSWERS}, got "
                    f"{len(answers) if isinstance(answers, list) else '?'}"
                )
            known = {fm["question"], fm["answers"], fm["correct_idx"],
                     fm["item_id"], fm["source_ref"]}
            item = QAItem(
                item_id=str(rec[fm["item_id"]]),
                dataset_id=dataset_id,
                question=str(rec[fm["question"]]),
                answers=tuple(str(a) for a in answers),
                correct_idx=int(rec[fm["correct_idx"]]),
                annotator_id=None,
                source_ref=_opt_str(rec.get(fm["source_ref"])),
                extra={k: v for k, v in rec.items() if k not in known},
            )
            item.validate()
            items.append(item)
        except (KeyError, TypeError, ValueError) as e:
            errors.append(RecordError(idx, "<record>", f"bad record: {e}"))
        except ValidationError as e:
            errors.append(RecordError(idx, _guess_field(str(e)), str(e)))
    return items, errors


def _opt_str(value) -> Optional[str]:
    return None if value is None else str(value)


FORMATS = ("canonical_jsonl", "tvqa_raw", "movieqa_raw")


def parse_dataset_file(
    path: Union[str, Path],
    format: str = "canonical_jsonl",
    dataset_id: Optional[str] = None,
    field_map: Optional[dict] = None,
) -> LoadResult:
    """Load a dataset file, normalizing source conventions into the canonical model.

    Records failing validation are rejected individually and collected in
    the returned error report; the load itself only fails on an unreadable
    or empty file.
    """
    path = Path(path)
    if not path.exists():
        raise DatasetFormatError(f"{path}: no such file")
    if format not in FORMATS:
        raise DatasetFormatError(f"unknown format {format!r}; expected one of {FORMATS}")
    ds_id = dataset_id or path.stem
    if format == "canonical_jsonl":
        items, errors = _parse_canonical(path)
        if items:
            ds_id = dataset_id or items[0].dataset_id or path.stem
    elif format == "tvqa_raw":
        items, errors = _parse_tvqa(path, ds_id, field_map)
    else:
        items, errors = _parse_movieqa(path, ds_id, field_map)
    if not items and not errors:
        raise DatasetFormatError(f"{path}: empty dataset file")
    return LoadResult(handle=DatasetHandle(ds_id, items), errors=tuple(errors))


# ---------------------------------------------------------------------------
# Splits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Split:
    """Named, role-tagged set of item ids."""

    split_id: str
    role: str  # "train" | "valid"
    item_ids: frozenset[str]
    provenance: str = ""

    def __len__(self) -> int:
        return len(self.item_ids)


@dataclass(frozen=True)
class RandomRule:
    ratio: float


@dataclass(frozen=True)
class ByAnnotatorRule:
    train_annotators: frozenset[str]
    valid_annotators: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "train_annotators", frozenset(self.train_annotators))
        object.__setattr__(self, "valid_annotators", frozenset(self.valid_annotators))


SplitRule = Union[RandomRule, ByAnnotatorRule]


def make_split(
    ds: DatasetHandle, rule: SplitRule, seed: int = 0
) -> tuple[Split, Split]:
    """Partition a dataset into disjoint (train, valid) splits.

    random(ratio): shuffles item ids deterministically from the seed and
    cuts at round(ratio * n). by_annotator: train/valid take exactly the
    items of the named (disjoint) annotator sets.
    """
    if isinstance(rule, RandomRule):
        if not 0.0 < rule.ratio < 1.0:
            raise SplitError(f"split ratio {rule.ratio} outside (0, 1)")
        ids = sorted(it.item_id for it in ds.items)
        rng = random.Random(seed)
        rng.shuffle(ids)
        n_train = int(round(rule.ratio * len(ids)))
        prov = f"random(ratio={rule.ratio}, seed={seed})"
        train = Split(f"{ds.dataset_id}-train", "train", frozenset(ids[:n_train]), prov)
        valid = Split(f"{ds.dataset_id}-valid", "valid", frozenset(ids[n_train:]), prov)
        return train, valid

    if isinstance(rule, ByAnnotatorRule):
        overlap = rule.train_annotators & rule.valid_annotators
        if overlap:
            raise SplitError(f"annotator sets overlap: {sorted(overlap)}")
        present = ds.annotator_ids()
        missing = (rule.train_annotators | rule.valid_annotators) - present
        if missing:
            raise SplitError(
                f"annotators absent from dataset {ds.dataset_id!r}: {sorted(missing)}"
            )
        prov = (
            f"by_annotator(train={sorted(rule.train_annotators)}, "
            f"valid={sorted(rule.valid_annotators)})"
        )
        train_ids = frozenset(
            it.item_id for it in ds.items if it.annotator_id in rule.train_annotators
        )
        valid_ids = frozenset(
            it.item_id for it in ds.items if it.annotator_id in rule.valid_annotators
        )
        train = Split(f"{ds.dataset_id}-train", "train", train_ids, prov)
        valid = Split(f"{ds.dataset_id}-valid", "valid", valid_ids, prov)
        return train, valid

    raise SplitError(f"unknown split rule: {rule!r}")
