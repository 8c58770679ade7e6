"""Gate service state: active scorer, durable submission log, annotator stats.

The active scorer is an immutable snapshot swapped atomically on retrain;
check/submit calls always score against one complete version. Submissions
are appended to a canonical-format JSONL log (directly loadable by the
data module for offline audits) with a verdict sidecar, and annotator
stats always equal a single-threaded replay of those logs.
"""

from __future__ import annotations

import datetime
import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional

from qabias.bias import build_annotator_minisplits, inter_annotator_matrix, ShiftMatrix
from qabias.data import DatasetHandle, QAItem, Split, item_from_record, _record_line
from qabias.errors import QABiasError, ValidationError
from qabias.experiments import argmax_lowest
from qabias.scorer import LexicalScorer, ScorerConfig, build_lexical_scorer, train_scorer


class GateUnavailable(QABiasError):
    """The service has no usable scorer or not enough data for the request."""


@dataclass(frozen=True)
class GateSettings:
    storage_dir: Path = Path("gate-data")
    flag_threshold: float = 0.6
    retrain_every: int = 0  # submissions between automatic retrains; 0 = manual only
    min_retrain_items: int = 25
    scorer_config: ScorerConfig = field(default_factory=ScorerConfig.lexical)
    # On-demand annotator matrix: per-annotator sample sizes and max size.
    matrix_train: int = 40
    matrix_valid: int = 10
    matrix_top_k: int = 5

    @classmethod
    def from_env(cls, **overrides) -> "GateSettings":
        env = os.environ
        kwargs = dict(
            storage_dir=Path(env.get("QABIAS_GATE_STORAGE", "gate-data")),
            flag_threshold=float(env.get("QABIAS_GATE_THRESHOLD", "0.6")),
            retrain_every=int(env.get("QABIAS_GATE_RETRAIN_EVERY", "0")),
            min_retrain_items=int(env.get("QABIAS_GATE_MIN_RETRAIN", "25")),
        )
        kwargs.update(overrides)
        return cls(**kwargs)


@dataclass(frozen=True)
class GateVerdict:
    item_id: str
    bias_score: float
    predicted_idx: int
    flagged: bool
    model_version: str
    explanation: Optional[list] = None


@dataclass(frozen=True)
class AnnotatorStats:
    annotator_id: str
    n_submitted: int
    n_flagged: int
    flag_rate: float
    mean_bias_score: float
    last_updated: str


class _ActiveModel(NamedTuple):
    version: int
    scorer: object


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


class GateState:
    def __init__(self, settings: GateSettings):
        self.settings = settings
        self._lock = threading.RLock()
        self._items: dict[str, QAItem] = {}
        self._order: list[str] = []  # submission order
        self._verdicts: dict[str, GateVerdict] = {}
        self._last_seen: dict[str, str] = {}

        settings.storage_dir.mkdir(parents=True, exist_ok=True)
        self._log_path = settings.storage_dir / "submissions.jsonl"
        self._verdict_path = settings.storage_dir / "verdicts.jsonl"
        self._replay()

        # Cold start: a fresh (uniform) lexical scorer, upgraded from the
        # replayed log right away when enough data is on disk.
        self._active = _ActiveModel(1, build_lexical_scorer(settings.scorer_config, []))
        if len(self._items) >= settings.min_retrain_items:
            self.retrain()

    # -- durable log -------------------------------------------------------

    def _replay(self) -> None:
        if self._log_path.exists():
            with self._log_path.open("r", encoding="utf-8") as f:
                for line_no, line in enumerate(f, 1):
                    line = line.strip()
                    if not line:
                        continue
                    item = item_from_record(json.loads(line), line_no)
                    if item.item_id not in self._items:
                        self._items[item.item_id] = item
                        self._order.append(item.item_id)
        if self._verdict_path.exists():
            with self._verdict_path.open("r", encoding="utf-8") as f:
                for line in f:
                    line = line.strip()
                    if not line:
                        continue
                    rec = json.loads(line)
                    ts = rec.pop("timestamp", _now())
                    verdict = GateVerdict(**rec)
                    self._verdicts[verdict.item_id] = verdict
                    self._last_seen[verdict.item_id] = ts

    def _append(self, item: QAItem, verdict: GateVerdict, ts: str) -> None:
        with self._log_path.open("a", encoding="utf-8") as f:
            f.write(_record_line(item) + "\n")
        with self._verdict_path.open("a", encoding="utf-8") as f:
            rec = {
                "item_id": verdict.item_id,
                "bias_score": verdict.bias_score,
                "predicted_idx": verdict.predicted_idx,
                "flagged": verdict.flagged,
                "model_version": verdict.model_version,
                "explanation": verdict.explanation,
                "timestamp": ts,
            }
            f.write(json.dumps(rec) + "\n")

    # -- scoring -----------------------------------------------------------

    def check_item(self, item: QAItem) -> GateVerdict:
        """Score an item without persisting anything."""
        item.validate()
        active = self._active  # one snapshot for the whole request
        sv = active.scorer.score_item(item)
        predicted_idx, _ = argmax_lowest(sv.probs)
        bias_score = sv.probs[item.correct_idx]
        flagged = (
            predicted_idx == item.correct_idx
            and bias_score > self.settings.flag_threshold
        )
        explanation = None
        if isinstance(active.scorer, LexicalScorer):
            explanation = active.scorer.explain(item, item.correct_idx)
        return GateVerdict(
            item_id=item.item_id,
            bias_score=bias_score,
            predicted_idx=predicted_idx,
            flagged=flagged,
            model_version=f"v{active.version}",
            explanation=explanation,
        )

    def submit_item(self, item: QAItem) -> tuple[GateVerdict, bool]:
        """Persist a submission exactly once; returns (verdict, duplicate)."""
        item.validate()
        if item.annotator_id is None:
            raise ValidationError(f"item {item.item_id!r}: annotator_id is required")
        with self._lock:
            if item.item_id in self._verdicts:
                return self._verdicts[item.item_id], True
            verdict = self.check_item(item)
            ts = _now()
            self._append(item, verdict, ts)
            self._items[item.item_id] = item
            self._order.append(item.item_id)
            self._verdicts[item.item_id] = verdict
            self._last_seen[item.item_id] = ts
            n = len(self._order)
        every = self.settings.retrain_every
        if every > 0 and n % every == 0:
            threading.Thread(target=self._retrain_quietly, daemon=True).start()
        return verdict, False

    # -- retraining --------------------------------------------------------

    def retrain(self) -> dict:
        """Train a fresh scorer on the full log and swap it in atomically."""
        with self._lock:
            items = [self._items[iid] for iid in self._order]
        if len(items) < self.settings.min_retrain_items:
            return {
                "retrained": False,
                "model_version": f"v{self._active.version}",
                "reason": (
                    f"{len(items)} submissions on log, "
                    f"minimum is {self.settings.min_retrain_items}"
                ),
            }
        ds = DatasetHandle("gate-log", items)
        split = Split("gate-log-train", "train",
                      frozenset(it.item_id for it in items), "full submission log")
        scorer = train_scorer(self.settings.scorer_config, split, ds)
        with self._lock:
            version = self._active.version + 1
            self._active = _ActiveModel(version, scorer)
        return {"retrained": True, "model_version": f"v{version}"}

    def _retrain_quietly(self) -> None:
        try:
            self.retrain()
        except Exception:
            # A failed background retrain keeps the previous model active.
            pass

    # -- stats -------------------------------------------------------------

    def _stats_for(self, annotator_id: str, item_ids: list[str]) -> AnnotatorStats:
        verdicts = [self._verdicts[iid] for iid in item_ids]
        n = len(verdicts)
        n_flagged = sum(1 for v in verdicts if v.flagged)
        return AnnotatorStats(
            annotator_id=annotator_id,
            n_submitted=n,
            n_flagged=n_flagged,
            flag_rate=n_flagged / n,
            mean_bias_score=sum(v.bias_score for v in verdicts) / n,
            last_updated=max(self._last_seen[iid] for iid in item_ids),
        )

    def annotator_stats(self, annotator_id: str) -> AnnotatorStats:
        with self._lock:
            ids = [
                iid for iid in self._order
                if self._items[iid].annotator_id == annotator_id
            ]
            if not ids:
                raise KeyError(annotator_id)
            return self._stats_for(annotator_id, ids)

    def all_annotator_stats(self) -> list[AnnotatorStats]:
        """Consistent snapshot, sorted by flag_rate descending then id."""
        with self._lock:
            by_annotator: dict[str, list[str]] = {}
            for iid in self._order:
                aid = self._items[iid].annotator_id
                if aid is not None:
                    by_annotator.setdefault(aid, []).append(iid)
            stats = [self._stats_for(a, ids) for a, ids in by_annotator.items()]
        return sorted(stats, key=lambda s: (-s.flag_rate, s.annotator_id))

    # -- introspection -----------------------------------------------------

    def health(self) -> dict:
        active = self._active
        with self._lock:
            n = len(self._order)
        return {
            "status": "ok",
            "model_version": f"v{active.version}",
            "log_size": n,
            "flag_threshold": self.settings.flag_threshold,
        }

    def shift_matrix(self) -> ShiftMatrix:
        """On-demand inter-annotator matrix over the busiest logged annotators."""
        s = self.settings
        need = s.matrix_train + s.matrix_valid
        with self._lock:
            items = [self._items[iid] for iid in self._order]
        counts: dict[str, int] = {}
        for it in items:
            if it.annotator_id is not None:
                counts[it.annotator_id] = counts.get(it.annotator_id, 0) + 1
        eligible = sorted(
            (a for a, c in counts.items() if c >= need),
            key=lambda a: (-counts[a], a),
        )[: s.matrix_top_k]
        if len(eligible) < 2:
            raise GateUnavailable(
                f"need >= 2 annotators with at least {need} submissions each; "
                f"have {len(eligible)}"
            )
        ds = DatasetHandle("gate-log", items)
        minis = build_annotator_minisplits(ds, eligible, s.matrix_train, s.matrix_valid)
        return inter_annotator_matrix(ds, minis, s.scorer_config)
