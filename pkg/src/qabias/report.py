"""Structured audit reports: JSON document, markdown summary, CSV exports."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Optional, Sequence, Union

from qabias.bias import ResplitReport, ShiftMatrix
from qabias.data import DatasetHandle
from qabias.experiments import EvalResult, TransferMatrix

SCHEMA_VERSION = "1.0"


def round_half_up(value: float, digits: int = 2) -> float:
    """Two-decimal half-up rounding, matching the reported tables."""
    q = Decimal(10) ** -digits
    return float(Decimal(repr(value)).quantize(q, rounding=ROUND_HALF_UP))


def eval_result_doc(result: EvalResult) -> dict:
    return {
        "accuracy": result.accuracy,
        "n_items": result.n_items,
        "tie_count": result.tie_count,
        "per_item": [
            {
                "item_id": r.item_id,
                "predicted_idx": r.predicted_idx,
                "correct": r.correct,
                "probs": list(r.scores.probs),
                "tie": r.tie,
            }
            for r in result.per_item
        ],
    }


def dataset_summary_doc(ds: DatasetHandle) -> dict:
    return {
        "dataset_id": ds.dataset_id,
        "n_items": ds.stats.n_items,
        "n_annotators": ds.stats.n_annotators,
        "avg_question_len": ds.stats.avg_question_len,
        "avg_answer_len": ds.stats.avg_answer_len,
        "pct_why_how": ds.stats.pct_why_how,
        "content_hash": ds.content_hash(),
    }


def transfer_doc(tm: TransferMatrix) -> dict:
    return {
        "train_ids": list(tm.train_ids),
        "eval_ids": list(tm.eval_ids),
        "acc": [list(row) for row in tm.acc],
        "errors": {f"{k[0]}->{k[1]}": v for k, v in tm.errors.items()},
    }


def shift_matrix_doc(sm: ShiftMatrix) -> dict:
    return {
        "annotators": list(sm.annotators),
        "acc": [list(row) for row in sm.acc],
        "shift": [list(row) for row in sm.shift],
        "errors": {f"{k[0]}->{k[1]}": v for k, v in sm.errors.items()},
    }


def resplit_doc(rr: ResplitReport) -> dict:
    return {
        "overlap_acc": rr.overlap_acc,
        "per_dropped": [
            {"annotator_id": a, "nonoverlap_acc": acc, "shift": shift}
            for a, acc, shift in rr.per_dropped
        ],
    }


@dataclass
class BiasReport:
    """Aggregated audit results. Absent probes stay None and are marked
    explicitly as absent in every emitted format."""

    schema_version: str = SCHEMA_VERSION
    dataset_summaries: list = field(default_factory=list)
    ablation: Optional[dict] = None  # mode -> eval_result_doc
    transfer: Optional[dict] = None
    shift_matrix: Optional[dict] = None
    resplit: Optional[dict] = None
    type_accuracy: Optional[dict] = None  # qtype -> {"accuracy", "n"}
    provenance: dict = field(default_factory=dict)

    def sections_present(self) -> list[str]:
        return [
            name
            for name in ("ablation", "transfer", "shift_matrix", "resplit", "type_accuracy")
            if getattr(self, name) is not None
        ]

    def to_doc(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "dataset_summaries": self.dataset_summaries,
            "ablation": self.ablation,
            "transfer": self.transfer,
            "shift_matrix": self.shift_matrix,
            "resplit": self.resplit,
            "type_accuracy": self.type_accuracy,
            "provenance": self.provenance,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "BiasReport":
        return cls(**doc)


def emit_report(
    report: BiasReport,
    out_dir: Union[str, Path],
    formats: Sequence[str] = ("json", "md", "csv"),
) -> dict[str, Path]:
    """Write the report document plus markdown/CSV views into out_dir.

    Markdown numbers are the document values after two-decimal half-up
    rounding. Requires at least one probe result.
    """
    if not report.sections_present() and not report.dataset_summaries:
        raise ValueError("report contains no probe results")
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ValueError(f"cannot create output directory {out_dir}: {e}") from e

    written: dict[str, Path] = {}
    if "json" in formats:
        path = out_dir / "report.json"
        path.write_text(
            json.dumps(report.to_doc(), indent=2, ensure_ascii=False), encoding="utf-8"
        )
        written["json"] = path
    if "md" in formats:
        path = out_dir / "report.md"
        path.write_text(report_markdown(report), encoding="utf-8")
        written["md"] = path
    if "csv" in formats:
        if report.transfer is not None:
            written["transfer_csv"] = _write_matrix_csv(
                out_dir / "transfer_matrix.csv",
                report.transfer["train_ids"],
                report.transfer["eval_ids"],
                report.transfer["acc"],
                corner="train\\eval",
            )
        if report.shift_matrix is not None:
            sm = report.shift_matrix
            written["shift_acc_csv"] = _write_matrix_csv(
                out_dir / "annotator_accuracy.csv",
                sm["annotators"], sm["annotators"], sm["acc"], corner="train\\eval",
            )
            written["shift_csv"] = _write_matrix_csv(
                out_dir / "annotator_shift.csv",
                sm["annotators"], sm["annotators"], sm["shift"], corner="train\\eval",
            )
        if report.type_accuracy is not None:
            path = out_dir / "type_accuracy.csv"
            with path.open("w", newline="", encoding="utf-8") as f:
                w = csv.writer(f)
                w.writerow(["question_type", "accuracy", "n"])
                for qtype, entry in report.type_accuracy.items():
                    w.writerow([qtype, entry["accuracy"], entry["n"]])
            written["type_csv"] = path
    return written


def _write_matrix_csv(path: Path, row_ids, col_ids, rows, corner: str = "") -> Path:
    with path.open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow([corner] + list(col_ids))
        for rid, row in zip(row_ids, rows):
            w.writerow([rid] + ["" if c is None else c for c in row])
    return path


def _fmt(value) -> str:
    return "n/a" if value is None else f"{round_half_up(value):.2f}"


def report_markdown(report: BiasReport) -> str:
    lines = ["# QA bias audit report", ""]
    lines.append(f"Schema version: {report.schema_version}")
    absent = [
        n for n in ("ablation", "transfer", "shift_matrix", "resplit", "type_accuracy")
        if getattr(report, n) is None
    ]
    if absent:
        lines.append(f"Absent sections: {', '.join(absent)}")
    lines.append("")

    if report.dataset_summaries:
        lines += ["## Datasets", ""]
        lines.append("| dataset | items | annotators | avg Q len | avg A len | % why/how |")
        lines.append("|---|---|---|---|---|---|")
        for s in report.dataset_summaries:
            lines.append(
                f"| {s['dataset_id']} | {s['n_items']} | {s['n_annotators']} "
                f"| {_fmt(s['avg_question_len'])} | {_fmt(s['avg_answer_len'])} "
                f"| {_fmt(s['pct_why_how'])} |"
            )
        lines.append("")

    if report.ablation is not None:
        lines += ["## Context-free ablations", ""]
        lines.append("| mode | accuracy (%) | n | ties |")
        lines.append("|---|---|---|---|")
        for mode, res in report.ablation.items():
            lines.append(
                f"| {mode} | {_fmt(res['accuracy'])} | {res['n_items']} "
                f"| {res['tie_count']} |"
            )
        lines.append("| random guess | 20.00 | - | - |")
        lines.append("")

    if report.transfer is not None:
        lines += ["## Cross-dataset transfer", ""]
        t = report.transfer
        lines.append("| train \\ eval | " + " | ".join(t["eval_ids"]) + " |")
        lines.append("|---" * (len(t["eval_ids"]) + 1) + "|")
        for tid, row in zip(t["train_ids"], t["acc"]):
            lines.append(f"| {tid} | " + " | ".join(_fmt(c) for c in row) + " |")
        lines.append("")

    if report.shift_matrix is not None:
        sm = report.shift_matrix
        lines += ["## Inter-annotator accuracy shift", ""]
        lines.append("| train \\ eval | " + " | ".join(sm["annotators"]) + " |")
        lines.append("|---" * (len(sm["annotators"]) + 1) + "|")
        for aid, acc_row, shift_row in zip(sm["annotators"], sm["acc"], sm["shift"]):
            cells = [
                f"{_fmt(s)} ({_fmt(a)})" for s, a in zip(shift_row, acc_row)
            ]
            lines.append(f"| {aid} | " + " | ".join(cells) + " |")
        lines.append("")
        lines.append("Cell format: shift (raw accuracy).")
        lines.append("")

    if report.resplit is not None:
        rr = report.resplit
        lines += ["## Annotator-non-overlapping re-splits", ""]
        lines.append(f"Overlap accuracy: {_fmt(rr['overlap_acc'])}")
        lines.append("")
        lines.append("| dropped annotator | non-overlap acc (%) | shift |")
        lines.append("|---|---|---|")
        for entry in rr["per_dropped"]:
            lines.append(
                f"| {entry['annotator_id']} | {_fmt(entry['nonoverlap_acc'])} "
                f"| {_fmt(entry['shift'])} |"
            )
        lines.append("")

    if report.type_accuracy is not None:
        lines += ["## Accuracy by question type", ""]
        lines.append("| type | accuracy (%) | n |")
        lines.append("|---|---|---|")
        for qtype, entry in report.type_accuracy.items():
            lines.append(f"| {qtype} | {_fmt(entry['accuracy'])} | {entry['n']} |")
        lines.append("")

    if report.provenance:
        lines += ["## Provenance", ""]
        for key in sorted(report.provenance):
            lines.append(f"- {key}: {report.provenance[key]}")
        lines.append("")
    return "\n".join(lines)
