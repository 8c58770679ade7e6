"""Request/response bodies for the gate service HTTP API.

Field names mirror the canonical dataset format bit-exactly.
"""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field, field_validator

from qabias.data import QAItem


class QAItemBody(BaseModel):
    item_id: str = Field(min_length=1)
    dataset_id: str = ""
    question: str
    answers: list[str]
    correct_idx: int = Field(ge=0, le=4)
    annotator_id: Optional[str] = None
    source_ref: Optional[str] = None

    @field_validator("answers")
    @classmethod
    def exactly_five_answers(cls, v: list[str]) -> list[str]:
        if len(v) != 5:
            raise ValueError(f"expected exactly 5 answers, got {len(v)}")
        return v

    def to_item(self) -> QAItem:
        return QAItem(
            item_id=self.item_id,
            dataset_id=self.dataset_id,
            question=self.question,
            answers=tuple(self.answers),
            correct_idx=self.correct_idx,
            annotator_id=self.annotator_id,
            source_ref=self.source_ref,
        )


class GateVerdictBody(BaseModel):
    item_id: str
    bias_score: float
    predicted_idx: int
    flagged: bool
    model_version: str
    explanation: Optional[list[tuple[str, float]]] = None


class SubmitResponse(BaseModel):
    accepted: bool
    duplicate: bool
    verdict: GateVerdictBody


class AnnotatorStatsBody(BaseModel):
    annotator_id: str
    n_submitted: int
    n_flagged: int
    flag_rate: float
    mean_bias_score: float
    last_updated: str


class RetrainResponse(BaseModel):
    retrained: bool
    model_version: str
    reason: Optional[str] = None


class HealthResponse(BaseModel):
    status: str
    model_version: str
    log_size: int
    flag_threshold: float


class ShiftMatrixBody(BaseModel):
    annotators: list[str]
    acc: list[list[Optional[float]]]
    shift: list[list[Optional[float]]]
