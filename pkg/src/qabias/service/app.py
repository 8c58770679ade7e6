"""FastAPI application for the annotation gate."""

from __future__ import annotations

from dataclasses import asdict
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from qabias.errors import ValidationError
from qabias.service.models import (
    AnnotatorStatsBody,
    GateVerdictBody,
    HealthResponse,
    QAItemBody,
    RetrainResponse,
    ShiftMatrixBody,
    SubmitResponse,
)
from qabias.service.state import GateSettings, GateState, GateUnavailable


def create_app(settings: Optional[GateSettings] = None) -> FastAPI:
    state = GateState(settings or GateSettings.from_env())
    app = FastAPI(title="qabias gate service", version="1.0")
    app.state.gate = state
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.post("/v1/check", response_model=GateVerdictBody)
    def check(body: QAItemBody):
        try:
            verdict = state.check_item(body.to_item())
        except ValidationError as e:
            raise HTTPException(status_code=422, detail=str(e))
        return GateVerdictBody(**asdict(verdict))

    @app.post("/v1/items", response_model=SubmitResponse)
    def submit(body: QAItemBody):
        try:
            verdict, duplicate = state.submit_item(body.to_item())
        except ValidationError as e:
            raise HTTPException(status_code=422, detail=str(e))
        return SubmitResponse(
            accepted=True,
            duplicate=duplicate,
            verdict=GateVerdictBody(**asdict(verdict)),
        )

    @app.get("/v1/annotators", response_model=list[AnnotatorStatsBody])
    def annotators():
        return [AnnotatorStatsBody(**asdict(s)) for s in state.all_annotator_stats()]

    @app.get("/v1/annotators/{annotator_id}", response_model=AnnotatorStatsBody)
    def annotator(annotator_id: str):
        try:
            return AnnotatorStatsBody(**asdict(state.annotator_stats(annotator_id)))
        except KeyError:
            raise HTTPException(
                status_code=404, detail=f"unknown annotator {annotator_id!r}"
            )

    @app.get("/v1/matrix", response_model=ShiftMatrixBody)
    def matrix():
        try:
            sm = state.shift_matrix()
        except GateUnavailable as e:
            raise HTTPException(status_code=409, detail=str(e))
        return ShiftMatrixBody(
            annotators=list(sm.annotators),
            acc=[list(row) for row in sm.acc],
            shift=[list(row) for row in sm.shift],
        )

    @app.post("/v1/retrain", response_model=RetrainResponse)
    def retrain():
        return RetrainResponse(**state.retrain())

    @app.get("/v1/health", response_model=HealthResponse)
    def health():
        return HealthResponse(**state.health())

    return app
