"""Request/response models for the HTTP API."""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, Field


class CreateSessionRequest(BaseModel):
    mode: Literal["meta", "auto"]
    request: str = ""
    meta_task: str | None = None  # meta mode: one of the predefined scenarios
    plan: list[str] | None = None  # explicit task list (validated and repaired)
    idempotency_key: str | None = None
    session_id: str | None = None


class PromptModel(BaseModel):
    task_name: str
    state_id: str
    instruction: str
    input: dict[str, Any]
    warnings: list[dict[str, Any]] = Field(default_factory=list)
    status: str


class PlanModel(BaseModel):
    tasks: list[str]
    provenance: str
    repair_log: list[dict[str, Any]] = Field(default_factory=list)
    thoughts: str | None = None


class CreateSessionResponse(BaseModel):
    session_id: str
    status: str
    plan: PlanModel
    prompt: PromptModel | None = None
    created: bool = True  # False when an idempotency key matched an old session


class TurnModel(BaseModel):
    index: int
    state_id: str
    responder: str
    response: str | None = None
    outcome_label: str | None = None
    error: str | None = None
    override: bool = False
    reasoning: str | None = None
    tool_summary: str | None = None


class SessionView(BaseModel):
    session_id: str
    mode: str
    status: str
    task_queue: list[str]
    current_task_index: int
    current_state_id: str | None = None
    needs_review: bool = False
    artifacts: dict[str, Any]
    history: list[TurnModel]
    prompt: PromptModel | None = None


class TurnRequest(BaseModel):
    response: str


class TurnResponse(BaseModel):
    outcome: Literal["accepted", "qa", "ack_required", "completed"]
    status: str
    turn: TurnModel | None = None
    prompt: PromptModel | None = None
    report: dict[str, Any] | None = None
    qa: dict[str, Any] | None = None


class AckRequest(BaseModel):
    text: str = "I acknowledge"


class AutopilotRequest(BaseModel):
    meta_prompt: str = ""
    step_limit: int = Field(default=50, ge=1)
    mode: Literal["run", "propose", "apply"] = "run"
    answer: str | None = None  # apply mode: the previously proposed answer
    thoughts: str | None = None


class AutopilotResponse(BaseModel):
    termination: str | None = None
    transcript: list[dict[str, Any]] = Field(default_factory=list)
    decision: dict[str, Any] | None = None  # propose mode
    status: str
    prompt: PromptModel | None = None
    report: dict[str, Any] | None = None


class OverrideRequest(BaseModel):
    response: str


class QaRequest(BaseModel):
    question: str
    k: int = Field(default=3, ge=1, le=10)


class QaResponse(BaseModel):
    answer: str
    citations: list[str]
    scores: dict[str, float]
    grounded: bool


class OffTargetToolRequest(BaseModel):
    spacer: str
    max_mismatches: int = Field(default=3, ge=0, le=6)
    pam_pattern: str | None = None
    pam_side: Literal["three_prime", "five_prime"] | None = None
    cas_system: str | None = None
    references: dict[str, str] | None = None  # inline records; default fixture set


class PrimerToolRequest(BaseModel):
    record_id: str | None = None
    span: tuple[int, int] | None = None
    region: str | None = None
    method: str = "PCR"


class HealthResponse(BaseModel):
    status: str
    version: str
    workflows: int
    states: int
    library_records: int
    reference_records: int
    corpus_chunks: int
    fixture_hashes: dict[str, str]


class ErrorBody(BaseModel):
    code: str
    message: str
    detail: Any | None = None
