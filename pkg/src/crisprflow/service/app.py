"""HTTP service wrapping the engine, planner, tools and Q&A."""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .. import __version__, autopilot, planner, qa
from ..config import Fixtures, ServiceConfig, build_engine, build_provider, load_fixtures
from ..engine import AWAITING_ACK, AWAITING_INPUT, COMPLETED, Engine, Session
from ..errors import (
    CrisprFlowError,
    EmptyPlan,
    GeneNotFound,
    InputRejected,
    InvalidChoice,
    SessionIncomplete,
    SessionNotFound,
    ToolFailure,
)
from ..offtarget import PAM_PRESETS, CAS9_NGG, PamRule, off_target_search
from ..primers import PrimerConstraints, design_primers
from ..providers import CompletionProvider
from ..safety import require_clean
from ..store import SessionStore
from . import schemas

_STATUS_BY_CODE = {
    "session_not_found": 404,
    "gene_not_found": 404,
    "session_completed": 409,
    "session_incomplete": 409,
    "provider_error": 502,
    "provider_timeout": 502,
    "provider_transport": 502,
    "script_miss": 502,
    "unparsable_response": 502,
    "tool_failure": 500,
    "corrupt_log": 500,
}


def _http_status(exc: CrisprFlowError) -> int:
    return _STATUS_BY_CODE.get(exc.code, 422)


def _error_body(exc: CrisprFlowError) -> dict:
    detail = None
    findings = getattr(exc, "findings", None)
    if findings:
        detail = {"findings": [f.as_dict() for f in findings]}
    return {"error": {"code": exc.code, "message": str(exc), "detail": detail}}


class ServiceState:
    """Everything one running service instance holds."""

    def __init__(
        self,
        config: ServiceConfig,
        fixtures: Fixtures | None = None,
        engine: Engine | None = None,
        provider: CompletionProvider | None = None,
        store: SessionStore | None = None,
    ):
        self.config = config
        self.fixtures = fixtures or load_fixtures(config.fixtures_dir)
        self.engine = engine or build_engine(self.fixtures)
        self.provider = provider or build_provider(config)
        self.store = store or SessionStore(config.store_dir)
        self.table = self.fixtures.registry.task_table()
        self.sessions: dict[str, Session] = {}

    # ------------------------------------------------------------------
    def get_session(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            if not self.store.exists(session_id):
                raise SessionNotFound(f"no session {session_id!r}")
            session = self.store.recover(session_id, self.engine)
            self.sessions[session_id] = session
            self.store.sync(session)
        return session

    def persist(self, session: Session, idempotency_key: str | None = None) -> None:
        self.sessions[session.session_id] = session
        self.store.sync(session, idempotency_key=idempotency_key)

    def make_plan(self, body: schemas.CreateSessionRequest) -> planner.Plan:
        if body.plan:
            return planner.validate_plan(body.plan, self.table)
        if body.mode == "meta":
            if not body.meta_task:
                raise EmptyPlan("meta mode needs meta_task (or an explicit plan)")
            return planner.meta_pipeline(body.meta_task)
        return planner.decompose(
            body.request, self.table, self.provider, self.config.provider
        )


def _prompt_model(engine: Engine, session: Session) -> schemas.PromptModel | None:
    if session.status not in (AWAITING_INPUT, AWAITING_ACK):
        return None
    return schemas.PromptModel(**engine.current_prompt(session).as_dict())


def _turn_model(turn) -> schemas.TurnModel:
    return schemas.TurnModel(
        index=turn.index,
        state_id=turn.state_id,
        responder=turn.responder,
        response=turn.response if isinstance(turn.response, str) else None,
        outcome_label=turn.outcome_label,
        error=turn.error,
        override=turn.override,
        reasoning=turn.reasoning,
        tool_summary=(turn.tool_output or {}).get("summary"),
    )


def create_app(
    config: ServiceConfig | None = None,
    fixtures: Fixtures | None = None,
    engine: Engine | None = None,
    provider: CompletionProvider | None = None,
    store: SessionStore | None = None,
) -> FastAPI:
    cfg = config or ServiceConfig.from_env()
    state = ServiceState(cfg, fixtures=fixtures, engine=engine, provider=provider, store=store)
    app = FastAPI(title="crisprflow", version=__version__)
    app.state.service = state

    @app.exception_handler(CrisprFlowError)
    async def _handle_domain_error(request: Request, exc: CrisprFlowError):
        return JSONResponse(status_code=_http_status(exc), content=_error_body(exc))

    # ------------------------------------------------------------------
    @app.get("/healthz", response_model=schemas.HealthResponse)
    def healthz():
        fx = state.fixtures
        return schemas.HealthResponse(
            status="ok",
            version=__version__,
            workflows=len(fx.registry),
            states=len(fx.registry.states),
            library_records=len(fx.library),
            reference_records=len(fx.references),
            corpus_chunks=len(fx.corpus_index),
            fixture_hashes=fx.hashes,
        )

    # ------------------------------------------------------------------
    @app.post("/sessions", response_model=schemas.CreateSessionResponse, status_code=201)
    def create_session(body: schemas.CreateSessionRequest):
        if body.idempotency_key:
            existing = state.store.find_by_idempotency(body.idempotency_key)
            if existing is not None:
                session = state.get_session(existing)
                return schemas.CreateSessionResponse(
                    session_id=session.session_id,
                    status=session.status,
                    plan=schemas.PlanModel(
                        tasks=list(session.task_queue), provenance="manual"
                    ),
                    prompt=_prompt_model(state.engine, session),
                    created=False,
                )
        # requests are stored and later embedded in prompts: refuse sequences
        require_clean(body.request, state.fixtures.safety.scan_threshold)
        plan = state.make_plan(body)
        session = state.engine.start_session(
            body.mode, plan.tasks, body.request, session_id=body.session_id
        )
        state.persist(session, idempotency_key=body.idempotency_key)
        return schemas.CreateSessionResponse(
            session_id=session.session_id,
            status=session.status,
            plan=schemas.PlanModel(**plan.as_dict()),
            prompt=_prompt_model(state.engine, session),
        )

    @app.get("/sessions/{session_id}", response_model=schemas.SessionView)
    def get_session(session_id: str):
        session = state.get_session(session_id)
        return schemas.SessionView(
            session_id=session.session_id,
            mode=session.mode,
            status=session.status,
            task_queue=list(session.task_queue),
            current_task_index=session.current_task_index,
            current_state_id=session.current_state_id,
            needs_review=session.needs_review,
            artifacts={k: v["value"] for k, v in session.artifacts.items()},
            history=[_turn_model(t) for t in session.history],
            prompt=_prompt_model(state.engine, session),
        )

    def _submit(session: Session, response: str, responder: str, override: bool):
        try:
            outcome = state.engine.submit(
                session, response, responder=responder, override=override
            )
        except (InputRejected, InvalidChoice, ToolFailure):
            state.persist(session)  # the error turn is part of history
            raise
        state.persist(session)
        return outcome

    @app.post("/sessions/{session_id}/turns", response_model=schemas.TurnResponse)
    def submit_turn(session_id: str, body: schemas.TurnRequest):
        session = state.get_session(session_id)
        route, payload = qa.route_message(session, body.response)
        if route == "qa":
            answer = qa.answer_question(
                payload, state.fixtures.corpus_index, state.provider, state.config.provider
            )
            return schemas.TurnResponse(
                outcome="qa",
                status=session.status,
                qa=answer.as_dict(),
                prompt=_prompt_model(state.engine, session),
            )
        outcome = _submit(session, payload, "user", False)
        return schemas.TurnResponse(
            outcome="completed" if outcome.status == COMPLETED
            else ("ack_required" if outcome.ack_required else "accepted"),
            status=outcome.status,
            turn=_turn_model(outcome.turn),
            prompt=schemas.PromptModel(**outcome.prompt.as_dict()) if outcome.prompt else None,
            report=outcome.report,
        )

    @app.post("/sessions/{session_id}/ack", response_model=schemas.TurnResponse)
    def acknowledge(session_id: str, body: schemas.AckRequest):
        session = state.get_session(session_id)
        outcome = _submit(session, body.text, "user", False)
        return schemas.TurnResponse(
            outcome="completed" if outcome.status == COMPLETED else "accepted",
            status=outcome.status,
            turn=_turn_model(outcome.turn),
            prompt=schemas.PromptModel(**outcome.prompt.as_dict()) if outcome.prompt else None,
            report=outcome.report,
        )

    @app.post("/sessions/{session_id}/override", response_model=schemas.TurnResponse)
    def override_turn(session_id: str, body: schemas.OverrideRequest):
        session = state.get_session(session_id)
        outcome = _submit(session, body.response, "user", True)
        return schemas.TurnResponse(
            outcome="completed" if outcome.status == COMPLETED
            else ("ack_required" if outcome.ack_required else "accepted"),
            status=outcome.status,
            turn=_turn_model(outcome.turn),
            prompt=schemas.PromptModel(**outcome.prompt.as_dict()) if outcome.prompt else None,
            report=outcome.report,
        )

    @app.post("/sessions/{session_id}/autopilot", response_model=schemas.AutopilotResponse)
    def autopilot_endpoint(session_id: str, body: schemas.AutopilotRequest):
        session = state.get_session(session_id)
        if body.mode == "propose":
            decision = autopilot.agent_step(
                state.engine, session, body.meta_prompt, state.provider, state.config.provider
            )
            return schemas.AutopilotResponse(
                decision=decision.as_dict(),
                status=session.status,
                prompt=_prompt_model(state.engine, session),
            )
        if body.mode == "apply":
            if not body.answer:
                raise InputRejected("apply mode needs the proposed answer")
            try:
                outcome = state.engine.submit(
                    session, body.answer, responder="autopilot", reasoning=body.thoughts
                )
            except (InputRejected, InvalidChoice, ToolFailure):
                state.persist(session)
                raise
            state.persist(session)
            return schemas.AutopilotResponse(
                status=outcome.status,
                prompt=schemas.PromptModel(**outcome.prompt.as_dict()) if outcome.prompt else None,
                report=outcome.report,
            )
        transcript = autopilot.run_autopilot(
            state.engine,
            session,
            body.meta_prompt,
            state.provider,
            step_limit=body.step_limit,
            config=state.config.provider,
        )
        state.persist(session)
        report = state.engine.export_report(session) if session.status == COMPLETED else None
        return schemas.AutopilotResponse(
            termination=transcript.termination,
            transcript=[e.as_dict() for e in transcript.entries],
            status=session.status,
            prompt=_prompt_model(state.engine, session),
            report=report,
        )

    @app.get("/sessions/{session_id}/report")
    def get_report(session_id: str):
        session = state.get_session(session_id)
        if session.status != COMPLETED:
            raise SessionIncomplete(f"session status is {session.status}")
        return JSONResponse(content=state.engine.export_report(session))

    # ------------------------------------------------------------------
    @app.post("/qa", response_model=schemas.QaResponse)
    def qa_endpoint(body: schemas.QaRequest):
        question = body.question
        route, payload = qa.route_message(None, question)
        if route == "qa":
            question = payload
        answer = qa.answer_question(
            question, state.fixtures.corpus_index, state.provider,
            state.config.provider, k=body.k,
        )
        return schemas.QaResponse(**answer.as_dict())

    @app.post("/tools/offtarget")
    def offtarget_tool(body: schemas.OffTargetToolRequest):
        if body.pam_pattern:
            rule = PamRule(body.pam_pattern, body.pam_side or "three_prime")
        elif body.cas_system:
            rule = PAM_PRESETS.get(body.cas_system, CAS9_NGG)
        else:
            rule = CAS9_NGG
        references = body.references or state.fixtures.references
        try:
            report = off_target_search(body.spacer, references, body.max_mismatches, rule)
        except ValueError as exc:
            raise InputRejected(str(exc)) from exc
        return JSONResponse(content=report.as_dict())

    @app.post("/tools/primers")
    def primers_tool(body: schemas.PrimerToolRequest):
        if body.region:
            reference = "".join(body.region.split()).upper()
            mid = len(reference) // 2
            span = (max(0, mid - 20), min(len(reference), mid + 20))
        elif body.record_id:
            if body.record_id not in state.fixtures.references:
                raise GeneNotFound("fixture", body.record_id, "reference")
            reference = state.fixtures.references[body.record_id]
            mid = len(reference) // 2
            span = tuple(body.span) if body.span else (mid - 20, mid + 20)
        else:
            raise InputRejected("provide record_id or region")
        pairs = design_primers(reference, span, PrimerConstraints())
        return JSONResponse(
            content={"method": body.method, "pairs": [p.as_dict() for p in pairs]}
        )

    if cfg.console_dir and Path(cfg.console_dir).is_dir():
        app.mount("/console", StaticFiles(directory=str(cfg.console_dir), html=True), name="console")

    return app
