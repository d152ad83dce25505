"""Task executor: chained state machines with recorded interaction turns.

Each state performs one round of interaction. Sessions hold an append-only
turn history and an artifact store; task machines from the plan are chained
into one session-level machine (END of one machine advances to the next).
Submissions are serialized per session; invalid input never advances the
state but always appends an error turn, so history length strictly
increases on every submit.

Free-text answers at states not tagged ``requests_sequence`` are rejected
if they contain long nucleotide runs, and the rejected text is recorded
redacted; this keeps both the session store and everything later assembled
into provider prompts clean by construction.
"""

from __future__ import annotations

import re
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Callable

from . import safety
from .errors import (
    CorruptLog,
    EmptyPlan,
    InputRejected,
    InvalidChoice,
    MissingPlaceholder,
    SessionCompleted,
    SessionIncomplete,
    ToolFailure,
    UnknownTask,
)
from .sequences import normalize_dna
from .tools import ToolProvider, ToolResult
from .workflows import END, ChoiceOption, StateDef, WorkflowRegistry

AWAITING_INPUT = "awaiting_input"
AWAITING_ACK = "awaiting_ack"
RUNNING_TOOL = "running_tool"
COMPLETED = "completed"
FAILED = "failed"

MODES = ("meta", "auto", "qa")

SPECIES_VOCAB: dict[str, tuple[str, ...]] = {
    "human": ("human", "humans", "homo sapiens"),
    "mouse": ("mouse", "mice", "mus musculus", "murine"),
    "rat": ("rat", "rats", "rattus norvegicus"),
    "zebrafish": ("zebrafish", "danio rerio"),
}

_GENERIC_HUMAN_TERMS = frozenset(
    {"human", "humans", "homo sapiens", "patient", "patient-derived"}
)

_ACK_RESPONSES = frozenset(
    {
        "yes",
        "y",
        "ok",
        "okay",
        "i acknowledge",
        "acknowledge",
        "acknowledged",
        "i agree",
        "agree",
        "agreed",
        "i understand",
        "understood",
        "i confirm",
        "confirm",
        "confirmed",
        "i understand the risk",
        "i understand the risks",
        "i acknowledge the risk",
        "i acknowledge the risks",
    }
)


def is_affirmative(text: str) -> bool:
    normalized = re.sub(r"[.!\s]+", " ", str(text)).strip().casefold()
    return normalized in _ACK_RESPONSES


def match_option(response, options: tuple[ChoiceOption, ...]) -> ChoiceOption | None:
    """Case-insensitive exact label match, or a 1-based index."""
    text = str(response).strip()
    if text.isdigit():
        idx = int(text)
        if 1 <= idx <= len(options):
            return options[idx - 1]
        return None
    normalized = text.casefold().rstrip(".")
    for option in options:
        if option.label.casefold() == normalized:
            return option
    return None


@dataclass
class InteractionTurn:
    index: int
    state_id: str
    rendered_instruction: str
    responder: str  # user | autopilot | system
    response: str | None
    tool_output: dict | None
    outcome_label: str | None  # None for turns that did not transition
    at: float
    writes: dict = field(default_factory=dict)
    error: str | None = None
    reasoning: str | None = None
    override: bool = False

    def as_dict(self) -> dict:
        return {
            "index": self.index,
            "state_id": self.state_id,
            "rendered_instruction": self.rendered_instruction,
            "responder": self.responder,
            "response": self.response,
            "tool_output": self.tool_output,
            "outcome_label": self.outcome_label,
            "at": self.at,
            "writes": self.writes,
            "error": self.error,
            "reasoning": self.reasoning,
            "override": self.override,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "InteractionTurn":
        return cls(**data)


@dataclass
class Session:
    session_id: str
    mode: str
    task_queue: list[str]
    request: str
    artifacts: dict[str, dict] = field(default_factory=dict)
    history: list[InteractionTurn] = field(default_factory=list)
    status: str = AWAITING_INPUT
    current_task_index: int = 0
    current_state_id: str | None = None
    needs_review: bool = False

    def artifact_value(self, key: str, default=None):
        entry = self.artifacts.get(key)
        return default if entry is None else entry["value"]

    def current_task(self) -> str | None:
        if 0 <= self.current_task_index < len(self.task_queue):
            return self.task_queue[self.current_task_index]
        return None

    def header_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "mode": self.mode,
            "task_queue": list(self.task_queue),
            "request": self.request,
        }


@dataclass
class RenderedPrompt:
    task_name: str
    state_id: str
    instruction: str
    input: dict
    warnings: list[dict] = field(default_factory=list)
    status: str = AWAITING_INPUT

    def as_dict(self) -> dict:
        return {
            "task_name": self.task_name,
            "state_id": self.state_id,
            "instruction": self.instruction,
            "input": self.input,
            "warnings": list(self.warnings),
            "status": self.status,
        }


@dataclass
class TurnOutcome:
    accepted: bool
    turn: InteractionTurn
    status: str
    prompt: RenderedPrompt | None = None
    report: dict | None = None
    ack_required: bool = False


# ---------------------------------------------------------------------------
# input validators

_GENE_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]{0,24}$")


def _validate_species_text(text: str, params: dict) -> str:
    if len(text) > 120:
        raise InputRejected("organism answer too long; name the organism or cell line")
    return text


def _validate_gene_symbol(text: str, params: dict) -> str:
    token = text.strip()
    if not _GENE_RE.match(token):
        raise InputRejected(f"{token!r} does not look like a gene symbol")
    return token.upper()


def _validate_dna_sequence(text: str, params: dict) -> str:
    seq = normalize_dna(text, "pasted region")
    min_len = int(params.get("min_len", 1))
    max_len = int(params.get("max_len", 100_000))
    if not (min_len <= len(seq) <= max_len):
        raise InputRejected(
            f"region length {len(seq)} outside [{min_len}, {max_len}] nt"
        )
    return seq


VALIDATORS: dict[str, Callable[[str, dict], str]] = {
    "species_text": _validate_species_text,
    "gene_symbol": _validate_gene_symbol,
    "dna_sequence": _validate_dna_sequence,
}


def autofill_artifacts(
    request: str,
    gene_vocabulary: set[str],
    safety_config: safety.SafetyConfig,
) -> dict[str, str]:
    """Conservative keyword extraction over a controlled vocabulary.

    Only species names (plus human cell-line synonyms) and gene symbols
    present in the loaded library are recognized; anything else is left for
    the states to ask about.
    """
    found: dict[str, str] = {}
    lowered = request.lower()

    def word_match(term: str) -> bool:
        return re.search(rf"(?<![a-z0-9]){re.escape(term)}(?![a-z0-9])", lowered) is not None

    for species, terms in SPECIES_VOCAB.items():
        if any(word_match(t) for t in terms):
            found["species"] = species
            break
    for term in safety_config.human_terms:
        low = term.lower()
        if low in _GENERIC_HUMAN_TERMS:
            continue
        if word_match(low):
            found.setdefault("species", "human")
            found["cell_line"] = term
            break
    for token in re.findall(r"[A-Za-z0-9_-]+", request):
        if token.upper() in gene_vocabulary:
            found["gene"] = token.upper()
            break
    return found


class Engine:
    """Executes sessions against a workflow registry and a tool provider."""

    def __init__(
        self,
        registry: WorkflowRegistry,
        tools: ToolProvider,
        safety_config: safety.SafetyConfig | None = None,
        clock: Callable[[], float] | None = None,
    ):
        self.registry = registry
        self.tools = tools
        self.safety_config = safety_config or safety.SafetyConfig()
        self.clock = clock or time.time
        self._gene_vocabulary = {g.upper() for g in tools.library.genes()}
        self._locks: dict[str, threading.RLock] = {}
        self._locks_guard = threading.Lock()

    def lock_for(self, session_id: str) -> threading.RLock:
        with self._locks_guard:
            lock = self._locks.get(session_id)
            if lock is None:
                lock = threading.RLock()
                self._locks[session_id] = lock
            return lock

    # ------------------------------------------------------------------
    # session lifecycle

    def start_session(
        self,
        mode: str,
        plan: list[str],
        request: str,
        session_id: str | None = None,
    ) -> Session:
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not plan:
            raise EmptyPlan("plan must contain at least one task")
        for task in plan:
            if task not in self.registry:
                raise UnknownTask(f"task {task!r} is not in the workflow registry")
        session = Session(
            session_id=session_id or uuid.uuid4().hex,
            mode=mode,
            task_queue=list(plan),
            request=request,
        )
        for key, value in autofill_artifacts(
            request, self._gene_vocabulary, self.safety_config
        ).items():
            session.artifacts[key] = {"value": value, "provenance": "autofill"}
        session.current_state_id = self.registry.workflows[plan[0]].start
        session.status = AWAITING_INPUT
        with self.lock_for(session.session_id):
            self._settle(session)
        return session

    # ------------------------------------------------------------------
    # rendering

    def _render_instruction(self, session: Session, state: StateDef) -> str:
        def lookup(name: str) -> str:
            entry = session.artifacts.get(name)
            if entry is not None:
                return str(entry["value"])
            if name == "request":
                return session.request
            if name == "mode":
                return session.mode
            raise MissingPlaceholder(
                f"placeholder {{{name}}} in state {state.state_id!r} is unresolved"
            )

        def replace(match: re.Match) -> str:
            return lookup(match.group(1))

        return re.sub(r"\{([A-Za-z_][A-Za-z0-9_]*)\}", replace, state.instruction)

    def _gate_pending(self, session: Session, state: StateDef) -> safety.GateDecision | None:
        if "organism_checkpoint" not in state.safety_tags:
            return None
        if session.artifact_value("human_editing_ack") is not None:
            return None
        species = session.artifact_value(state.answer_artifact or "species")
        if species is None:
            return None
        decision = safety.organism_gate(str(species), self.safety_config)
        return decision if decision.require_ack else None

    def current_prompt(self, session: Session) -> RenderedPrompt:
        if session.status not in (AWAITING_INPUT, AWAITING_ACK):
            raise SessionCompleted(f"session status is {session.status}")
        state = self.registry.state(session.current_state_id)
        instruction = self._render_instruction(session, state)
        warnings: list[dict] = []
        if session.status == AWAITING_ACK:
            schema: dict = {"kind": "acknowledgment"}
            gate = self._gate_pending(session, state)
            if gate is not None:
                warnings.append(
                    {
                        "kind": "human_organism_gate",
                        "text": gate.warning_text,
                        "reference": gate.moratorium_reference,
                        "matched_term": gate.matched_term,
                    }
                )
        elif state.input_kind == "choice":
            schema = {"kind": "choice", "options": [o.label for o in state.options]}
        else:
            schema = {"kind": "free_text"}
            if state.answer_artifact:
                schema["artifact"] = state.answer_artifact
            if "requests_sequence" in state.safety_tags:
                schema["requests_sequence"] = True
        return RenderedPrompt(
            task_name=self.registry.task_of_state(state.state_id),
            state_id=state.state_id,
            instruction=instruction,
            input=schema,
            warnings=warnings,
            status=session.status,
        )

    # ------------------------------------------------------------------
    # submission

    def submit(
        self,
        session: Session,
        response,
        responder: str = "user",
        override: bool = False,
        reasoning: str | None = None,
    ) -> TurnOutcome:
        with self.lock_for(session.session_id):
            if session.status == COMPLETED:
                raise SessionCompleted("session already completed")
            if session.status == FAILED:
                raise SessionCompleted("session is in a failed state")
            if session.status not in (AWAITING_INPUT, AWAITING_ACK):
                raise SessionCompleted(f"session not accepting input ({session.status})")
            state = self.registry.state(session.current_state_id)
            if session.status == AWAITING_ACK:
                return self._submit_ack(session, state, response, responder, override, reasoning)
            return self._apply_submission(session, state, response, responder, override, reasoning)

    def _outcome(self, session: Session, turn: InteractionTurn, accepted: bool, ack: bool = False) -> TurnOutcome:
        prompt = None
        report = None
        if session.status in (AWAITING_INPUT, AWAITING_ACK):
            prompt = self.current_prompt(session)
        elif session.status == COMPLETED:
            report = self.export_report(session)
        return TurnOutcome(
            accepted=accepted,
            turn=turn,
            status=session.status,
            prompt=prompt,
            report=report,
            ack_required=ack,
        )

    def _append_turn(
        self,
        session: Session,
        state: StateDef,
        rendered: str,
        responder: str,
        response: str | None,
        tool_output: dict | None,
        outcome: str | None,
        writes: dict | None = None,
        error: str | None = None,
        reasoning: str | None = None,
        override: bool = False,
    ) -> InteractionTurn:
        turn = InteractionTurn(
            index=len(session.history),
            state_id=state.state_id,
            rendered_instruction=rendered,
            responder=responder,
            response=response,
            tool_output=tool_output,
            outcome_label=outcome,
            at=self.clock(),
            writes=dict(writes or {}),
            error=error,
            reasoning=reasoning,
            override=override,
        )
        session.history.append(turn)
        return turn

    def _write_artifact(
        self, session: Session, key: str, value, provenance: str, override: bool
    ) -> bool:
        """Write one artifact; returns True when an earlier value was replaced."""
        existing = session.artifacts.get(key)
        if existing is not None and existing["value"] != value:
            if existing["provenance"] in ("user", "autopilot") and not override:
                raise InputRejected(
                    f"{key} is already set to {existing['value']!r}; submit an explicit "
                    "override to change a recorded decision"
                )
            session.artifacts[key] = {"value": value, "provenance": provenance}
            return True
        if existing is None:
            session.artifacts[key] = {"value": value, "provenance": provenance}
        return False

    def _run_tool(self, session: Session, state: StateDef) -> ToolResult:
        binding = state.tool_binding
        assert binding is not None
        args = {}
        for param, spec in binding.args.items():
            if "const" in spec:
                args[param] = spec["const"]
                continue
            key = spec["artifact"]
            entry = session.artifacts.get(key)
            if entry is None:
                if spec.get("optional"):
                    args[param] = None
                    continue
                raise ToolFailure(
                    f"tool {binding.tool!r} needs artifact {key!r} which is not set"
                )
            args[param] = entry["value"]
        previous = session.status
        session.status = RUNNING_TOOL
        try:
            return self.tools.call(binding.tool, args)
        finally:
            session.status = previous

    def _apply_submission(
        self,
        session: Session,
        state: StateDef,
        response,
        responder: str,
        override: bool,
        reasoning: str | None,
    ) -> TurnOutcome:
        rendered = self._render_instruction(session, state)

        if state.input_kind == "choice":
            option = match_option(response, state.options)
            if option is None:
                labels = [o.label for o in state.options]
                message = f"{response!r} is not among the options {labels}"
                self._append_turn(
                    session, state, rendered, responder,
                    safety.redact(str(response), self.safety_config.scan_threshold),
                    None, None, error=message, reasoning=reasoning,
                )
                raise InvalidChoice(message)
            return self._accept(
                session, state, rendered, responder, str(response), option.value,
                option.label, override, reasoning,
            )

        if state.input_kind == "free_text":
            text = "" if response is None else str(response).strip()
            if not text:
                message = "an answer is required"
                self._append_turn(
                    session, state, rendered, responder, text, None, None,
                    error=message, reasoning=reasoning,
                )
                raise InputRejected(message)
            if "requests_sequence" not in state.safety_tags:
                findings = safety.scan_nucleotide_runs(text, self.safety_config.scan_threshold)
                if findings:
                    message = (
                        "this step does not accept nucleotide sequences; "
                        "please delete the sequence content "
                        f"({len(findings)} run(s) of >= {self.safety_config.scan_threshold} nt)"
                    )
                    self._append_turn(
                        session, state, rendered, responder,
                        safety.redact(text, self.safety_config.scan_threshold),
                        None, None, error=message, reasoning=reasoning,
                    )
                    raise InputRejected(message, findings)
            if state.validator:
                try:
                    text = VALIDATORS[state.validator](text, state.validator_params)
                except InputRejected as exc:
                    self._append_turn(
                        session, state, rendered, responder,
                        safety.redact(str(response).strip(), self.safety_config.scan_threshold),
                        None, None, error=str(exc), reasoning=reasoning,
                    )
                    raise
            value = text
            if "organism_checkpoint" in state.safety_tags:
                return self._accept_organism(
                    session, state, rendered, responder, text, value, override, reasoning
                )
            return self._accept(
                session, state, rendered, responder, text, value, "submitted",
                override, reasoning,
            )

        if state.input_kind == "acknowledgment":
            # reached only via auto paths; acknowledgments normally arrive
            # through AWAITING_ACK handling
            return self._submit_ack(session, state, response, responder, override, reasoning)

        # input_kind == "none": auto-executing state
        return self._accept(
            session, state, rendered, responder, None, None, "done", override, reasoning
        )

    def _accept(
        self,
        session: Session,
        state: StateDef,
        rendered: str,
        responder: str,
        response: str | None,
        answer_value,
        default_outcome: str,
        override: bool,
        reasoning: str | None,
    ) -> TurnOutcome:
        writes: dict = {}
        replaced = False
        saved_answer = None
        if state.answer_artifact is not None and answer_value is not None:
            saved_answer = session.artifacts.get(state.answer_artifact)
            replaced = self._write_artifact(
                session, state.answer_artifact, answer_value, responder, override
            )
            writes[state.answer_artifact] = answer_value

        tool_record = None
        outcome = default_outcome
        if state.tool_binding is not None:
            try:
                result = self._run_tool(session, state)
            except ToolFailure as exc:
                # roll back the answer write so the user can retry freely
                if state.answer_artifact is not None and answer_value is not None:
                    if saved_answer is None:
                        session.artifacts.pop(state.answer_artifact, None)
                    else:
                        session.artifacts[state.answer_artifact] = saved_answer
                self._append_turn(
                    session, state, rendered, responder, response, None, None,
                    error=str(exc), reasoning=reasoning,
                )
                raise
            tool_record = result.record()
            outcome = result.outcome
            for out_name, artifact_key in state.tool_binding.writes.items():
                if out_name in result.outputs and result.outputs[out_name] is not None:
                    self._write_artifact(
                        session, artifact_key, result.outputs[out_name], "tool", True
                    )
                    writes[artifact_key] = result.outputs[out_name]

        turn = self._append_turn(
            session, state, rendered, responder, response, tool_record, outcome,
            writes=writes, reasoning=reasoning, override=override or replaced,
        )
        self._transition(session, state, outcome)
        return self._outcome(session, turn, accepted=True)

    def _accept_organism(
        self,
        session: Session,
        state: StateDef,
        rendered: str,
        responder: str,
        response: str,
        value: str,
        override: bool,
        reasoning: str | None,
    ) -> TurnOutcome:
        key = state.answer_artifact or "species"
        replaced = self._write_artifact(session, key, value, responder, override)
        decision = safety.organism_gate(value, self.safety_config)
        if decision.require_ack and session.artifact_value("human_editing_ack") is None:
            turn = self._append_turn(
                session, state, rendered, responder, response, None, None,
                writes={key: value}, reasoning=reasoning, override=override or replaced,
            )
            session.status = AWAITING_ACK
            return self._outcome(session, turn, accepted=True, ack=True)
        turn = self._append_turn(
            session, state, rendered, responder, response, None, "submitted",
            writes={key: value}, reasoning=reasoning, override=override or replaced,
        )
        self._transition(session, state, "submitted")
        return self._outcome(session, turn, accepted=True)

    def _submit_ack(
        self,
        session: Session,
        state: StateDef,
        response,
        responder: str,
        override: bool,
        reasoning: str | None,
    ) -> TurnOutcome:
        rendered = self._render_instruction(session, state)
        text = "" if response is None else str(response).strip()
        gate = self._gate_pending(session, state)

        if is_affirmative(text):
            writes: dict = {}
            if gate is not None:
                record = safety.GateRecord(
                    organism_answer=str(session.artifact_value(state.answer_artifact or "species")),
                    triggered=True,
                    acknowledgment_text=text,
                    moratorium_reference=gate.moratorium_reference,
                    timestamp=None,
                ).as_dict()
                self._write_artifact(session, "human_editing_ack", record, responder, True)
                writes["human_editing_ack"] = record
            if state.input_kind == "acknowledgment" and state.answer_artifact:
                self._write_artifact(session, state.answer_artifact, text, responder, override)
                writes[state.answer_artifact] = text
            turn = self._append_turn(
                session, state, rendered, responder, text, None, "acknowledged",
                writes=writes, reasoning=reasoning, override=override,
            )
            self._transition(session, state, "acknowledged")
            return self._outcome(session, turn, accepted=True)

        if gate is not None and self._species_like(text):
            # the user corrected the organism instead of acknowledging
            key = state.answer_artifact or "species"
            self._write_artifact(session, key, text, responder, True)
            new_gate = safety.organism_gate(text, self.safety_config)
            if not new_gate.require_ack:
                turn = self._append_turn(
                    session, state, rendered, responder, text, None, "submitted",
                    writes={key: text}, reasoning=reasoning, override=True,
                )
                self._transition(session, state, "submitted")
                return self._outcome(session, turn, accepted=True)
            turn = self._append_turn(
                session, state, rendered, responder, text, None, None,
                writes={key: text}, reasoning=reasoning, override=True,
            )
            session.status = AWAITING_ACK
            return self._outcome(session, turn, accepted=True, ack=True)

        message = (
            "an explicit acknowledgment is required before proceeding "
            '(reply "I acknowledge")'
        )
        self._append_turn(
            session, state, rendered, responder,
            safety.redact(text, self.safety_config.scan_threshold), None, None,
            error=message, reasoning=reasoning,
        )
        raise InputRejected(message)

    def _species_like(self, text: str) -> bool:
        lowered = text.lower()
        for terms in SPECIES_VOCAB.values():
            for term in terms:
                if re.search(rf"(?<![a-z0-9]){re.escape(term)}(?![a-z0-9])", lowered):
                    return True
        return safety.organism_gate(text, self.safety_config).require_ack

    # ------------------------------------------------------------------
    # transitions and auto-settling

    def _transition(self, session: Session, state: StateDef, outcome: str) -> None:
        target = state.transitions[outcome]
        if target == END:
            session.current_task_index += 1
            if session.current_task_index >= len(session.task_queue):
                session.status = COMPLETED
                session.current_state_id = None
                return
            next_task = session.task_queue[session.current_task_index]
            session.current_state_id = self.registry.workflows[next_task].start
        else:
            session.current_state_id = target
        session.status = AWAITING_INPUT
        self._settle(session)

    def _settle(self, session: Session) -> None:
        """Auto-resolve states that need no fresh user input.

        Pure display/tool states run immediately; free-text states whose
        answer artifact is already filled are auto-submitted as system turns
        (except a pending human-organism gate, which must stop and await the
        acknowledgment). A state is auto-submitted at most once per settle
        pass to keep failure loops bounded.
        """
        visited: set[str] = set()
        while session.status == AWAITING_INPUT:
            state = self.registry.state(session.current_state_id)
            if state.state_id in visited:
                break
            if state.input_kind == "none":
                visited.add(state.state_id)
                try:
                    self._apply_submission(session, state, None, "system", False, None)
                except ToolFailure:
                    session.status = FAILED
                    return
                continue
            if state.input_kind == "free_text" and state.answer_artifact:
                value = session.artifact_value(state.answer_artifact)
                if value is not None:
                    if self._gate_pending(session, state) is not None:
                        session.status = AWAITING_ACK
                        return
                    visited.add(state.state_id)
                    try:
                        self._apply_submission(session, state, str(value), "system", False, None)
                    except (InputRejected, InvalidChoice, ToolFailure):
                        session.status = AWAITING_INPUT
                        return
                    continue
            if state.input_kind == "acknowledgment":
                session.status = AWAITING_ACK
            return

    # ------------------------------------------------------------------
    # report

    REPORT_SECTIONS = (
        ("designed_guides", "guides"),
        ("off_target", "offtarget_report"),
        ("primers", "primers"),
        ("protocol", "protocol_reference"),
    )

    def export_report(self, session: Session) -> dict:
        """Deterministic summary of a completed session (no ids, no clocks)."""
        if session.status != COMPLETED:
            raise SessionIncomplete(f"session status is {session.status}")
        visited: list[str] = []
        for turn in session.history:
            if turn.state_id not in visited:
                visited.append(turn.state_id)
        declared: list[str] = []
        for state_id in visited:
            for key in self.registry.state(state_id).artifact_writes:
                if key not in declared:
                    declared.append(key)

        decisions = []
        for turn in session.history:
            if turn.outcome_label is None or not turn.writes:
                continue
            state = self.registry.state(turn.state_id)
            if state.answer_artifact and state.answer_artifact in turn.writes:
                decisions.append(
                    {
                        "artifact": state.answer_artifact,
                        "value": turn.writes[state.answer_artifact],
                        "state_id": turn.state_id,
                        "responder": turn.responder,
                        "override": turn.override,
                    }
                )

        artifacts = {key: session.artifact_value(key) for key in declared}
        for key, entry in session.artifacts.items():
            if key not in artifacts:
                artifacts[key] = entry["value"]

        sections = {}
        for section, key in self.REPORT_SECTIONS:
            sections[section] = session.artifact_value(key)

        acknowledgments = []
        ack = session.artifact_value("human_editing_ack")
        if ack is not None:
            acknowledgments.append(ack)

        return {
            "mode": session.mode,
            "request": session.request,
            "plan": list(session.task_queue),
            "decisions": decisions,
            **sections,
            "acknowledgments": acknowledgments,
            "artifacts": artifacts,
            "turns": [
                {
                    "index": t.index,
                    "state_id": t.state_id,
                    "responder": t.responder,
                    "response": t.response,
                    "outcome": t.outcome_label,
                    "error": t.error,
                    "override": t.override,
                    "tool_summary": (t.tool_output or {}).get("summary"),
                }
                for t in session.history
            ],
        }

    # ------------------------------------------------------------------
    # replay

    def replay(
        self,
        header: dict,
        turns: list[dict],
        strict: bool = True,
    ) -> Session:
        """Rebuild a session by re-executing its recorded turns.

        System turns must regenerate identically (same states, outcomes and
        writes); accepted user/autopilot turns are resubmitted with their
        recorded timestamps. Rejected turns are appended verbatim: their
        stored response is already redacted, so re-submitting it would not
        reproduce the rejection. Divergence raises :class:`CorruptLog`
        naming the offending line.
        """
        consumed = {"n": 0}

        def replay_clock() -> float:
            i = consumed["n"]
            consumed["n"] += 1
            return turns[i]["at"] if i < len(turns) else time.time()

        shadow = Engine(self.registry, self.tools, self.safety_config, clock=replay_clock)
        session = shadow.start_session(
            mode=header["mode"],
            plan=list(header["task_queue"]),
            request=header["request"],
            session_id=header["session_id"],
        )

        def check(position: int) -> None:
            if position >= len(turns):
                return  # deterministic continuation the log never captured
            got = session.history[position].as_dict()
            expected = dict(turns[position])
            if got != expected:
                raise CorruptLog(
                    f"replayed turn {position} diverges from the log", line_no=position
                )

        pos = 0
        while pos < len(session.history):
            if strict:
                check(pos)
            pos += 1
        while pos < len(turns):
            record = turns[pos]
            if record["responder"] == "system":
                raise CorruptLog(
                    f"log has a system turn at {pos} the engine did not generate",
                    line_no=pos,
                )
            if record.get("error") is not None:
                # rejected input never advanced state; restore it as recorded
                session.history.append(InteractionTurn.from_dict(record))
                consumed["n"] += 1
                pos += 1
                continue
            try:
                shadow.submit(
                    session,
                    record["response"],
                    responder=record["responder"],
                    override=bool(record.get("override")),
                    reasoning=record.get("reasoning"),
                )
            except (InputRejected, InvalidChoice, ToolFailure):
                pass  # divergence: the appended error turn will fail check()
            if len(session.history) == pos:
                raise CorruptLog(f"turn {pos} did not replay", line_no=pos)
            while pos < len(session.history):
                if strict:
                    check(pos)
                pos += 1
        return session
