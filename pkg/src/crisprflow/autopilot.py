"""LLM agent that answers executor prompts on behalf of the user.

The agent sees the current instruction, the history of the current task and
summaries of recent tool results, assembled into a system message that is
clean by construction (tool summaries carry no sequences; turns recorded at
sequence-input states are withheld). Three hard rules: sequence requests
hand off to manual control without any provider call, an "I don't know"
answer hands off, and a choice answer must match an option label exactly
(one corrective reprompt, then handoff). Every applied decision goes
through the normal engine validation; a caller-supplied override hook can
replace any decision with a user answer before it is submitted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable

from . import safety
from .engine import (
    AWAITING_ACK,
    COMPLETED,
    FAILED,
    Engine,
    Session,
    is_affirmative,
    match_option,
)
from .errors import (
    FilterBlocked,
    InputRejected,
    InvalidChoice,
    ScriptMiss,
    SessionCompleted,
    ToolFailure,
)
from .prompts import build_autopilot_prompt
from .providers import CompletionProvider, ProviderConfig, complete_structured

HANDOFF_REQUESTS_SEQUENCE = "requests_sequence"
HANDOFF_DONT_KNOW = "dont_know"
HANDOFF_INVALID = "invalid_after_retry"

TERMINATION_COMPLETED = "completed"
TERMINATION_HANDOFF = "handoff"
TERMINATION_STEP_LIMIT = "step_limit"

AGENT_SCHEMA = frozenset({"Thoughts", "Answer"})

_DONT_KNOW = re.compile(r"\bi don'?t know\b|\bi do not know\b", re.IGNORECASE)


@dataclass(frozen=True)
class AgentDecision:
    kind: str  # "answer" | "handoff"
    answer: str | None = None
    handoff_reason: str | None = None
    thoughts: str = ""

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "answer": self.answer,
            "handoff_reason": self.handoff_reason,
            "thoughts": self.thoughts,
        }


@dataclass
class TranscriptEntry:
    state_id: str
    decision: AgentDecision
    applied: bool = False
    overridden_response: str | None = None
    turn_index: int | None = None

    def as_dict(self) -> dict:
        return {
            "state_id": self.state_id,
            "decision": self.decision.as_dict(),
            "applied": self.applied,
            "overridden_response": self.overridden_response,
            "turn_index": self.turn_index,
        }


@dataclass
class AutopilotTranscript:
    entries: list[TranscriptEntry] = field(default_factory=list)
    termination: str = TERMINATION_STEP_LIMIT

    def as_dict(self) -> dict:
        return {
            "entries": [e.as_dict() for e in self.entries],
            "termination": self.termination,
        }


def build_system_message(engine: Engine, session: Session) -> str:
    """Assemble the current-inquiry text handed to the agent.

    Includes only provider-safe material: rendered instruction, option list
    or acknowledgment requirement, the session request, current-task history
    (sequence inputs withheld) and tool summaries.
    """
    prompt = engine.current_prompt(session)
    task_name = prompt.task_name
    position = session.current_task_index + 1
    lines = [
        f"Task: {task_name} ({position} of {len(session.task_queue)} in the session plan)",
        f"State: {prompt.state_id}",
        "",
        "Instruction:",
        prompt.instruction,
    ]
    if prompt.input.get("kind") == "choice":
        lines.append("")
        lines.append("Options:")
        for i, label in enumerate(prompt.input["options"], start=1):
            lines.append(f"{i}. {label}")
        lines.append("Reply with exactly one option label.")
    if prompt.status == AWAITING_ACK:
        lines.append("")
        lines.append("A safety acknowledgment is required before proceeding.")
        for warning in prompt.warnings:
            lines.append(warning.get("text", ""))
            if warning.get("reference"):
                lines.append(f"Reference: {warning['reference']}")
        lines.append('Reply exactly: I acknowledge')
    lines += ["", f"User request: {session.request}"]

    current_task = session.current_task()
    task_turns = []
    for turn in reversed(session.history):
        if engine.registry.task_of_state(turn.state_id) != current_task:
            break
        task_turns.append(turn)
    task_turns.reverse()
    lines += ["", "Recent interactions in this task:"]
    if not task_turns:
        lines.append("- none yet")
    for turn in task_turns:
        state = engine.registry.state(turn.state_id)
        if turn.error is not None:
            lines.append(f"- {turn.state_id}: rejected ({turn.error})")
        elif "requests_sequence" in state.safety_tags:
            lines.append(f"- {turn.state_id}: sequence provided (content withheld)")
        else:
            lines.append(
                f"- {turn.state_id}: {turn.responder} answered {turn.response!r}"
                + (f" -> {turn.outcome_label}" if turn.outcome_label else "")
            )

    summaries = [
        t.tool_output["summary"]
        for t in session.history
        if t.tool_output and t.tool_output.get("summary")
    ][-5:]
    lines += ["", "Latest tool results:"]
    if not summaries:
        lines.append("- none")
    for summary in summaries:
        lines.append(f"- {summary}")
    return "\n".join(lines)


def _ask(
    meta_prompt: str,
    system_message: str,
    provider: CompletionProvider,
    config: ProviderConfig | None,
) -> tuple[str, str]:
    bundle = build_autopilot_prompt(meta_prompt, system_message)
    fields = complete_structured(bundle, AGENT_SCHEMA, provider, config)
    answer = fields["Answer"]
    if isinstance(answer, list):
        answer = answer[0] if answer else ""
    return str(answer).strip(), str(fields.get("Thoughts", ""))


def agent_step(
    engine: Engine,
    session: Session,
    meta_prompt: str,
    provider: CompletionProvider,
    config: ProviderConfig | None = None,
) -> AgentDecision:
    """Produce one decision for the session's current prompt."""
    if session.status not in ("awaiting_input", "awaiting_ack"):
        raise SessionCompleted(f"session not awaiting input ({session.status})")
    state = engine.registry.state(session.current_state_id)
    if "requests_sequence" in state.safety_tags:
        # rule: never let the model supply or handle sequence content
        return AgentDecision(
            kind="handoff",
            handoff_reason=HANDOFF_REQUESTS_SEQUENCE,
            thoughts="The tool asks for a gene sequence; manual control is required.",
        )

    system_message = build_system_message(engine, session)
    answer, thoughts = _ask(meta_prompt, system_message, provider, config)
    if _DONT_KNOW.search(answer):
        return AgentDecision(kind="handoff", handoff_reason=HANDOFF_DONT_KNOW, thoughts=thoughts)

    needs_ack = session.status == AWAITING_ACK
    is_choice = state.input_kind == "choice" and not needs_ack

    def valid(text: str) -> str | None:
        if needs_ack:
            return text if is_affirmative(text) else None
        if is_choice:
            option = match_option(text, state.options)
            return option.label if option else None
        return text if text else None

    accepted = valid(answer)
    if accepted is not None:
        return AgentDecision(kind="answer", answer=accepted, thoughts=thoughts)

    # one corrective reprompt naming the invalid answer and what is expected
    if needs_ack:
        expectation = 'an explicit acknowledgment ("I acknowledge")'
    else:
        expectation = "exactly one of the listed option labels"
    corrective = (
        system_message
        + f"\n\nYour previous answer {safety.redact(answer)!r} was not valid. "
        + f"Reply with {expectation}."
    )
    try:
        answer2, thoughts2 = _ask(meta_prompt, corrective, provider, config)
    except FilterBlocked:
        return AgentDecision(
            kind="handoff",
            handoff_reason=HANDOFF_INVALID,
            thoughts="corrective reprompt was blocked by the outbound filter",
        )
    if _DONT_KNOW.search(answer2):
        return AgentDecision(kind="handoff", handoff_reason=HANDOFF_DONT_KNOW, thoughts=thoughts2)
    accepted = valid(answer2)
    if accepted is not None:
        return AgentDecision(kind="answer", answer=accepted, thoughts=thoughts2)
    return AgentDecision(
        kind="handoff",
        handoff_reason=HANDOFF_INVALID,
        thoughts=thoughts2 or thoughts,
    )


OverrideHook = Callable[[Session, AgentDecision], str | None]


def run_autopilot(
    engine: Engine,
    session: Session,
    meta_prompt: str,
    provider: CompletionProvider,
    step_limit: int = 50,
    config: ProviderConfig | None = None,
    override_hook: OverrideHook | None = None,
) -> AutopilotTranscript:
    """Drive the session with the agent until completion, handoff or limit.

    Applied decisions are recorded as responder=autopilot; when the override
    hook supplies a replacement, that turn is recorded as responder=user and
    the replaced decision survives only in the transcript.
    """
    if step_limit < 1:
        raise ValueError("step_limit must be >= 1")
    transcript = AutopilotTranscript()
    with engine.lock_for(session.session_id):
        applied = 0
        while True:
            if session.status == COMPLETED:
                transcript.termination = TERMINATION_COMPLETED
                break
            if session.status == FAILED:
                transcript.termination = TERMINATION_HANDOFF
                break
            if applied >= step_limit:
                transcript.termination = TERMINATION_STEP_LIMIT
                break

            try:
                decision = agent_step(engine, session, meta_prompt, provider, config)
            except ScriptMiss:
                # a scripted agent with no entry for this prompt has nothing
                # to say: the deterministic analog of "I don't know"
                decision = AgentDecision(
                    kind="handoff",
                    handoff_reason=HANDOFF_DONT_KNOW,
                    thoughts="the scripted provider has no answer for this state",
                )
            entry = TranscriptEntry(state_id=session.current_state_id, decision=decision)
            transcript.entries.append(entry)
            if decision.kind == "handoff":
                transcript.termination = TERMINATION_HANDOFF
                break

            response: str = decision.answer or ""
            responder = "autopilot"
            reasoning: str | None = decision.thoughts
            override = False
            if override_hook is not None:
                replacement = override_hook(session, decision)
                if replacement is not None:
                    entry.overridden_response = replacement
                    response = replacement
                    responder = "user"
                    reasoning = None
                    override = True

            try:
                outcome = engine.submit(
                    session, response, responder=responder, override=override,
                    reasoning=reasoning,
                )
            except (InputRejected, InvalidChoice, ToolFailure) as exc:
                # validated answers should pass; a residual rejection means
                # the agent cannot make progress at this state
                entry.decision = AgentDecision(
                    kind="handoff",
                    handoff_reason=HANDOFF_INVALID,
                    thoughts=f"engine rejected the applied decision: {exc}",
                )
                entry.applied = False
                transcript.termination = TERMINATION_HANDOFF
                break
            entry.applied = True
            entry.turn_index = outcome.turn.index
            applied += 1
    return transcript
