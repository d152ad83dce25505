"""Declarative workflow definitions: parsing, validation, registry.

Pipelines are data, not code: each task ships as a YAML document with
``task_name``, ``description`` and ``states[]``. Validation resolves every
transition, enforces choice/option structure, checks that instruction
placeholders can be satisfied by ancestor states or request fields, and
verifies the non-bypassable organism checkpoint: no guide-design state may
be reachable from a workflow's start without passing a state tagged
``organism_checkpoint``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import (
    DanglingTransition,
    DuplicateStateId,
    ParseError,
    UnknownToolBinding,
)
from .planner import TaskEntry, TaskTable

END = "END"

INPUT_KINDS = ("free_text", "choice", "acknowledgment", "none")
SAFETY_TAGS = ("organism_checkpoint", "requests_sequence")

# artifacts prefilled from the session request; always legal in placeholders
REQUEST_FIELDS = frozenset({"request", "mode", "gene", "species", "cell_line"})

# tool names whose states count as guide-design states for the gate check
GUIDE_DESIGN_TOOLS = frozenset({"lookup_guides"})

_PLACEHOLDER = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")


class GateViolation(ParseError):
    code = "gate_violation"


@dataclass(frozen=True)
class ChoiceOption:
    label: str
    value: str

    def as_dict(self) -> dict:
        return {"label": self.label, "value": self.value}


@dataclass(frozen=True)
class ToolBinding:
    tool: str
    args: dict[str, dict]  # param -> {"artifact": key[, "optional": bool]} | {"const": value}
    writes: dict[str, str]  # tool output name -> artifact key


@dataclass(frozen=True)
class StateDef:
    state_id: str
    instruction: str
    input_kind: str
    transitions: dict[str, str]
    answer_artifact: str | None = None
    options: tuple[ChoiceOption, ...] = ()
    validator: str | None = None
    validator_params: dict = field(default_factory=dict)
    tool_binding: ToolBinding | None = None
    safety_tags: frozenset[str] = frozenset()

    @property
    def artifact_writes(self) -> tuple[str, ...]:
        keys: list[str] = []
        if self.answer_artifact:
            keys.append(self.answer_artifact)
        if self.tool_binding:
            for artifact_key in self.tool_binding.writes.values():
                if artifact_key not in keys:
                    keys.append(artifact_key)
        return tuple(keys)

    def placeholders(self) -> set[str]:
        return set(_PLACEHOLDER.findall(self.instruction))

    def is_guide_design(self) -> bool:
        return self.tool_binding is not None and self.tool_binding.tool in GUIDE_DESIGN_TOOLS


@dataclass
class WorkflowDef:
    task_name: str
    description: str
    dependencies: tuple[str, ...]
    start: str
    states: dict[str, StateDef]
    order: list[str]  # state ids in document order

    def state(self, state_id: str) -> StateDef:
        return self.states[state_id]


@dataclass
class ValidationReport:
    workflows: int = 0
    states: int = 0
    gate_checked: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "workflows": self.workflows,
            "states": self.states,
            "gate_checked": list(self.gate_checked),
            "warnings": list(self.warnings),
        }


class WorkflowRegistry:
    def __init__(self, workflows: list[WorkflowDef], report: ValidationReport):
        self.workflows: dict[str, WorkflowDef] = {w.task_name: w for w in workflows}
        self.states: dict[str, tuple[str, StateDef]] = {}
        for wf in workflows:
            for sid, state in wf.states.items():
                self.states[sid] = (wf.task_name, state)
        self.validation_report = report

    def __contains__(self, task_name: str) -> bool:
        return task_name in self.workflows

    def __len__(self) -> int:
        return len(self.workflows)

    def task_table(self) -> TaskTable:
        entries = [
            TaskEntry(name=wf.task_name, description=wf.description, deps=wf.dependencies)
            for wf in self.workflows.values()
        ]
        return TaskTable(entries)

    def state(self, state_id: str) -> StateDef:
        return self.states[state_id][1]

    def task_of_state(self, state_id: str) -> str:
        return self.states[state_id][0]


def _parse_state(raw: dict, doc_label: str) -> StateDef:
    if not isinstance(raw, dict):
        raise ParseError(f"{doc_label}: state entry must be a mapping")
    try:
        state_id = raw["state_id"]
        instruction = raw["instruction"]
        input_kind = raw["input_kind"]
        transitions = raw["transitions"]
    except KeyError as exc:
        raise ParseError(f"{doc_label}: state missing required field {exc}") from None
    if input_kind not in INPUT_KINDS:
        raise ParseError(f"{doc_label}: state {state_id!r} has unknown input_kind {input_kind!r}")
    if not isinstance(transitions, dict) or not transitions:
        raise ParseError(f"{doc_label}: state {state_id!r} needs a non-empty transitions map")

    options: list[ChoiceOption] = []
    if input_kind == "choice":
        raw_options = raw.get("options") or []
        for opt in raw_options:
            if isinstance(opt, str):
                options.append(ChoiceOption(label=opt, value=opt))
            else:
                label = opt["label"]
                options.append(ChoiceOption(label=label, value=opt.get("value", label)))
        labels = [o.label for o in options]
        if len(set(labels)) < 2:
            raise ParseError(
                f"{doc_label}: choice state {state_id!r} needs >= 2 distinct options"
            )
    elif raw.get("options"):
        raise ParseError(f"{doc_label}: state {state_id!r} has options but is not a choice state")

    tool_binding = None
    raw_tool = raw.get("tool_binding")
    if raw_tool is not None:
        if isinstance(raw_tool, list):
            raise ParseError(f"{doc_label}: state {state_id!r} may bind at most one tool")
        args = {}
        for param, spec in (raw_tool.get("args") or {}).items():
            if not isinstance(spec, dict) or not ({"artifact", "const"} & set(spec)):
                raise ParseError(
                    f"{doc_label}: state {state_id!r} tool arg {param!r} must be "
                    "{artifact: key} or {const: value}"
                )
            args[param] = dict(spec)
        writes = raw_tool.get("writes") or {}
        if not isinstance(writes, dict):
            raise ParseError(f"{doc_label}: state {state_id!r} tool writes must be a mapping")
        tool_binding = ToolBinding(tool=raw_tool.get("tool", ""), args=args, writes=dict(writes))
        if not tool_binding.tool:
            raise ParseError(f"{doc_label}: state {state_id!r} tool binding missing tool name")

    tags = frozenset(raw.get("safety_tags") or [])
    unknown_tags = tags - set(SAFETY_TAGS)
    if unknown_tags:
        raise ParseError(f"{doc_label}: state {state_id!r} has unknown safety tags {sorted(unknown_tags)}")

    return StateDef(
        state_id=str(state_id),
        instruction=str(instruction),
        input_kind=input_kind,
        transitions={str(k): str(v) for k, v in transitions.items()},
        answer_artifact=raw.get("answer_artifact"),
        options=tuple(options),
        validator=raw.get("validator"),
        validator_params=dict(raw.get("validator_params") or {}),
        tool_binding=tool_binding,
        safety_tags=tags,
    )


def _parse_document(doc: dict, doc_label: str) -> WorkflowDef:
    if not isinstance(doc, dict):
        raise ParseError(f"{doc_label}: document must be a mapping")
    for key in ("task_name", "description", "states"):
        if key not in doc:
            raise ParseError(f"{doc_label}: missing top-level field {key!r}")
    raw_states = doc["states"]
    if not isinstance(raw_states, list) or not raw_states:
        raise ParseError(f"{doc_label}: states must be a non-empty list")
    states: dict[str, StateDef] = {}
    order: list[str] = []
    for raw in raw_states:
        state = _parse_state(raw, doc_label)
        if state.state_id in states:
            raise DuplicateStateId(f"{doc_label}: duplicate state id {state.state_id!r}")
        states[state.state_id] = state
        order.append(state.state_id)
    start = doc.get("start", order[0])
    if start not in states:
        raise ParseError(f"{doc_label}: start state {start!r} not defined")
    deps = tuple(doc.get("dependencies") or [])
    return WorkflowDef(
        task_name=str(doc["task_name"]),
        description=str(doc["description"]),
        dependencies=deps,
        start=start,
        states=states,
        order=order,
    )


def _expected_outcomes(state: StateDef, tool_outcomes: dict[str, tuple[str, ...]]) -> set[str]:
    if state.tool_binding is not None:
        return set(tool_outcomes.get(state.tool_binding.tool, ("done",)))
    if state.input_kind == "choice":
        return {o.label for o in state.options}
    if state.input_kind == "acknowledgment":
        return {"acknowledged"}
    if state.input_kind == "free_text":
        outcomes = {"submitted"}
        if "organism_checkpoint" in state.safety_tags:
            outcomes.add("acknowledged")
        return outcomes
    return {"done"}


def _check_placeholders(wf: WorkflowDef) -> None:
    # keys writable by any ancestor (graph predecessor closure) per state
    edges: dict[str, set[str]] = {sid: set() for sid in wf.states}
    for sid, state in wf.states.items():
        for target in state.transitions.values():
            if target != END and target in wf.states:
                edges[sid].add(target)
    ancestors: dict[str, set[str]] = {sid: set() for sid in wf.states}
    changed = True
    while changed:
        changed = False
        for sid in wf.order:
            for target in edges[sid]:
                want = ancestors[sid] | {sid}
                if not want <= ancestors[target]:
                    ancestors[target] |= want
                    changed = True
    for sid, state in wf.states.items():
        writable = set(REQUEST_FIELDS)
        for anc in ancestors[sid]:
            writable.update(wf.states[anc].artifact_writes)
        extra = state.placeholders() - writable
        if extra:
            raise ParseError(
                f"workflow {wf.task_name!r}: state {sid!r} instruction placeholders "
                f"{sorted(extra)} not writable by ancestor states or request fields"
            )


def check_gate_reachability(wf: WorkflowDef) -> list[str]:
    """Paths that reach a guide-design state without an organism checkpoint.

    Traversal is blocked at checkpoint-tagged states; any guide-design state
    still reachable from the start is a violation. Returns violation
    descriptions (empty means the workflow is safe).
    """
    design_states = {sid for sid, s in wf.states.items() if s.is_guide_design()}
    if not design_states:
        return []
    violations: list[str] = []
    reachable: set[str] = set()
    frontier = [wf.start]
    while frontier:
        sid = frontier.pop()
        if sid in reachable:
            continue
        reachable.add(sid)
        state = wf.states[sid]
        if "organism_checkpoint" in state.safety_tags:
            continue  # cannot pass the checkpoint without acknowledging
        for target in state.transitions.values():
            if target != END and target in wf.states:
                frontier.append(target)
    for sid in sorted(design_states & reachable):
        violations.append(
            f"workflow {wf.task_name!r}: guide-design state {sid!r} reachable "
            "without an organism checkpoint"
        )
    return violations


DEFAULT_TOOL_OUTCOMES: dict[str, tuple[str, ...]] = {
    "lookup_guides": ("ok",),
    "off_target_scan": ("ok",),
    "recommend_protocol": ("ok",),
    "locate_target": ("located", "not_found"),
    "design_validation_primers": ("ok", "no_primers"),
    "artifact_present": ("present", "missing"),
}


def load_workflows(
    documents: list[str] | str | Path,
    tool_outcomes: dict[str, tuple[str, ...]] | None = None,
) -> WorkflowRegistry:
    """Parse and validate workflow documents into a registry.

    ``documents`` may be a list of YAML strings (each possibly a multi-
    document stream), a directory of ``*.yaml`` files, or a single file.
    """
    tool_outcomes = tool_outcomes if tool_outcomes is not None else DEFAULT_TOOL_OUTCOMES
    texts: list[tuple[str, str]] = []
    if isinstance(documents, (str, Path)) and Path(documents).exists():
        root = Path(documents)
        paths = sorted(root.glob("*.yaml")) if root.is_dir() else [root]
        for p in paths:
            texts.append((p.name, p.read_text(encoding="utf-8")))
    elif isinstance(documents, (list, tuple)):
        for i, text in enumerate(documents):
            texts.append((f"document[{i}]", text))
    else:
        raise ParseError(f"no such workflow source: {documents!r}")

    workflows: list[WorkflowDef] = []
    seen_tasks: set[str] = set()
    seen_states: set[str] = set()
    for label, text in texts:
        try:
            docs = [d for d in yaml.safe_load_all(text) if d is not None]
        except yaml.YAMLError as exc:
            raise ParseError(f"{label}: invalid YAML: {exc}") from exc
        for idx, doc in enumerate(docs):
            doc_label = f"{label}#{idx}"
            wf = _parse_document(doc, doc_label)
            if wf.task_name in seen_tasks:
                raise ParseError(f"{doc_label}: duplicate task name {wf.task_name!r}")
            seen_tasks.add(wf.task_name)
            for sid in wf.states:
                if sid in seen_states:
                    raise DuplicateStateId(f"{doc_label}: state id {sid!r} already defined elsewhere")
                seen_states.add(sid)
            workflows.append(wf)

    report = ValidationReport()
    # cross-reference checks need the full registry state set
    all_states = {sid for wf in workflows for sid in wf.states}
    for wf in workflows:
        for sid, state in wf.states.items():
            for outcome, target in state.transitions.items():
                if target != END and target not in all_states:
                    raise DanglingTransition(
                        f"workflow {wf.task_name!r}: state {sid!r} transition "
                        f"{outcome!r} targets missing state {target!r}"
                    )
            expected = _expected_outcomes(state, tool_outcomes)
            missing = expected - set(state.transitions)
            if missing:
                raise ParseError(
                    f"workflow {wf.task_name!r}: state {sid!r} lacks transitions "
                    f"for outcomes {sorted(missing)}"
                )
            if state.tool_binding and state.tool_binding.tool not in tool_outcomes:
                raise UnknownToolBinding(
                    f"workflow {wf.task_name!r}: state {sid!r} binds unknown tool "
                    f"{state.tool_binding.tool!r}"
                )
        _check_placeholders(wf)
        violations = check_gate_reachability(wf)
        if violations:
            raise GateViolation("; ".join(violations))
        if any(s.is_guide_design() for s in wf.states.values()):
            report.gate_checked.append(wf.task_name)

    # task-level dependencies must reference known tasks
    for wf in workflows:
        for dep in wf.dependencies:
            if dep not in seen_tasks:
                raise ParseError(
                    f"workflow {wf.task_name!r}: dependency {dep!r} is not a known task"
                )

    report.workflows = len(workflows)
    report.states = len(all_states)
    return WorkflowRegistry(workflows, report)
