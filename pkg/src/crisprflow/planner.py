"""Task planning: predefined meta pipelines, LLM decomposition, plan repair.

A plan is an ordered list of task names that is *dependency closed*: every
dependency of every entry appears earlier in the list. Plans coming back
from a language model are repaired deterministically (missing dependencies
inserted immediately before their first dependent, then a stable
topological sort) instead of reprompting, so scripted runs stay
reproducible and provider calls stay bounded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    CyclicDependencies,
    EmptyPlanFromProvider,
    EmptyRequest,
    UnknownMetaTask,
    UnknownTaskName,
)
from .prompts import build_decomposition_prompt
from .providers import CompletionProvider, ProviderConfig, complete_structured

PROVENANCE_META = "meta_pipeline"
PROVENANCE_LLM = "llm_decomposition"
PROVENANCE_MANUAL = "manual"


@dataclass(frozen=True)
class TaskEntry:
    name: str
    description: str
    deps: tuple[str, ...] = ()


@dataclass
class Plan:
    tasks: list[str]
    provenance: str
    repair_log: list[dict] = field(default_factory=list)
    thoughts: str | None = None

    def as_dict(self) -> dict:
        return {
            "tasks": list(self.tasks),
            "provenance": self.provenance,
            "repair_log": list(self.repair_log),
            "thoughts": self.thoughts,
        }


_GROUP_LABELS = {
    "knockout": "knockout",
    "base_editing": "base editing",
    "prime_editing": "prime editing",
    "act_rep": "CRISPRa/CRISPRi",
    "off_target": "Off-Target Prediction",
}


class TaskTable:
    """Ordered registry of task names, descriptions and dependencies."""

    def __init__(self, entries: list[TaskEntry], validate: bool = True):
        self.entries = list(entries)
        self._by_name = {e.name: e for e in self.entries}
        if validate:
            if len(self._by_name) != len(self.entries):
                names = [e.name for e in self.entries]
                dupes = sorted({n for n in names if names.count(n) > 1})
                raise ValueError(f"duplicate task names: {dupes}")
            for entry in self.entries:
                for dep in entry.deps:
                    if dep not in self._by_name:
                        raise ValueError(f"task {entry.name!r} depends on unknown {dep!r}")
            self.check_acyclic()

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, name: str) -> TaskEntry:
        return self._by_name[name]

    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    def check_acyclic(self) -> None:
        seen: set[str] = set()
        in_progress: set[str] = set()

        def visit(name: str, trail: list[str]) -> None:
            if name in seen:
                return
            if name in in_progress:
                cycle = trail[trail.index(name):] + [name]
                raise CyclicDependencies(f"task table has a dependency cycle: {' -> '.join(cycle)}")
            in_progress.add(name)
            for dep in self._by_name[name].deps:
                visit(dep, trail + [name])
            in_progress.discard(name)
            seen.add(name)

        for entry in self.entries:
            visit(entry.name, [])

    def render(self) -> str:
        """Serialize as the prompt's task-description table, grouped by scenario."""
        groups: dict[str, list[TaskEntry]] = {}
        order: list[str] = []
        for entry in self.entries:
            prefix = entry.name.split(".")[0]
            if prefix not in groups:
                groups[prefix] = []
                order.append(prefix)
            groups[prefix].append(entry)
        blocks: list[str] = []
        for prefix in order:
            label = _GROUP_LABELS.get(prefix, prefix)
            lines = [f"For {label}", "", "task name: task descriptions: dependency"]
            for entry in groups[prefix]:
                if not entry.deps:
                    dep_text = "none"
                else:
                    dep_text = "needs to complete " + " and ".join(entry.deps) + " first"
                lines.append(f"{entry.name}: {entry.description} : {dep_text}")
            blocks.append("\n".join(lines))
        return "\n\n".join(blocks)


META_PIPELINES = {
    "knockout": [
        "knockout.StateStep1",
        "knockout.StateStep2",
        "knockout.StateStep3",
        "off_target.StateStep1",
        "knockout.StateStep4",
        "knockout.StateStep4_5_1_NGS",
    ],
    "base_editing": [
        "base_editing.StateStep1",
        "base_editing.StateStep2",
        "off_target.StateStep1",
        "base_editing.StateStep3",
        "base_editing.StateStep4",
        "base_editing.StateStep4_5_1_NGS",
    ],
    "prime_editing": [
        "prime_editing.StateStep1",
        "prime_editing.StateStep2",
        "prime_editing.StateStep3",
        "off_target.StateStep1",
        "prime_editing.StateStep4",
        "prime_editing.StateStep4_5_1_NGS",
    ],
    "activation_interference": [
        "act_rep.StateStep1",
        "act_rep.StateStep2",
        "act_rep.StateStep3",
        "act_rep.StateStep4",
        "act_rep.StateStep4_5_1",
    ],
}


def meta_pipeline(meta_task: str) -> Plan:
    if meta_task not in META_PIPELINES:
        raise UnknownMetaTask(
            f"unknown meta task {meta_task!r}; supported: {sorted(META_PIPELINES)}"
        )
    return Plan(tasks=list(META_PIPELINES[meta_task]), provenance=PROVENANCE_META)


def validate_plan(tasks: list[str], table: TaskTable, provenance: str = PROVENANCE_MANUAL) -> Plan:
    """Check, close and order a task list against the table.

    Unknown names are rejected; missing dependencies are inserted immediately
    before their first dependent; the result is topologically ordered with
    the original relative order kept among independent tasks. The operation
    is idempotent.
    """
    table.check_acyclic()
    for name in tasks:
        if name not in table:
            raise UnknownTaskName(f"unknown task name {name!r}")

    repair_log: list[dict] = []
    ordered: list[str] = []
    for name in tasks:
        if name in ordered:
            repair_log.append({"action": "deduplicated", "task": name})
            continue
        ordered.append(name)

    # close over dependencies, inserting each missing dep right before the
    # first task that needs it
    changed = True
    while changed:
        changed = False
        i = 0
        while i < len(ordered):
            name = ordered[i]
            for dep in table.get(name).deps:
                if dep not in ordered:
                    ordered.insert(i, dep)
                    repair_log.append({"action": "inserted", "task": dep, "before": name})
                    changed = True
                    break
            else:
                i += 1

    # stable topological sort: among ready tasks, keep the earliest-listed
    position = {name: idx for idx, name in enumerate(ordered)}
    placed: list[str] = []
    done: set[str] = set()
    remaining = set(ordered)
    while remaining:
        ready = [
            n for n in remaining
            if all(dep in done or dep not in remaining for dep in table.get(n).deps)
        ]
        if not ready:
            raise CyclicDependencies(f"dependency cycle among {sorted(remaining)}")
        pick = min(ready, key=lambda n: position[n])
        placed.append(pick)
        done.add(pick)
        remaining.discard(pick)
    for idx, name in enumerate(placed):
        if ordered[idx] != name and not any(
            entry.get("task") == name and entry["action"] == "reordered" for entry in repair_log
        ):
            repair_log.append({"action": "reordered", "task": name})

    return Plan(tasks=placed, provenance=provenance, repair_log=repair_log)


DECOMPOSITION_SCHEMA = frozenset({"Thoughts", "Tasks"})


def decompose(
    request: str,
    table: TaskTable,
    provider: CompletionProvider,
    config: ProviderConfig | None = None,
) -> Plan:
    """Ask the provider to decompose a request, then validate and repair."""
    if not request or not request.strip():
        raise EmptyRequest("request must be non-empty")
    bundle = build_decomposition_prompt(request, table.render())
    fields = complete_structured(bundle, DECOMPOSITION_SCHEMA, provider, config)
    raw_tasks = fields["Tasks"]
    if isinstance(raw_tasks, str):
        raw_tasks = [raw_tasks]
    raw_tasks = [t for t in raw_tasks if t.strip()]
    if not raw_tasks:
        raise EmptyPlanFromProvider("provider returned an empty task list")
    plan = validate_plan(raw_tasks, table, provenance=PROVENANCE_LLM)
    plan.thoughts = str(fields.get("Thoughts", ""))
    return plan
