"""The two prompt formats and their instantiation.

Templates are shipped as text fixtures and substituted token-by-token: the
template text is split on the known placeholder markers and values are
inserted raw, so the non-placeholder bytes of the template are preserved
exactly and values containing braces can never corrupt the surrounding
text. Every filled prompt must pass the outbound privacy filter before it
becomes a :class:`PromptBundle`.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .safety import require_clean

_PROMPTS_DIR = Path(__file__).parent / "fixtures" / "prompts"

DECOMPOSITION_PLACEHOLDERS = ("Task Description Table", "user_message")
AUTOPILOT_PLACEHOLDERS = ("meta_prompt", "system_message")


def load_template(template_id: str) -> str:
    path = _PROMPTS_DIR / f"{template_id}.txt"
    return path.read_text(encoding="utf-8")


def substitute(template: str, values: dict[str, str]) -> str:
    """Replace ``{name}`` markers for exactly the given names, nothing else.

    The template is split on all markers before any value is inserted, so a
    value that happens to contain another marker is never substituted again.
    """
    parts: list[str | tuple[str]] = [template]
    for name in values:
        marker = "{" + name + "}"
        found = False
        next_parts: list[str | tuple[str]] = []
        for part in parts:
            if isinstance(part, tuple):
                next_parts.append(part)
                continue
            pieces = part.split(marker)
            if len(pieces) > 1:
                found = True
            for i, piece in enumerate(pieces):
                if i:
                    next_parts.append((name,))
                next_parts.append(piece)
        if not found:
            raise KeyError(f"template has no placeholder {marker}")
        parts = next_parts
    return "".join(values[p[0]] if isinstance(p, tuple) else p for p in parts)


@dataclass(frozen=True)
class PromptBundle:
    template_id: str
    filled_text: str
    placeholders: dict[str, str]


def build_decomposition_prompt(request: str, task_table_text: str) -> PromptBundle:
    """Instantiate the task-decomposition prompt (filter-checked)."""
    require_clean(request)
    filled = substitute(
        load_template("decomposition"),
        {"Task Description Table": task_table_text, "user_message": request},
    )
    require_clean(filled)
    return PromptBundle(
        template_id="decomposition",
        filled_text=filled,
        placeholders={"Task Description Table": task_table_text, "user_message": request},
    )


def build_autopilot_prompt(meta_prompt: str, system_message: str) -> PromptBundle:
    """Instantiate the agent prompt (filter-checked)."""
    require_clean(meta_prompt)
    require_clean(system_message)
    filled = substitute(
        load_template("autopilot"),
        {"meta_prompt": meta_prompt, "system_message": system_message},
    )
    require_clean(filled)
    return PromptBundle(
        template_id="autopilot",
        filled_text=filled,
        placeholders={"meta_prompt": meta_prompt, "system_message": system_message},
    )


def build_qa_prompt(question: str, chunks: list[tuple[str, str]]) -> PromptBundle:
    """Grounded question-answering prompt over retrieved passages."""
    require_clean(question)
    lines = [
        "Answer the question using only the context passages below. "
        "If the passages do not contain the answer, say that no grounded answer is available.",
        "",
        "Context passages:",
    ]
    for chunk_id, text in chunks:
        lines.append(f"[{chunk_id}] {text}")
    lines += ["", f"Question: {question}", "", "Answer:"]
    filled = "\n".join(lines)
    require_clean(filled)
    return PromptBundle(
        template_id="qa",
        filled_text=filled,
        placeholders={"question": question},
    )
