"""Privacy filter and human-organism gate.

Two independent mechanisms:

* a scanner that finds long nucleotide runs (A/C/G/T/U, case-insensitive) in
  free text, tolerant of the separators wet-lab notation uses inside a
  sequence (whitespace, hyphens, and the 5'/3' end decorations), so that
  ``5'-GACT ATCA-3'`` style writing cannot slip a sequence past the filter;
* an organism gate that decides whether an editing-target answer refers to
  human material and therefore requires an explicit acknowledgment of the
  heritable-editing moratorium before any design step.

Scanning is pure and stateless; gate state lives in the session.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import FilterBlocked

DEFAULT_THRESHOLD = 20

_NUCLEOTIDES = frozenset("ACGTUacgtu")
# Single characters that may appear inside a written-out sequence without
# breaking it. Newlines count: sequences are often wrapped.
_SEPARATOR_CHARS = frozenset(" \t\r\n-")
# Two-character end decorations: 5' / 3' with ASCII or typographic primes.
_PRIME_MARKS = frozenset("'′’")


@dataclass(frozen=True)
class SequenceFinding:
    """One maximal nucleotide run at or above the scan threshold."""

    start: int  # offset of the first nucleotide in the original text
    end: int  # offset just past the last nucleotide
    length: int  # nucleotide count, separators excluded
    content: str  # uppercased run with separators stripped

    def as_dict(self) -> dict:
        return {
            "start": self.start,
            "end": self.end,
            "length": self.length,
            "content": self.content,
        }


def _separator_length(text: str, i: int) -> int:
    """Length of the separator token at ``text[i]``, or 0 if none."""
    c = text[i]
    if c in _SEPARATOR_CHARS:
        return 1
    if c in "53" and i + 1 < len(text) and text[i + 1] in _PRIME_MARKS:
        return 2
    return 0


def scan_nucleotide_runs(text: str, threshold: int = DEFAULT_THRESHOLD) -> list[SequenceFinding]:
    """Find all maximal nucleotide runs with at least ``threshold`` bases.

    A run is a sequence of A/C/G/T/U characters (any case) possibly
    interleaved with separators; the reported offsets always delimit the
    first and last nucleotide, never surrounding separators. Findings are
    non-overlapping and sorted by position.
    """
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    findings: list[SequenceFinding] = []
    n = len(text)
    i = 0
    run_start = -1
    run_end = -1
    run_chars: list[str] = []

    def flush() -> None:
        nonlocal run_start, run_end, run_chars
        if run_start >= 0 and len(run_chars) >= threshold:
            findings.append(
                SequenceFinding(
                    start=run_start,
                    end=run_end,
                    length=len(run_chars),
                    content="".join(run_chars),
                )
            )
        run_start = -1
        run_end = -1
        run_chars = []

    while i < n:
        c = text[i]
        if c in _NUCLEOTIDES:
            if run_start < 0:
                run_start = i
            run_end = i + 1
            run_chars.append(c.upper())
            i += 1
            continue
        if run_start >= 0:
            sep = _separator_length(text, i)
            if sep:
                i += sep
                continue
        flush()
        i += 1
    flush()
    return findings


@dataclass(frozen=True)
class OutboundCheck:
    clean: bool
    findings: list[SequenceFinding]
    user_message: str | None = None


def enforce_outbound(text: str, threshold: int = DEFAULT_THRESHOLD) -> OutboundCheck:
    """Gatekeeper for any text about to leave the system toward a provider.

    Returns a clean verdict or the exact spans the user must delete. A
    blocked payload is never forwarded; callers raise :class:`FilterBlocked`
    via :func:`require_clean` or handle the spans themselves.
    """
    findings = scan_nucleotide_runs(text, threshold)
    if not findings:
        return OutboundCheck(clean=True, findings=[])
    spans = "; ".join(
        f"characters {f.start}-{f.end} ({f.length} nt)" for f in findings
    )
    message = (
        "The text contains nucleotide sequence runs that cannot be sent to an "
        f"external language model: {spans}. Please delete these sequences and retry."
    )
    return OutboundCheck(clean=False, findings=findings, user_message=message)


def require_clean(text: str, threshold: int = DEFAULT_THRESHOLD) -> str:
    """Return ``text`` unchanged or raise :class:`FilterBlocked`."""
    check = enforce_outbound(text, threshold)
    if not check.clean:
        raise FilterBlocked(check.user_message or "blocked", check.findings)
    return text


def redact(text: str, threshold: int = DEFAULT_THRESHOLD) -> str:
    """Replace every long run with a marker so blocked text can be stored."""
    findings = scan_nucleotide_runs(text, threshold)
    if not findings:
        return text
    out: list[str] = []
    pos = 0
    for f in findings:
        out.append(text[pos : f.start])
        out.append(f"[redacted {f.length} nt run]")
        pos = f.end
    out.append(text[pos:])
    return "".join(out)


# ---------------------------------------------------------------------------
# organism gate

_DEFAULT_HUMAN_TERMS = [
    "human",
    "humans",
    "homo sapiens",
    "patient",
    "patient-derived",
]

_DEFAULT_WARNING = (
    "You indicated a human editing target. Germline and embryo genome editing "
    "in humans is illegal in the United States and many other countries. "
    "Before proceeding, read the international moratorium on heritable human "
    "genome editing and confirm that you understand the risks and that your "
    "work is limited to permitted, non-heritable contexts."
)

_DEFAULT_MORATORIUM = "https://www.nature.com/articles/d41586-019-00726-5"


@dataclass
class SafetyConfig:
    """Warning text, moratorium reference and the human-synonym table."""

    warning_text: str = _DEFAULT_WARNING
    moratorium_reference: str = _DEFAULT_MORATORIUM
    human_terms: list[str] = field(default_factory=lambda: list(_DEFAULT_HUMAN_TERMS))
    scan_threshold: int = DEFAULT_THRESHOLD

    def compiled_terms(self) -> re.Pattern:
        parts = sorted((re.escape(t.lower()) for t in self.human_terms), key=len, reverse=True)
        return re.compile(r"(?<![a-z0-9])(" + "|".join(parts) + r")(?![a-z0-9])")


def load_safety_config(path: str | Path) -> SafetyConfig:
    data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    return SafetyConfig(
        warning_text=data.get("warning_text", _DEFAULT_WARNING),
        moratorium_reference=data.get("moratorium_reference", _DEFAULT_MORATORIUM),
        human_terms=[str(t) for t in data.get("human_terms", _DEFAULT_HUMAN_TERMS)],
        scan_threshold=int(data.get("scan_threshold", DEFAULT_THRESHOLD)),
    )


@dataclass(frozen=True)
class GateDecision:
    require_ack: bool
    matched_term: str | None = None
    warning_text: str | None = None
    moratorium_reference: str | None = None


@dataclass
class GateRecord:
    """Outcome of one organism checkpoint, kept in the session artifacts."""

    organism_answer: str
    triggered: bool
    acknowledgment_text: str | None = None
    moratorium_reference: str | None = None
    timestamp: float | None = None

    def as_dict(self) -> dict:
        return {
            "organism_answer": self.organism_answer,
            "triggered": self.triggered,
            "acknowledgment_text": self.acknowledgment_text,
            "moratorium_reference": self.moratorium_reference,
        }


def organism_gate(answer: str, config: SafetyConfig | None = None) -> GateDecision:
    """Decide whether an organism answer requires the moratorium acknowledgment.

    Matching is case-insensitive on whole words against the configured
    synonym table, so cell-line names like "A375" trigger the gate even when
    the word "human" is absent.
    """
    cfg = config or SafetyConfig()
    m = cfg.compiled_terms().search(answer.lower())
    if not m:
        return GateDecision(require_ack=False)
    return GateDecision(
        require_ack=True,
        matched_term=m.group(1),
        warning_text=cfg.warning_text,
        moratorium_reference=cfg.moratorium_reference,
    )
