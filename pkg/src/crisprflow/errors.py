"""Exception hierarchy shared across the package.

Every error carries a stable machine ``code`` so the HTTP layer and the CLI
can map failures without string matching.
"""

from __future__ import annotations


class CrisprFlowError(Exception):
    """Base class for all package errors."""

    code = "error"


# ---------------------------------------------------------------------------
# safety guard


class FilterBlocked(CrisprFlowError):
    """Outbound text contained one or more long nucleotide runs."""

    code = "filter_blocked"

    def __init__(self, message: str, findings=None):
        super().__init__(message)
        self.findings = list(findings or [])


# ---------------------------------------------------------------------------
# LLM gateway


class ProviderError(CrisprFlowError):
    code = "provider_error"


class ProviderTimeout(ProviderError):
    code = "provider_timeout"


class ProviderTransport(ProviderError):
    code = "provider_transport"


class ScriptMiss(ProviderError):
    """Scripted provider had no (or no unambiguous) entry for a prompt."""

    code = "script_miss"


class StructuredParseError(CrisprFlowError):
    """Base for failures extracting the mandated JSON object from raw text."""

    code = "structured_parse_error"


class NoObjectFound(StructuredParseError):
    code = "no_object_found"


class MissingKey(StructuredParseError):
    code = "missing_key"

    def __init__(self, key: str):
        super().__init__(f"required key missing: {key}")
        self.key = key


class WrongValueShape(StructuredParseError):
    code = "wrong_value_shape"


class UnparsableResponse(CrisprFlowError):
    """Provider output still unparsable after the single repair reprompt."""

    code = "unparsable_response"


# ---------------------------------------------------------------------------
# planner


class UnknownMetaTask(CrisprFlowError):
    code = "unknown_meta_task"


class UnknownTaskName(CrisprFlowError):
    code = "unknown_task_name"


class CyclicDependencies(CrisprFlowError):
    code = "cyclic_dependencies"


class EmptyRequest(CrisprFlowError):
    code = "empty_request"


class EmptyPlanFromProvider(CrisprFlowError):
    code = "empty_plan_from_provider"


# ---------------------------------------------------------------------------
# workflow definitions / engine


class ParseError(CrisprFlowError):
    """Malformed definition document or data file (message names the spot)."""

    code = "parse_error"


class DanglingTransition(CrisprFlowError):
    code = "dangling_transition"


class DuplicateStateId(CrisprFlowError):
    code = "duplicate_state_id"


class UnknownToolBinding(CrisprFlowError):
    code = "unknown_tool_binding"


class UnknownTask(CrisprFlowError):
    code = "unknown_task"


class EmptyPlan(CrisprFlowError):
    code = "empty_plan"


class SessionCompleted(CrisprFlowError):
    code = "session_completed"


class SessionIncomplete(CrisprFlowError):
    code = "session_incomplete"


class MissingPlaceholder(CrisprFlowError):
    code = "missing_placeholder"


class InvalidChoice(CrisprFlowError):
    code = "invalid_choice"


class InputRejected(CrisprFlowError):
    code = "input_rejected"

    def __init__(self, message: str, findings=None):
        super().__init__(message)
        self.findings = list(findings or [])


class ToolFailure(CrisprFlowError):
    code = "tool_failure"


# ---------------------------------------------------------------------------
# genomics toolkit


class AlphabetError(CrisprFlowError):
    code = "alphabet_error"


class RankGapError(CrisprFlowError):
    code = "rank_gap"


class DuplicateRecord(CrisprFlowError):
    code = "duplicate_record"


class GeneNotFound(CrisprFlowError):
    code = "gene_not_found"

    def __init__(self, species: str, gene: str, modality: str):
        super().__init__(f"no guides for ({species}, {gene}, {modality})")
        self.species = species
        self.gene = gene
        self.modality = modality


class NoPrimersFound(CrisprFlowError):
    code = "no_primers_found"

    def __init__(self, message: str, nearest_miss: str):
        super().__init__(message)
        self.nearest_miss = nearest_miss


class SpanOutOfRange(CrisprFlowError):
    code = "span_out_of_range"


class TooLongForWallace(CrisprFlowError):
    code = "too_long_for_wallace"


# ---------------------------------------------------------------------------
# retrieval / store / service


class EmptyDocument(CrisprFlowError):
    code = "empty_document"

    def __init__(self, doc_id: str):
        super().__init__(f"document has no content: {doc_id}")
        self.doc_id = doc_id


class CorruptLog(CrisprFlowError):
    code = "corrupt_log"

    def __init__(self, message: str, line_no: int):
        super().__init__(message)
        self.line_no = line_no


class SessionNotFound(CrisprFlowError):
    code = "session_not_found"
