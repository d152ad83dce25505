"""Every shipped meta pipeline runs end to end under the scripted agent."""

from __future__ import annotations

import json

import pytest

from crisprflow import autopilot
from crisprflow.engine import COMPLETED
from crisprflow.planner import meta_pipeline

from .conftest import PAYLOAD_SINK
from crisprflow.providers import InstrumentedProvider, ScriptedProvider


def agent(answer):
    return json.dumps({"Thoughts": "per the request", "Answer": answer})


ALL_PIPELINES_SCRIPT = [
    (["moratorium"], agent("I acknowledge")),
    (["Select the CRISPR nuclease"], agent("Cas12a")),
    (["Select the base editor class"], agent("Adenine base editor (ABE)")),
    (["Select the prime editor configuration"], agent("PE2")),
    (["turned up or down"], agent("Activation (CRISPRa)")),
    (["How will you deliver"], agent("Lentiviral transduction")),
    (["acknowledge to continue to validation planning"], agent("I acknowledge")),
    (["Acknowledge to finish this task"], agent("I acknowledge")),
]

CASES = [
    ("knockout", "Knock out TGFBR1 in the human A375 cell line.", "TGFBR1", "knockout"),
    (
        "base_editing",
        "Introduce a point mutation in EGFR in human HEK293T cells by base editing.",
        "EGFR",
        "base_editing",
    ),
    ("prime_editing", "Prime edit EGFR in human HEK293T cells.", "EGFR", "prime_editing"),
    (
        "activation_interference",
        "Activate EGFR expression in human K562 cells.",
        "EGFR",
        "activation",
    ),
]


@pytest.mark.parametrize("meta,request_text,gene,modality", CASES)
def test_meta_pipeline_end_to_end(engine, meta, request_text, gene, modality):
    provider = InstrumentedProvider(
        ScriptedProvider.from_pairs(ALL_PIPELINES_SCRIPT), sink=PAYLOAD_SINK
    )
    session = engine.start_session("meta", meta_pipeline(meta).tasks, request_text)
    transcript = autopilot.run_autopilot(engine, session, request_text, provider, step_limit=40)
    assert transcript.termination == "completed"
    assert session.status == COMPLETED
    report = engine.export_report(session)
    guides = report["designed_guides"]
    assert len(guides) == 4
    assert all(g["gene"] == gene and g["modality"] == modality for g in guides)
    assert report["primers"]
    assert report["protocol"]["name"]
    assert report["acknowledgments"] and report["acknowledgments"][0]["triggered"]
    # human gate acknowledged before any guide retrieval
    ack_index = next(i for i, t in enumerate(session.history) if t.outcome_label == "acknowledged")
    design_index = next(
        i
        for i, t in enumerate(session.history)
        if t.tool_output and "guide" in (t.tool_output.get("summary") or "")
    )
    assert ack_index < design_index
