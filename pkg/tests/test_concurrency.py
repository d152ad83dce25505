"""Per-session serialization and cross-session parallelism."""

from __future__ import annotations

import threading

from crisprflow.engine import COMPLETED
from crisprflow.errors import CrisprFlowError
from crisprflow.planner import meta_pipeline

from .conftest import knockout_request

KNOCKOUT_PLAN = meta_pipeline("knockout").tasks


def test_concurrent_submissions_to_one_session_serialize(engine):
    session = engine.start_session("meta", KNOCKOUT_PLAN, "knockout Trp53 in mouse")
    barrier = threading.Barrier(8)

    def worker(text):
        barrier.wait()
        for _ in range(5):
            try:
                engine.submit(session, text)
            except CrisprFlowError:
                pass

    threads = [threading.Thread(target=worker, args=(f"bogus answer {i}",)) for i in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()

    # every rejected attempt appended exactly one turn, in a single series
    assert [t.index for t in session.history] == list(range(len(session.history)))
    stamps = [t.at for t in session.history]
    assert stamps == sorted(stamps)
    assert all(t.error is not None for t in session.history if t.responder == "user")
    # the session never advanced
    assert session.current_state_id == "knockout.StateStep1.system"


def test_distinct_sessions_progress_concurrently(engine):
    genes = ["TGFBR1", "SNAI1", "BAX", "BCL2L1"]
    sessions = {
        gene: engine.start_session("meta", KNOCKOUT_PLAN, knockout_request(gene))
        for gene in genes
    }
    script = ["I acknowledge", "Cas12a", "Lentiviral transduction", "I acknowledge", "I acknowledge"]
    failures = []

    def drive(gene):
        try:
            for text in script:
                engine.submit(sessions[gene], text)
        except Exception as exc:  # surface thread failures to the main thread
            failures.append((gene, exc))

    threads = [threading.Thread(target=drive, args=(gene,)) for gene in genes]
    for t in threads:
        t.start()
    for t in threads:
        t.join()

    assert failures == []
    for gene, session in sessions.items():
        assert session.status == COMPLETED
        assert {g["gene"] for g in session.artifact_value("guides")} == {gene}
