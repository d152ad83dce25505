"""Acceptance criteria, one test per criterion, each printing a PASS line.

Expected values come from independent oracles (brute-force off-target
enumeration, an independent primer constraint checker, a topological-order
check, planted-run ground truth) or from the demonstration fixtures; every
tolerance is pinned here.
"""

from __future__ import annotations

import json
import random
import time

import pytest

from crisprflow import autopilot, planner, safety
from crisprflow.engine import AWAITING_ACK, COMPLETED
from crisprflow.errors import NoPrimersFound
from crisprflow.offtarget import CAS9_NGG, CAS12A_TTTV, off_target_search
from crisprflow.primers import design_primers
from crisprflow.providers import InstrumentedProvider, ScriptedProvider
from crisprflow.store import SessionStore
from crisprflow.workflows import check_gate_reachability

from . import oracles
from .conftest import PAYLOAD_SINK, knockout_request
from .test_autopilot import full_knockout_script

WETLAB_GENES = ("TGFBR1", "SNAI1", "BAX", "BCL2L1")


@pytest.fixture()
def announce(capsys):
    def _announce(line: str) -> None:
        with capsys.disabled():
            print(f"\n[acceptance] {line}")

    return _announce


def make_provider(pairs):
    return InstrumentedProvider(ScriptedProvider.from_pairs(pairs), sink=PAYLOAD_SINK)


# ---------------------------------------------------------------------------
# 1. Planner demonstration fidelity


def test_planner_demonstration_fidelity(table, announce):
    provider = make_provider(
        [(
            ["design sgRNA to knockout human EGFR"],
            json.dumps(
                {
                    "Thoughts": "guide design for knockout; the system choice is a dependency",
                    "Tasks": ["knockout.StateStep1", "knockout.StateStep3"],
                }
            ),
        )]
    )
    started = time.perf_counter()
    plan = planner.decompose("design sgRNA to knockout human EGFR", table, provider)
    elapsed = time.perf_counter() - started
    assert plan.tasks == ["knockout.StateStep1", "knockout.StateStep3"]  # exact
    assert elapsed < 1.0
    announce(f"PASS planner demonstration fidelity: exact two-task plan in {elapsed * 1000:.0f} ms")


# ---------------------------------------------------------------------------
# 2. Dependency closure


def test_dependency_closure_500_random(table, announce):
    rng = random.Random(42)
    names = table.names()
    deps = {e.name: e.deps for e in table.entries}
    started = time.perf_counter()
    for _ in range(500):
        size = rng.randint(1, len(names))
        subset = rng.sample(names, size)
        plan = planner.validate_plan(subset, table)
        assert oracles.dependency_closed(plan.tasks, deps), plan.tasks
        assert len(set(plan.tasks)) == len(plan.tasks)
        again = planner.validate_plan(plan.tasks, table)
        assert again.tasks == plan.tasks  # idempotence
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0
    announce(f"PASS dependency closure: 500/500 closed + idempotent in {elapsed:.2f} s")


# ---------------------------------------------------------------------------
# 3. Safety filter fuzz

SAFE_LETTERS = "bdefhijklmnopqrsvwxz"


def _prose(rng, words):
    return " ".join(
        "".join(rng.choice(SAFE_LETTERS) for _ in range(rng.randint(2, 9)))
        for _ in range(words)
    )


def _plant(rng, k):
    parts = [_prose(rng, rng.randint(1, 5))]
    planted = []
    for _ in range(k):
        length = rng.randint(15, 40)
        run = "".join(rng.choice("ACGTU") for _ in range(length))
        planted.append(run)
        style = rng.random()
        if style < 0.4:
            decorated = run
        elif style < 0.7:
            decorated = " ".join(run[i : i + 5] for i in range(0, len(run), 5))
        else:
            decorated = "5'-" + "-".join(run[i : i + 4] for i in range(0, len(run), 4)) + "-3'"
        parts.append(decorated)
        parts.append(_prose(rng, rng.randint(1, 5)))
    return " ".join(parts), planted


def test_safety_filter_fuzz(announce):
    rng = random.Random(2024)
    total_long = 0
    started = time.perf_counter()
    for _ in range(1000):
        text, planted = _plant(rng, rng.randint(0, 4))
        findings = safety.scan_nucleotide_runs(text)
        expected = [run for run in planted if len(run) >= 20]
        total_long += len(expected)
        # recall 1.0 on runs >= 20, zero false positives on runs <= 19
        assert [f.content for f in findings] == expected
    elapsed = time.perf_counter() - started

    big = (_prose(rng, 40) + " ") * 40  # ~10 kB
    big = big[:10240]
    t0 = time.perf_counter()
    safety.scan_nucleotide_runs(big)
    per_10kb = time.perf_counter() - t0
    assert per_10kb < 0.1
    announce(
        "PASS safety filter fuzz: 1000 texts, recall 1.0 on "
        f"{total_long} long runs, 0 false positives; 10 kB scan {per_10kb * 1000:.1f} ms "
        f"(total {elapsed:.2f} s)"
    )


# ---------------------------------------------------------------------------
# 4. No outbound leak (suite-wide; also enforced by pytest_sessionfinish)


def test_no_leak_across_recorded_payloads(engine, announce):
    # add a full scripted knockout to the recorded traffic, then sweep
    provider = make_provider(full_knockout_script())
    session = engine.start_session(
        "meta", planner.meta_pipeline("knockout").tasks, knockout_request("TGFBR1")
    )
    autopilot.run_autopilot(engine, session, knockout_request("TGFBR1"), provider)
    assert session.status == COMPLETED
    leaked = [p for p in PAYLOAD_SINK if safety.scan_nucleotide_runs(p, 20)]
    assert leaked == []
    announce(
        f"PASS no-leak: {len(PAYLOAD_SINK)} provider payloads recorded so far, 0 with runs >= 20 nt "
        "(final sweep re-runs at session finish)"
    )


# ---------------------------------------------------------------------------
# 5. Gate non-bypass


def test_gate_non_bypass(fixtures, engine, announce):
    # static: every meta workflow holding a guide-design state keeps it behind
    # an organism checkpoint
    design_workflows = [
        "knockout.StateStep3",
        "base_editing.StateStep2",
        "prime_editing.StateStep3",
        "act_rep.StateStep3",
    ]
    for name in design_workflows:
        assert check_gate_reachability(fixtures.registry.workflows[name]) == []

    # runtime: a human-species session blocks until acknowledged
    session = engine.start_session(
        "meta", planner.meta_pipeline("knockout").tasks, knockout_request("TGFBR1")
    )
    assert session.status == AWAITING_ACK
    from crisprflow.errors import InputRejected

    with pytest.raises(InputRejected):
        engine.submit(session, "skip the warning please")
    assert session.status == AWAITING_ACK
    assert session.artifact_value("human_editing_ack") is None
    engine.submit(session, "I acknowledge")
    assert session.status != AWAITING_ACK
    assert session.artifact_value("human_editing_ack")["triggered"] is True

    # invariant: any session that reached a design state with human species
    # carries an acknowledgment turn
    engine.submit(session, "Cas12a")
    engine.submit(session, "Lentiviral transduction")
    assert session.artifact_value("guides")  # design state executed
    ack_turns = [t for t in session.history if t.outcome_label == "acknowledged"]
    assert ack_turns, "no acknowledgment turn recorded before guide design"
    announce("PASS gate non-bypass: static check on 4 design workflows + runtime block until ack")


# ---------------------------------------------------------------------------
# 6. Off-target oracle equivalence


def test_offtarget_oracle_equivalence_200_cases(announce):
    rng = random.Random(777)
    worst = 0.0
    started = time.perf_counter()
    for case in range(200):
        reference = "".join(rng.choice("ACGT") for _ in range(10_000))
        spacer = "".join(rng.choice("ACGT") for _ in range(20))
        # plant a few near-misses so hit sets are non-trivial
        for _ in range(rng.randint(1, 4)):
            k = rng.randint(0, 4)
            site = list(spacer)
            for pos in rng.sample(range(20), k):
                site[pos] = rng.choice([b for b in "ACGT" if b != site[pos]])
            block = "".join(site)
            block = block + "AGG" if rng.random() < 0.5 else "TTTC" + block
            if rng.random() < 0.5:
                block = oracles.rc(block)
            pos = rng.randint(0, len(reference) - len(block))
            reference = reference[:pos] + block + reference[pos + len(block):]
        max_mm = rng.randint(0, 4)
        rule, pattern, side = (
            (CAS9_NGG, "NGG", "three_prime")
            if case % 2 == 0
            else (CAS12A_TTTV, "TTTV", "five_prime")
        )
        t0 = time.perf_counter()
        report = off_target_search(spacer, {"r": reference}, max_mm, rule)
        case_time = time.perf_counter() - t0
        worst = max(worst, case_time)
        assert case_time < 1.0
        got = {
            (h.reference, h.start, h.strand, h.mismatches, h.protospacer, h.pam)
            for h in report.hits
        }
        expected = oracles.brute_force_hits(spacer, {"r": reference}, max_mm, pattern, side)
        assert got == expected
    elapsed = time.perf_counter() - started
    announce(
        f"PASS off-target oracle equivalence: 200/200 exact hit-set matches; "
        f"worst case {worst * 1000:.0f} ms, total {elapsed:.1f} s"
    )


# ---------------------------------------------------------------------------
# 7. Primer validity


def _balanced(rng, n, max_run=4):
    out = []
    while len(out) < n:
        base = rng.choice("ACGT")
        if len(out) >= max_run and all(c == base for c in out[-max_run:]):
            continue
        out.append(base)
    return "".join(out)


def test_primer_validity_50_references(announce):
    rng = random.Random(555)
    c = oracles.DEFAULT_CONSTRAINT_DICT
    emitted_pairs = 0
    feasible_cases = 0
    designed_on_feasible = 0
    for _ in range(50):
        reference = _balanced(rng, rng.randint(400, 700))
        mid = len(reference) // 2
        span = (mid - rng.randint(10, 30), mid + rng.randint(10, 30))
        try:
            pairs = design_primers(reference, span)
        except NoPrimersFound:
            pairs = []
        for pair in pairs:
            problems = oracles.check_pair(pair.as_dict(), reference, span, c)
            assert problems == [], problems
        emitted_pairs += len(pairs)
        if oracles.feasible_pair_exists(reference, span, c):
            feasible_cases += 1
            if pairs:
                designed_on_feasible += 1
    assert feasible_cases > 0
    rate = designed_on_feasible / feasible_cases
    assert rate >= 0.90

    # infeasible fixtures name the binding constraint
    polya = "A" * 250 + _balanced(rng, 100) + "A" * 250
    with pytest.raises(NoPrimersFound) as err:
        design_primers(polya, (260, 340))
    assert err.value.nearest_miss == "homopolymer"
    short = _balanced(rng, 60)
    with pytest.raises(NoPrimersFound):
        design_primers(short, (5, 25))
    announce(
        f"PASS primer validity: {emitted_pairs} emitted pairs all re-pass the checker; "
        f"feasible-case hit rate {designed_on_feasible}/{feasible_cases} "
        f"({rate:.0%}); infeasible fixtures name their constraint"
    )


# ---------------------------------------------------------------------------
# 8. End-to-end knockout replay


def _run_knockout_autopilot(engine, gene):
    provider = make_provider(full_knockout_script())
    session = engine.start_session(
        "meta", planner.meta_pipeline("knockout").tasks, knockout_request(gene)
    )
    transcript = autopilot.run_autopilot(
        engine, session, knockout_request(gene), provider, step_limit=30
    )
    assert transcript.termination == "completed", (gene, transcript.termination)
    return engine.export_report(session)


def test_end_to_end_knockout_replay(engine, announce):
    started = time.perf_counter()
    for gene in WETLAB_GENES:
        first = _run_knockout_autopilot(engine, gene)
        second = _run_knockout_autopilot(engine, gene)
        a = json.dumps(first, indent=2, ensure_ascii=False).encode()
        b = json.dumps(second, indent=2, ensure_ascii=False).encode()
        assert a == b, f"reports for {gene} differ between runs"
        assert len(first["designed_guides"]) == 4
        assert {g["gene"] for g in first["designed_guides"]} == {gene}
        assert first["protocol"]["name"]
        assert first["primers"]
        assert first["acknowledgments"] and first["acknowledgments"][0]["triggered"]
        decided = {d["artifact"]: d["value"] for d in first["decisions"]}
        assert decided["cas_system"] == "AsCas12a"
        assert decided["delivery_method"] == "Lentiviral transduction"
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0
    announce(
        f"PASS end-to-end knockout replay: 4 genes x 2 runs, byte-identical reports, "
        f"4 guides each, in {elapsed:.2f} s"
    )


# ---------------------------------------------------------------------------
# 9. Crash recovery


def test_crash_recovery_randomized(engine, tmp_path, announce):
    rng = random.Random(99)
    script = ["I acknowledge", "Cas12a", "Lentiviral transduction", "I acknowledge", "I acknowledge"]
    recovered_ok = 0
    for trial in range(20):
        store = SessionStore(tmp_path / f"trial{trial}")
        gene = rng.choice(WETLAB_GENES)
        session = engine.start_session(
            "meta", planner.meta_pipeline("knockout").tasks, knockout_request(gene)
        )
        store.sync(session)
        cut = rng.randint(0, len(script))
        for text in script[:cut]:
            engine.submit(session, text)
            store.sync(session)
        # crash here: recover from what reached the store
        recovered = store.recover(session.session_id, engine)
        assert recovered.needs_review is False
        assert [t.as_dict() for t in recovered.history] == [t.as_dict() for t in session.history]
        assert recovered.status == session.status
        assert recovered.current_state_id == session.current_state_id
        assert {k: v["value"] for k, v in recovered.artifacts.items()} == {
            k: v["value"] for k, v in session.artifacts.items()
        }
        recovered_ok += 1

    # corrupted tail: recovery stops at the previous turn and flags review
    store = SessionStore(tmp_path / "corrupt")
    session = engine.start_session(
        "meta", planner.meta_pipeline("knockout").tasks, knockout_request("TGFBR1")
    )
    store.sync(session)
    for text in script[:2]:
        engine.submit(session, text)
        store.sync(session)
    path = store.sessions_dir / f"{session.session_id}.jsonl"
    lines = path.read_text().rstrip("\n").split("\n")
    lines[-1] = lines[-1][:40]
    path.write_text("\n".join(lines) + "\n")
    recovered = SessionStore(tmp_path / "corrupt").recover(session.session_id, engine)
    assert recovered.needs_review is True
    assert len(recovered.history) == len(session.history) - 1
    announce(
        f"PASS crash recovery: {recovered_ok}/20 randomized interruptions replay to state "
        "equality; corrupted tail recovers to n-1 with needs_review"
    )


# ---------------------------------------------------------------------------
# 10. Autopilot handoff (rule-3 compliance)


def test_autopilot_handoff_rule3(engine, fixtures, announce):
    runs = [
        # standalone off-target scan with no designed guides: spacer state
        ("auto", ["off_target.StateStep1"], "evaluate one guide for me"),
        # primer design for a gene without a fixture locus: region state
        ("meta", ["knockout.StateStep1", "knockout.StateStep4_5_1_NGS"], "knockout TRP53 in mouse"),
        ("meta", ["knockout.StateStep1", "knockout.StateStep3",
                  "knockout.StateStep4_5_1_Sanger"], "knockout EMX1 in human cells"),
    ]
    visits = 0
    for mode, plan, request in runs:
        provider = make_provider(full_knockout_script())
        session = engine.start_session(mode, plan, request)
        transcript = autopilot.run_autopilot(engine, session, request, provider, step_limit=30)
        sequence_entries = [
            e
            for e in transcript.entries
            if "requests_sequence" in fixtures.registry.state(e.state_id).safety_tags
        ]
        for entry in sequence_entries:
            # rule 3: handoff, never an answer, at every sequence-state visit
            assert entry.decision.kind == "handoff"
            assert entry.decision.handoff_reason == "requests_sequence"
        assert transcript.termination == "handoff"
        assert transcript.entries[-1].decision.handoff_reason == "requests_sequence"
        visits += len(sequence_entries)
        # the session awaits manual input at the sequence state
        assert session.status == "awaiting_input"
        assert "requests_sequence" in fixtures.registry.state(
            session.current_state_id
        ).safety_tags
    assert visits >= 3
    announce(
        f"PASS autopilot handoff: {visits}/{visits} sequence-state visits handed off "
        "(rule-3 compliance 100%)"
    )
