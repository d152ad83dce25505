"""Nucleotide-run scanner and organism gate."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, strategies as st

from crisprflow import safety
from crisprflow.errors import FilterBlocked

U6_PRIMER = "GACTATCATATGCTTACCGT"  # 20 nt


def test_u6_primer_with_decorations_is_one_finding():
    text = f"clone with U6 primer 5'-{U6_PRIMER}-3'"
    findings = safety.scan_nucleotide_runs(text)
    assert len(findings) == 1
    f = findings[0]
    assert f.length == 20
    assert f.content == U6_PRIMER
    # offsets delimit the nucleotides, not the 5'/3' decorations
    assert text[f.start] == "G"
    assert text[f.end - 1] == "T"


def test_truncated_primer_below_threshold():
    text = f"primer 5'-{U6_PRIMER[:19]}-3'"
    assert safety.scan_nucleotide_runs(text) == []


def test_spaced_blocks_count_as_one_run():
    findings = safety.scan_nucleotide_runs("ACGT ACGT ACGT ACGT ACGT")
    assert len(findings) == 1
    assert findings[0].length == 20
    assert findings[0].content == "ACGTACGTACGTACGTACGT"


def test_case_insensitive_and_u_counts():
    findings = safety.scan_nucleotide_runs("acgu" * 5)
    assert len(findings) == 1
    assert findings[0].content == "ACGU" * 5


def test_digit_breaks_run():
    # U6-style names must not bridge two short runs
    assert safety.scan_nucleotide_runs(("ACGT" * 3) + "9" + ("ACGT" * 3)) == []


def test_threshold_parameter():
    assert len(safety.scan_nucleotide_runs("ACGTACGT", threshold=8)) == 1
    assert safety.scan_nucleotide_runs("ACGTACG", threshold=8) == []
    with pytest.raises(ValueError):
        safety.scan_nucleotide_runs("ACGT", threshold=0)


def test_enforce_outbound_clean_and_blocked():
    assert safety.enforce_outbound("design primers for my experiment").clean
    blocked = safety.enforce_outbound("here it is " + "ACGT" * 6)
    assert not blocked.clean
    assert len(blocked.findings) == 1
    assert "delete" in blocked.user_message


def test_enforce_outbound_two_disjoint_runs_sorted():
    text = "fwd: " + "AC" * 10 + " ; some filler words ; rev: " + "GT" * 12 + " done"
    blocked = safety.enforce_outbound(text)
    assert [f.length for f in blocked.findings] == [20, 24]
    assert blocked.findings[0].start < blocked.findings[1].start


def test_require_clean_raises_with_findings():
    with pytest.raises(FilterBlocked) as err:
        safety.require_clean("x" + "ACGT" * 7)
    assert err.value.findings and err.value.findings[0].length == 28


def test_redact_then_rescan_is_clean():
    text = "keep this 5'-" + "ACGT" * 6 + "-3' plus more words"
    redacted = safety.redact(text)
    assert "ACGT" * 5 not in redacted
    assert "[redacted 24 nt run]" in redacted
    assert safety.scan_nucleotide_runs(redacted) == []
    assert redacted.startswith("keep this ")
    assert redacted.endswith("plus more words")


# ---------------------------------------------------------------------------
# planted-run ground truth

SAFE_LETTERS = "bdefhijklmnopqrsvwxz"


def make_prose(rng: random.Random, words: int) -> str:
    return " ".join(
        "".join(rng.choice(SAFE_LETTERS) for _ in range(rng.randint(2, 9)))
        for _ in range(words)
    )


def plant_runs(rng: random.Random, k: int) -> tuple[str, list[str]]:
    """Text with k nucleotide runs separated by non-nucleotide prose."""
    parts = [make_prose(rng, rng.randint(1, 6))]
    planted = []
    for _ in range(k):
        length = rng.randint(15, 40)
        run = "".join(rng.choice("ACGTU") for _ in range(length))
        planted.append(run)
        if rng.random() < 0.5:
            decorated = "5'-" + "-".join(run[i : i + 4] for i in range(0, len(run), 4)) + "-3'"
        else:
            decorated = run
        parts.append(decorated)
        parts.append(make_prose(rng, rng.randint(1, 6)))
    return " ".join(parts), planted


def test_planted_runs_exact_ground_truth():
    rng = random.Random(7)
    for _ in range(100):
        text, planted = plant_runs(rng, rng.randint(0, 5))
        findings = safety.scan_nucleotide_runs(text)
        expected = [run for run in planted if len(run) >= 20]
        assert [f.content for f in findings] == expected
        assert [f.length for f in findings] == [len(r) for r in expected]


@given(st.integers(min_value=0, max_value=4), st.integers(min_value=0, max_value=2**31))
def test_redaction_idempotent_on_random_plants(k, seed):
    rng = random.Random(seed)
    text, _ = plant_runs(rng, k)
    assert safety.scan_nucleotide_runs(safety.redact(text)) == []


# ---------------------------------------------------------------------------
# organism gate


@pytest.fixture(scope="module")
def gate_config(request):
    from crisprflow.config import PACKAGED_FIXTURES
    return safety.load_safety_config(PACKAGED_FIXTURES / "safety.yaml")


def test_gate_human(gate_config):
    decision = safety.organism_gate("human", gate_config)
    assert decision.require_ack
    assert decision.warning_text
    assert "moratorium" in decision.warning_text or decision.moratorium_reference


def test_gate_mouse_passes(gate_config):
    assert not safety.organism_gate("mouse", gate_config).require_ack


def test_gate_cell_line_synonym(gate_config):
    decision = safety.organism_gate("A375 (human melanoma)", gate_config)
    assert decision.require_ack
    decision = safety.organism_gate("A375", gate_config)
    assert decision.require_ack
    assert decision.matched_term == "a375"


def test_gate_word_boundaries(gate_config):
    # "chuman" or "a3750" must not trigger
    assert not safety.organism_gate("chuman cells", gate_config).require_ack
    assert not safety.organism_gate("a3750 line", gate_config).require_ack


def test_gate_patient_derived(gate_config):
    assert safety.organism_gate("patient-derived organoid", gate_config).require_ack
