"""Primer design re-validated by an independent constraint checker."""

from __future__ import annotations

import random

import pytest

from crisprflow.errors import NoPrimersFound, SpanOutOfRange
from crisprflow.primers import PrimerConstraints, design_primers

from .oracles import DEFAULT_CONSTRAINT_DICT, check_pair, feasible_pair_exists


def balanced_dna(rng: random.Random, n: int, max_run: int = 4) -> str:
    out = []
    while len(out) < n:
        base = rng.choice("ACGT")
        if len(out) >= max_run and all(c == base for c in out[-max_run:]):
            continue
        out.append(base)
    return "".join(out)


def test_balanced_reference_yields_checked_pairs():
    rng = random.Random(101)
    ref = balanced_dna(rng, 600)
    span = (280, 320)
    pairs = design_primers(ref, span)
    assert 1 <= len(pairs) <= 5
    for pair in pairs:
        problems = check_pair(pair.as_dict(), ref, span, DEFAULT_CONSTRAINT_DICT)
        assert problems == [], problems


def test_sorted_by_penalty_then_position():
    rng = random.Random(102)
    ref = balanced_dna(rng, 700)
    pairs = design_primers(ref, (330, 370))
    keys = [(p.penalty, p.forward_start) for p in pairs]
    assert keys == sorted(keys)


def test_penalty_recomputes():
    rng = random.Random(103)
    ref = balanced_dna(rng, 600)
    for pair in design_primers(ref, (280, 320)):
        expected = (
            abs(pair.forward_tm - 60) + abs(pair.reverse_tm - 60)
            + 0.01 * abs(pair.product_size - 275)
            + 10 * (abs(pair.forward_gc - 0.5) + abs(pair.reverse_gc - 0.5))
        )
        assert pair.penalty == pytest.approx(expected)


def test_infeasible_short_reference():
    rng = random.Random(104)
    ref = balanced_dna(rng, 60)
    with pytest.raises(NoPrimersFound):
        design_primers(ref, (5, 25))


def test_polya_flanks_name_homopolymer():
    rng = random.Random(105)
    middle = balanced_dna(rng, 100)
    ref = "A" * 250 + middle + "A" * 250
    with pytest.raises(NoPrimersFound) as err:
        design_primers(ref, (260, 340))
    assert err.value.nearest_miss == "homopolymer"
    assert "homopolymer" in str(err.value)


def test_span_out_of_range():
    with pytest.raises(SpanOutOfRange):
        design_primers("ACGT" * 100, (390, 410))
    with pytest.raises(SpanOutOfRange):
        design_primers("ACGT" * 100, (-5, 20))


def test_constraints_validation():
    with pytest.raises(ValueError):
        PrimerConstraints(length_min=0)
    with pytest.raises(ValueError):
        PrimerConstraints(gc_min=0.7, gc_max=0.3)
    with pytest.raises(ValueError):
        PrimerConstraints(product_min=400, product_max=150)


def test_feasibility_agreement_small_scale():
    """Whenever the exhaustive oracle finds a pair, design_primers finds one."""
    rng = random.Random(106)
    agreements = 0
    feasible = 0
    for _ in range(10):
        ref = balanced_dna(rng, rng.randint(420, 620))
        mid = len(ref) // 2
        span = (mid - 20, mid + 20)
        oracle_says = feasible_pair_exists(ref, span, DEFAULT_CONSTRAINT_DICT)
        try:
            pairs = design_primers(ref, span)
            designed = len(pairs) > 0
        except NoPrimersFound:
            designed = False
        if oracle_says:
            feasible += 1
            if designed:
                agreements += 1
        else:
            assert not designed  # never invent a pair the oracle rules out
    assert feasible > 0
    assert agreements == feasible
