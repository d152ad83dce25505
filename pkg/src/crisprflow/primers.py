"""Constraint-based PCR primer design around a target span.

Exhaustive desk-scale search: every window left of the span is a forward
candidate, every reverse-complemented window right of it a reverse
candidate; candidates are filtered one constraint at a time (counting
rejections so an infeasible request can name the binding constraint) and
surviving pairs are ranked by a penalty centered on Tm 60, product 275 and
GC 0.5.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NoPrimersFound, SpanOutOfRange
from .sequences import check_dna, gc_content, max_homopolymer, melting_temp, reverse_complement

MAX_PAIRS = 5

TM_TARGET = 60.0
PRODUCT_TARGET = 275
GC_TARGET = 0.5

TM_WEIGHT = 1.0
PRODUCT_WEIGHT = 0.01
GC_WEIGHT = 10.0


@dataclass(frozen=True)
class PrimerConstraints:
    length_min: int = 18
    length_max: int = 25
    gc_min: float = 0.40
    gc_max: float = 0.60
    tm_min: float = 55.0
    tm_max: float = 65.0
    max_pair_tm_delta: float = 3.0
    product_min: int = 150
    product_max: int = 400
    max_homopolymer: int = 4
    require_unique: bool = True

    def __post_init__(self):
        if not (0 < self.length_min <= self.length_max):
            raise ValueError("length range must be non-empty and ordered")
        if not (0.0 <= self.gc_min <= self.gc_max <= 1.0):
            raise ValueError("GC range must be ordered within [0, 1]")
        if not (self.tm_min <= self.tm_max):
            raise ValueError("Tm range must be ordered")
        if not (0 < self.product_min <= self.product_max):
            raise ValueError("product size range must be non-empty and ordered")
        if self.max_pair_tm_delta < 0 or self.max_homopolymer < 1:
            raise ValueError("bad pair/homopolymer limits")

    def as_dict(self) -> dict:
        return {
            "length": [self.length_min, self.length_max],
            "gc": [self.gc_min, self.gc_max],
            "tm": [self.tm_min, self.tm_max],
            "max_pair_tm_delta": self.max_pair_tm_delta,
            "product_size": [self.product_min, self.product_max],
            "max_homopolymer": self.max_homopolymer,
            "require_unique": self.require_unique,
        }


@dataclass(frozen=True)
class PrimerPair:
    forward: str
    reverse: str
    forward_start: int  # forward-strand coordinates of the binding sites
    forward_end: int
    reverse_start: int
    reverse_end: int
    forward_tm: float
    reverse_tm: float
    forward_gc: float
    reverse_gc: float
    product_size: int
    penalty: float

    def as_dict(self) -> dict:
        return {
            "forward": self.forward,
            "reverse": self.reverse,
            "forward_span": [self.forward_start, self.forward_end],
            "reverse_span": [self.reverse_start, self.reverse_end],
            "forward_tm": self.forward_tm,
            "reverse_tm": self.reverse_tm,
            "forward_gc": round(self.forward_gc, 4),
            "reverse_gc": round(self.reverse_gc, 4),
            "product_size": self.product_size,
            "penalty": round(self.penalty, 4),
        }


@dataclass
class _Candidate:
    seq: str
    start: int
    end: int
    tm: float
    gc: float


def count_overlapping(haystack: str, needle: str) -> int:
    count = 0
    pos = haystack.find(needle)
    while pos != -1:
        count += 1
        pos = haystack.find(needle, pos + 1)
    return count


def _collect_candidates(
    reference: str,
    rc_reference: str,
    region_start: int,
    region_end: int,
    as_reverse: bool,
    constraints: PrimerConstraints,
    rejections: dict[str, int],
) -> list[_Candidate]:
    out: list[_Candidate] = []
    for start in range(region_start, region_end):
        for length in range(constraints.length_min, constraints.length_max + 1):
            end = start + length
            if end > region_end:
                break
            window = reference[start:end]
            seq = reverse_complement(window) if as_reverse else window
            if max_homopolymer(seq) > constraints.max_homopolymer:
                rejections["homopolymer"] += 1
                continue
            gc = gc_content(seq)
            if not (constraints.gc_min <= gc <= constraints.gc_max):
                rejections["gc"] += 1
                continue
            tm = melting_temp(seq)
            if not (constraints.tm_min <= tm <= constraints.tm_max):
                rejections["tm"] += 1
                continue
            if constraints.require_unique:
                occurrences = count_overlapping(reference, seq) + count_overlapping(
                    rc_reference, seq
                )
                if occurrences != 1:
                    rejections["uniqueness"] += 1
                    continue
            out.append(_Candidate(seq=seq, start=start, end=end, tm=tm, gc=gc))
    return out


def design_primers(
    reference: str,
    target_span: tuple[int, int],
    constraints: PrimerConstraints | None = None,
) -> list[PrimerPair]:
    """Design up to five primer pairs flanking ``target_span``.

    Raises :class:`NoPrimersFound` naming the constraint that rejected the
    most candidates when nothing survives, and :class:`SpanOutOfRange` for a
    span outside the reference.
    """
    constraints = constraints or PrimerConstraints()
    reference = reference.upper()
    check_dna(reference, "reference")
    span_start, span_end = target_span
    if not (0 <= span_start < span_end <= len(reference)):
        raise SpanOutOfRange(
            f"target span [{span_start}, {span_end}) outside reference of length {len(reference)}"
        )

    rc_reference = reverse_complement(reference)
    rejections = {"gc": 0, "tm": 0, "homopolymer": 0, "uniqueness": 0}
    pair_rejections = {"product_size": 0, "pair_tm_delta": 0}

    forwards = _collect_candidates(
        reference, rc_reference, 0, span_start, False, constraints, rejections
    )
    reverses = _collect_candidates(
        reference, rc_reference, span_end, len(reference), True, constraints, rejections
    )

    pairs: list[PrimerPair] = []
    for fwd in forwards:
        for rev in reverses:
            product = rev.end - fwd.start
            if not (constraints.product_min <= product <= constraints.product_max):
                pair_rejections["product_size"] += 1
                continue
            if abs(fwd.tm - rev.tm) > constraints.max_pair_tm_delta:
                pair_rejections["pair_tm_delta"] += 1
                continue
            penalty = (
                TM_WEIGHT * (abs(fwd.tm - TM_TARGET) + abs(rev.tm - TM_TARGET))
                + PRODUCT_WEIGHT * abs(product - PRODUCT_TARGET)
                + GC_WEIGHT * (abs(fwd.gc - GC_TARGET) + abs(rev.gc - GC_TARGET))
            )
            pairs.append(
                PrimerPair(
                    forward=fwd.seq,
                    reverse=rev.seq,
                    forward_start=fwd.start,
                    forward_end=fwd.end,
                    reverse_start=rev.start,
                    reverse_end=rev.end,
                    forward_tm=fwd.tm,
                    reverse_tm=rev.tm,
                    forward_gc=fwd.gc,
                    reverse_gc=rev.gc,
                    product_size=product,
                    penalty=penalty,
                )
            )

    if not pairs:
        all_counts = dict(rejections)
        all_counts.update(pair_rejections)
        worst = max(all_counts, key=lambda k: (all_counts[k], k))
        if all_counts[worst] == 0:
            worst = "product_size"  # nothing even to reject: flanks too short
        raise NoPrimersFound(
            f"no primer pairs satisfy the constraints; binding constraint: {worst} "
            f"(rejections: {all_counts})",
            nearest_miss=worst,
        )

    pairs.sort(key=lambda p: (p.penalty, p.forward_start))
    return pairs[:MAX_PAIRS]
