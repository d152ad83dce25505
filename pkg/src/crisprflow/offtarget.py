"""PAM-aware mismatch scanning of guide spacers against reference sequences.

Pure Hamming matching (no bulges). The scan prefilters candidate sites by
PAM pattern (IUPAC-aware, on the configured side of the protospacer) and
only then counts mismatches, on both strands. Coordinates always refer to
the forward strand of the reference, 0-based.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .sequences import check_dna, reverse_complement

SPACER_MIN_LEN = 18
SPACER_MAX_LEN = 25
MAX_MISMATCH_LIMIT = 6

IUPAC = {
    "A": "A",
    "C": "C",
    "G": "G",
    "T": "T",
    "R": "AG",
    "Y": "CT",
    "S": "CG",
    "W": "AT",
    "K": "GT",
    "M": "AC",
    "B": "CGT",
    "D": "AGT",
    "H": "ACT",
    "V": "ACG",
    "N": "ACGT",
}

PAM_SIDES = ("three_prime", "five_prime")


@dataclass(frozen=True)
class PamRule:
    """IUPAC PAM pattern plus which side of the protospacer it sits on."""

    pattern: str
    side: str

    def __post_init__(self):
        if not self.pattern:
            raise ValueError("PAM pattern must be non-empty")
        for ch in self.pattern:
            if ch not in IUPAC:
                raise ValueError(f"invalid IUPAC code {ch!r} in PAM pattern")
        if self.side not in PAM_SIDES:
            raise ValueError(f"PAM side must be one of {PAM_SIDES}, got {self.side!r}")

    def regex(self) -> re.Pattern:
        body = "".join(ch if len(IUPAC[ch]) == 1 else f"[{IUPAC[ch]}]" for ch in self.pattern)
        # lookahead so overlapping PAM sites are all found
        return re.compile(f"(?=({body}))")

    def matches(self, site: str) -> bool:
        return len(site) == len(self.pattern) and all(
            base in IUPAC[code] for code, base in zip(self.pattern, site)
        )

    def as_dict(self) -> dict:
        return {"pattern": self.pattern, "side": self.side}


# Shipped defaults; rules are data, anything IUPAC works.
CAS9_NGG = PamRule("NGG", "three_prime")
CAS12A_TTTV = PamRule("TTTV", "five_prime")

PAM_PRESETS = {
    "SpCas9": CAS9_NGG,
    "Cas9": CAS9_NGG,
    "AsCas12a": CAS12A_TTTV,
    "Cas12a": CAS12A_TTTV,
}


@dataclass(frozen=True)
class OffTargetHit:
    reference: str
    start: int  # forward-strand coordinate of the protospacer window
    strand: str  # "+" or "-"
    mismatches: int
    protospacer: str  # in guide orientation
    pam: str  # observed PAM, in guide orientation

    def key(self) -> tuple:
        return (self.reference, self.start, self.strand)

    def as_dict(self) -> dict:
        return {
            "reference": self.reference,
            "start": self.start,
            "strand": self.strand,
            "mismatches": self.mismatches,
            "protospacer": self.protospacer,
            "pam": self.pam,
        }


@dataclass
class OffTargetReport:
    spacer: str
    pam_rule: PamRule
    max_mismatches: int
    hits: list[OffTargetHit] = field(default_factory=list)
    skipped: list[dict] = field(default_factory=list)

    def counts_by_mismatch(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for hit in self.hits:
            counts[hit.mismatches] = counts.get(hit.mismatches, 0) + 1
        return dict(sorted(counts.items()))

    def as_dict(self) -> dict:
        return {
            "spacer": self.spacer,
            "pam_rule": self.pam_rule.as_dict(),
            "max_mismatches": self.max_mismatches,
            "hit_count": len(self.hits),
            "counts_by_mismatch": {str(k): v for k, v in self.counts_by_mismatch().items()},
            "hits": [h.as_dict() for h in self.hits],
            "skipped": list(self.skipped),
        }


def _hamming_within(a: str, b: str, limit: int) -> int:
    """Mismatch count, or limit+1 as soon as it exceeds the limit."""
    mism = 0
    for x, y in zip(a, b):
        if x != y:
            mism += 1
            if mism > limit:
                return mism
    return mism


def _scan_oriented(
    seq: str, spacer: str, max_mismatches: int, rule: PamRule
) -> list[tuple[int, int, str, str]]:
    """Hits on one orientation of a reference: (window_start, mismatches, window, pam)."""
    hits = []
    span = len(spacer)
    plen = len(rule.pattern)
    n = len(seq)
    for m in rule.regex().finditer(seq):
        pam_pos = m.start()
        if rule.side == "three_prime":
            start = pam_pos - span
            if start < 0:
                continue
        else:
            start = pam_pos + plen
            if start + span > n:
                continue
        window = seq[start : start + span]
        mism = _hamming_within(spacer, window, max_mismatches)
        if mism <= max_mismatches:
            hits.append((start, mism, window, m.group(1)))
    return hits


def off_target_search(
    spacer: str,
    references: dict[str, str],
    max_mismatches: int,
    pam_rule: PamRule,
) -> OffTargetReport:
    """Scan every reference (both strands) for PAM-adjacent near matches.

    Hits are sorted by (reference, position, strand); references shorter than
    the protospacer window are skipped with a notice rather than an error.
    """
    spacer = spacer.upper()
    check_dna(spacer, "spacer")
    if not (SPACER_MIN_LEN <= len(spacer) <= SPACER_MAX_LEN):
        raise ValueError(
            f"spacer length {len(spacer)} outside [{SPACER_MIN_LEN}, {SPACER_MAX_LEN}]"
        )
    if not (0 <= max_mismatches <= MAX_MISMATCH_LIMIT):
        raise ValueError(f"max_mismatches must be in 0..{MAX_MISMATCH_LIMIT}")

    report = OffTargetReport(spacer=spacer, pam_rule=pam_rule, max_mismatches=max_mismatches)
    for ref_id, seq in references.items():
        seq = seq.upper()
        check_dna(seq, f"reference {ref_id!r}")
        if len(seq) < len(spacer):
            report.skipped.append(
                {"reference": ref_id, "reason": "window longer than reference"}
            )
            continue
        n = len(seq)
        span = len(spacer)
        for start, mism, window, pam in _scan_oriented(seq, spacer, max_mismatches, pam_rule):
            report.hits.append(OffTargetHit(ref_id, start, "+", mism, window, pam))
        rc = reverse_complement(seq)
        for start_rc, mism, window, pam in _scan_oriented(rc, spacer, max_mismatches, pam_rule):
            fwd_start = n - start_rc - span
            report.hits.append(OffTargetHit(ref_id, fwd_start, "-", mism, window, pam))
    report.hits.sort(key=OffTargetHit.key)
    return report
