#!/usr/bin/env python3
"""Regenerate the synthetic guide library and reference FASTA fixtures.

Deterministic (fixed seed). Each human gene gets a ~700 bp locus with its
four knockout spacers planted behind a TTTC PAM (Cas12a-style, 5') so that
off-target scans find the on-target sites and primer design around the
planted cluster is feasible; feasibility is verified with the package's own
primer designer before a locus is accepted. A decoy record carries near-miss
copies of the TGFBR1 rank-1 spacer for non-trivial mismatch counts.
"""

from __future__ import annotations

import random
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from crisprflow.primers import PrimerConstraints, design_primers  # noqa: E402
from crisprflow.errors import NoPrimersFound  # noqa: E402

SEED = 20240601
FIXTURES = ROOT / "src" / "crisprflow" / "fixtures"

HUMAN_LOCUS_GENES = ["TGFBR1", "SNAI1", "BAX", "BCL2L1", "EGFR"]
EXTRA_MODALITY_GENES = ["TGFBR1", "EGFR"]

SPACER_LEN = 20
LOCUS_LEN = 700
CLUSTER_AT = 300


def random_dna(rng: random.Random, length: int, max_run: int = 4) -> str:
    out: list[str] = []
    while len(out) < length:
        base = rng.choice("ACGT")
        if len(out) >= max_run and all(c == base for c in out[-max_run:]):
            continue
        out.append(base)
    return "".join(out)


def mutate(rng: random.Random, seq: str, n: int) -> str:
    positions = rng.sample(range(len(seq)), n)
    chars = list(seq)
    for pos in positions:
        chars[pos] = rng.choice([b for b in "ACGT" if b != chars[pos]])
    return "".join(chars)


def build_locus(rng: random.Random, spacers: list[str]) -> tuple[str, tuple[int, int]]:
    """Locus with planted TTTC+spacer blocks; returns sequence and guide span."""
    while True:
        left = random_dna(rng, CLUSTER_AT)
        blocks = []
        for i, spacer in enumerate(spacers):
            blocks.append("TTTC" + spacer)
            if i < len(spacers) - 1:
                blocks.append(random_dna(rng, 5))
        cluster = "".join(blocks)
        right = random_dna(rng, LOCUS_LEN - CLUSTER_AT - len(cluster))
        locus = left + cluster + right
        first = locus.find(spacers[0])
        last = locus.find(spacers[-1]) + len(spacers[-1])
        span = (max(0, first - 10), min(len(locus), last + 10))
        if any(locus.count(s) != 1 for s in spacers):
            continue
        try:
            pairs = design_primers(locus, span, PrimerConstraints())
        except NoPrimersFound:
            continue
        if pairs:
            return locus, span


def main() -> None:
    rng = random.Random(SEED)
    rows: list[tuple[str, str, str, str, str, int, str]] = []
    references: dict[str, str] = {}

    spacers_by_gene: dict[str, list[str]] = {}
    for gene in HUMAN_LOCUS_GENES:
        spacers = []
        while len(spacers) < 4:
            s = random_dna(rng, SPACER_LEN)
            if s not in spacers:
                spacers.append(s)
        spacers_by_gene[gene] = spacers
        for rank, spacer in enumerate(spacers, start=1):
            rows.append(("human", gene, "knockout", spacer, "TTTV", rank, "fixture_library_v1"))
        locus, _span = build_locus(rng, spacers)
        references[f"{gene}_locus"] = locus

    for gene in EXTRA_MODALITY_GENES:
        for modality in ("activation", "interference", "base_editing", "prime_editing"):
            for rank in range(1, 5):
                rows.append(
                    ("human", gene, modality, random_dna(rng, SPACER_LEN), "NGG", rank,
                     "fixture_library_v1")
                )

    # knockout-only entries without a reference locus (forces the manual
    # region path in primer design)
    for rank in range(1, 5):
        rows.append(("human", "EMX1", "knockout", random_dna(rng, SPACER_LEN), "NGG", rank,
                     "fixture_library_v1"))
    for rank in range(1, 5):
        rows.append(("mouse", "TRP53", "knockout", random_dna(rng, SPACER_LEN), "TTTV", rank,
                     "fixture_library_v1"))

    # decoy with near-miss sites for the TGFBR1 rank-1 spacer
    anchor = spacers_by_gene["TGFBR1"][0]
    decoy = (
        random_dna(rng, 200)
        + "TTTC" + mutate(rng, anchor, 2)
        + random_dna(rng, 150)
        + mutate(rng, anchor, 1) + "TGG"
        + random_dna(rng, 200)
    )
    references["decoy_alpha"] = decoy
    references["decoy_beta"] = random_dna(rng, 600)

    library_path = FIXTURES / "guide_library.tsv"
    lines = ["\t".join(("species", "gene", "modality", "spacer", "pam", "rank", "source"))]
    for row in rows:
        lines.append("\t".join(str(x) for x in row))
    library_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    fasta_path = FIXTURES / "references.fa"
    chunks = []
    for record_id, seq in references.items():
        chunks.append(f">{record_id}")
        for i in range(0, len(seq), 70):
            chunks.append(seq[i : i + 70])
    fasta_path.write_text("\n".join(chunks) + "\n", encoding="utf-8")

    print(f"wrote {library_path} ({len(rows)} rows)")
    print(f"wrote {fasta_path} ({len(references)} records)")


if __name__ == "__main__":
    main()
