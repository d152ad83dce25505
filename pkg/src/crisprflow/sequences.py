"""Core DNA sequence operations and FASTA ingestion."""

from __future__ import annotations

from pathlib import Path

from .errors import AlphabetError, ParseError, TooLongForWallace

_COMPLEMENT = str.maketrans("ACGT", "TGCA")
_DNA = frozenset("ACGT")

WALLACE_MAX_LEN = 30


def check_dna(sequence: str, context: str = "sequence") -> str:
    """Validate an uppercase A/C/G/T string, reporting the first bad position."""
    if not sequence:
        raise AlphabetError(f"{context} is empty")
    for pos, ch in enumerate(sequence):
        if ch not in _DNA:
            raise AlphabetError(f"{context} has non-ACGT symbol {ch!r} at position {pos}")
    return sequence


def normalize_dna(sequence: str, context: str = "sequence") -> str:
    """Uppercase and validate user-entered DNA, ignoring internal whitespace."""
    cleaned = "".join(sequence.split()).upper()
    return check_dna(cleaned, context)


def reverse_complement(sequence: str) -> str:
    check_dna(sequence)
    return sequence.translate(_COMPLEMENT)[::-1]


def gc_content(sequence: str) -> float:
    check_dna(sequence)
    return (sequence.count("G") + sequence.count("C")) / len(sequence)


def melting_temp(sequence: str) -> float:
    """Wallace rule: 2(A+T) + 4(G+C). Only meaningful for short oligos."""
    check_dna(sequence)
    if len(sequence) > WALLACE_MAX_LEN:
        raise TooLongForWallace(
            f"Wallace rule needs length <= {WALLACE_MAX_LEN}, got {len(sequence)}"
        )
    at = sequence.count("A") + sequence.count("T")
    gc = sequence.count("G") + sequence.count("C")
    return float(2 * at + 4 * gc)


def max_homopolymer(sequence: str) -> int:
    """Length of the longest single-base run."""
    best = 0
    run = 0
    prev = ""
    for ch in sequence:
        run = run + 1 if ch == prev else 1
        prev = ch
        if run > best:
            best = run
    return best


def parse_fasta(text: str, source: str = "<fasta>") -> dict[str, str]:
    """Parse a multi-record FASTA into {record_id: uppercase sequence}.

    Sequences are uppercased on load; any non-ACGT base is rejected with its
    record and position.
    """
    records: dict[str, str] = {}
    current_id: str | None = None
    chunks: list[str] = []

    def close() -> None:
        nonlocal current_id, chunks
        if current_id is None:
            return
        seq = "".join(chunks).upper()
        if not seq:
            raise ParseError(f"{source}: record {current_id!r} has no sequence")
        for pos, ch in enumerate(seq):
            if ch not in _DNA:
                raise AlphabetError(
                    f"{source}: record {current_id!r} has non-ACGT base {ch!r} at position {pos}"
                )
        if current_id in records:
            raise ParseError(f"{source}: duplicate record id {current_id!r}")
        records[current_id] = seq
        current_id = None
        chunks = []

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith(">"):
            close()
            current_id = line[1:].split()[0] if len(line) > 1 else ""
            if not current_id:
                raise ParseError(f"{source}: empty record id on line {line_no}")
            chunks = []
        else:
            if current_id is None:
                raise ParseError(f"{source}: sequence before any header on line {line_no}")
            chunks.append(line)
    close()
    return records


def load_fasta(path: str | Path) -> dict[str, str]:
    p = Path(path)
    return parse_fasta(p.read_text(encoding="utf-8"), source=str(p))
