"""Guide-library ingestion and ranked lookup.

The library is a TSV of pre-designed guides (spacer + PAM pattern + rank)
grouped by (species, gene, modality). Ranks come with the library; nothing
is scored here.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import AlphabetError, DuplicateRecord, GeneNotFound, ParseError, RankGapError

MODALITIES = ("knockout", "activation", "interference", "base_editing", "prime_editing")

HEADER = ("species", "gene", "modality", "spacer", "pam", "rank", "source")

SPACER_MIN_LEN = 18
SPACER_MAX_LEN = 25

_DNA = frozenset("ACGT")


@dataclass(frozen=True)
class GuideRecord:
    species: str
    gene: str
    modality: str
    spacer: str
    pam: str
    rank: int
    source: str

    def as_dict(self) -> dict:
        return {
            "species": self.species,
            "gene": self.gene,
            "modality": self.modality,
            "spacer": self.spacer,
            "pam": self.pam,
            "rank": self.rank,
            "source": self.source,
        }


@dataclass(frozen=True)
class LookupResult:
    records: list[GuideRecord]
    shortfall: str | None = None


class GuideLibrary:
    """Validated, rank-ordered guide groups keyed by (species, gene, modality)."""

    def __init__(self, groups: dict[tuple[str, str, str], list[GuideRecord]]):
        self._groups = groups

    def __len__(self) -> int:
        return sum(len(v) for v in self._groups.values())

    @property
    def groups(self) -> dict[tuple[str, str, str], list[GuideRecord]]:
        return self._groups

    def genes(self, species: str | None = None) -> list[str]:
        names = {
            key[1]
            for key in self._groups
            if species is None or key[0] == species.lower()
        }
        return sorted(names)

    def species(self) -> list[str]:
        return sorted({key[0] for key in self._groups})

    def lookup(self, species: str, gene: str, modality: str, n: int = 4) -> LookupResult:
        if n < 1:
            raise ValueError("n must be >= 1")
        key = (species.lower(), gene.upper(), modality.lower())
        group = self._groups.get(key)
        if not group:
            raise GeneNotFound(key[0], key[1], key[2])
        records = group[:n]
        shortfall = None
        if len(records) < n:
            shortfall = (
                f"requested {n} guides for {key[1]} ({key[0]}, {key[2]}) "
                f"but the library holds only {len(records)}"
            )
        return LookupResult(records=records, shortfall=shortfall)


def parse_library(text: str, source: str = "<library>") -> GuideLibrary:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError(f"{source}: empty file (header required)")
    header = tuple(lines[0].rstrip("\r").split("\t"))
    if header != HEADER:
        raise ParseError(f"{source}: bad header {header!r}, expected {HEADER!r}")

    groups: dict[tuple[str, str, str], list[GuideRecord]] = {}
    seen: set[tuple[str, str, str, str]] = set()
    for line_no, raw in enumerate(lines[1:], start=2):
        line = raw.rstrip("\r")
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) != len(HEADER):
            raise ParseError(f"{source} line {line_no}: expected {len(HEADER)} columns, got {len(cols)}")
        species, gene, modality, spacer, pam, rank_text, src = cols
        species = species.strip().lower()
        gene = gene.strip().upper()
        modality = modality.strip().lower()
        spacer = spacer.strip().upper()
        if modality not in MODALITIES:
            raise ParseError(f"{source} line {line_no}: unknown modality {modality!r}")
        if not (SPACER_MIN_LEN <= len(spacer) <= SPACER_MAX_LEN):
            raise ParseError(
                f"{source} line {line_no}: spacer length {len(spacer)} outside "
                f"[{SPACER_MIN_LEN}, {SPACER_MAX_LEN}]"
            )
        for ch in spacer:
            if ch not in _DNA:
                raise AlphabetError(f"{source} line {line_no}: spacer has non-ACGT symbol {ch!r}")
        try:
            rank = int(rank_text)
        except ValueError:
            raise ParseError(f"{source} line {line_no}: rank {rank_text!r} is not an integer") from None
        if rank < 1:
            raise ParseError(f"{source} line {line_no}: rank must be positive, got {rank}")
        dup_key = (species, gene, modality, spacer)
        if dup_key in seen:
            raise DuplicateRecord(f"{source} line {line_no}: duplicate guide {dup_key!r}")
        seen.add(dup_key)
        record = GuideRecord(species, gene, modality, spacer, pam.strip().upper(), rank, src.strip())
        groups.setdefault((species, gene, modality), []).append(record)

    for key, records in groups.items():
        records.sort(key=lambda r: r.rank)
        ranks = [r.rank for r in records]
        if ranks != list(range(1, len(ranks) + 1)):
            raise RankGapError(f"{source}: group {key!r} ranks {ranks} are not 1..{len(ranks)} without gaps")
    return GuideLibrary(groups)


def ingest_library(path: str | Path) -> GuideLibrary:
    p = Path(path)
    return parse_library(p.read_text(encoding="utf-8"), source=str(p))


def lookup_guides(
    library: GuideLibrary, species: str, gene: str, modality: str, n: int = 4
) -> LookupResult:
    return library.lookup(species, gene, modality, n)
