"""Tool provider: the operations workflow states can bind to.

Each tool returns named outputs plus an outcome label for transition
branching, a user-facing ``display`` text (may contain sequences) and a
``summary`` that is safe to hand to a language model: summaries carry
counts, ranks, positions and names, never raw nucleotide sequences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import CrisprFlowError, GeneNotFound, NoPrimersFound, ToolFailure
from .library import GuideLibrary
from .offtarget import PAM_PRESETS, CAS9_NGG, off_target_search
from .primers import PrimerConstraints, design_primers
from .sequences import reverse_complement


@dataclass
class ToolResult:
    outputs: dict
    outcome: str = "done"
    summary: str = ""
    display: str = ""

    def record(self) -> dict:
        """Structured result stored on the interaction turn."""
        return {"outcome": self.outcome, "summary": self.summary, "outputs": self.outputs}


@dataclass
class ProtocolBook:
    """Protocol recommendations keyed by (scenario, delivery method)."""

    entries: list[dict] = field(default_factory=list)
    defaults: dict[str, dict] = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | Path) -> "ProtocolBook":
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        return cls(entries=data.get("protocols", []), defaults=data.get("defaults", {}))

    def recommend(self, scenario: str, delivery: str | None, cas_system: str | None) -> dict:
        for entry in self.entries:
            if entry.get("scenario") != scenario:
                continue
            if delivery and entry.get("delivery") and entry["delivery"] != delivery:
                continue
            if entry.get("cas_system") and entry["cas_system"] != cas_system:
                continue
            return {k: v for k, v in entry.items() if k not in ("scenario",)}
        default = self.defaults.get(scenario)
        if default:
            return dict(default)
        return {
            "name": f"General {scenario} protocol",
            "citation": "laboratory standard operating procedure",
        }


class ToolProvider:
    """Bundles the guide library, reference set and protocol book."""

    def __init__(
        self,
        library: GuideLibrary,
        references: dict[str, str],
        protocols: ProtocolBook | None = None,
        default_max_mismatches: int = 3,
    ):
        self.library = library
        self.references = dict(references)
        self.protocols = protocols or ProtocolBook()
        self.default_max_mismatches = default_max_mismatches

    # outcome labels per tool, consumed by workflow validation
    def outcomes(self) -> dict[str, tuple[str, ...]]:
        return {
            "lookup_guides": ("ok",),
            "off_target_scan": ("ok",),
            "recommend_protocol": ("ok",),
            "locate_target": ("located", "not_found"),
            "design_validation_primers": ("ok", "no_primers"),
            "artifact_present": ("present", "missing"),
        }

    def call(self, name: str, args: dict) -> ToolResult:
        handler = getattr(self, f"_tool_{name}", None)
        if handler is None:
            raise ToolFailure(f"unknown tool {name!r}")
        try:
            return handler(**args)
        except ToolFailure:
            raise
        except CrisprFlowError as exc:
            raise ToolFailure(f"{name}: {exc}") from exc
        except TypeError as exc:
            raise ToolFailure(f"{name}: bad arguments: {exc}") from exc

    # ------------------------------------------------------------------
    def _tool_artifact_present(self, value=None) -> ToolResult:
        present = bool(value)
        return ToolResult(
            outputs={},
            outcome="present" if present else "missing",
            summary="required input already available" if present else "required input missing",
        )

    def _tool_lookup_guides(self, species: str, gene: str, modality: str, n: int = 4) -> ToolResult:
        try:
            result = self.library.lookup(species, gene, modality, n)
        except GeneNotFound as exc:
            raise ToolFailure(str(exc)) from exc
        records = [r.as_dict() for r in result.records]
        lines = [
            f"rank {r['rank']}: {r['spacer']} (PAM {r['pam']}, source {r['source']})"
            for r in records
        ]
        display = f"Pre-designed {modality} guides for {gene.upper()} ({species}):\n" + "\n".join(lines)
        if result.shortfall:
            display += f"\nNote: {result.shortfall}"
        summary = (
            f"retrieved {len(records)} {modality} guide(s) for {gene.upper()} ({species}), "
            f"ranks 1-{len(records)}"
        )
        if result.shortfall:
            summary += " (fewer than requested)"
        return ToolResult(
            outputs={"records": records, "shortfall": result.shortfall},
            outcome="ok",
            summary=summary,
            display=display,
        )

    def _tool_off_target_scan(
        self,
        guides=None,
        query_spacer: str | None = None,
        max_mismatches: int | None = None,
        cas_system: str | None = None,
    ) -> ToolResult:
        spacers: list[str] = []
        if guides:
            spacers = [g["spacer"] for g in guides]
        elif query_spacer:
            spacers = ["".join(str(query_spacer).split()).upper()]
        if not spacers:
            raise ToolFailure("off_target_scan needs designed guides or a query spacer")
        mm = self.default_max_mismatches if max_mismatches is None else int(max_mismatches)
        rule = PAM_PRESETS.get(cas_system or "", CAS9_NGG)
        per_spacer = []
        summary_bits = []
        for spacer in spacers:
            report = off_target_search(spacer, self.references, mm, rule)
            counts = report.counts_by_mismatch()
            per_spacer.append(report.as_dict())
            perfect = counts.get(0, 0)
            near = sum(v for k, v in counts.items() if k > 0)
            summary_bits.append(f"{perfect} exact / {near} near site(s)")
        display_lines = [
            f"Off-target scan (PAM {rule.pattern} {rule.side.replace('_', ' ')}, "
            f"<= {mm} mismatches) over {len(self.references)} reference record(s):"
        ]
        for spacer, rep in zip(spacers, per_spacer):
            display_lines.append(f"- {spacer}: {rep['hit_count']} hit(s)")
            for hit in rep["hits"]:
                display_lines.append(
                    f"    {hit['reference']}:{hit['start']}({hit['strand']}) "
                    f"{hit['mismatches']} mismatch(es)"
                )
        summary = (
            f"off-target scan of {len(spacers)} guide(s) with PAM {rule.pattern}: "
            + "; ".join(
                f"guide {i + 1}: {bit}" for i, bit in enumerate(summary_bits)
            )
        )
        return ToolResult(
            outputs={
                "report": {
                    "pam_rule": rule.as_dict(),
                    "max_mismatches": mm,
                    "per_spacer": per_spacer,
                }
            },
            outcome="ok",
            summary=summary,
            display="\n".join(display_lines),
        )

    def _tool_recommend_protocol(
        self,
        scenario: str,
        delivery_method: str | None = None,
        cas_system: str | None = None,
    ) -> ToolResult:
        protocol = self.protocols.recommend(scenario, delivery_method, cas_system)
        summary = f"recommended protocol: {protocol.get('name')} ({protocol.get('citation')})"
        display = (
            f"Recommended protocol: {protocol.get('name')}\n"
            f"Reference: {protocol.get('citation')}"
        )
        if protocol.get("notes"):
            display += f"\nNotes: {protocol['notes']}"
        return ToolResult(
            outputs={"protocol": protocol}, outcome="ok", summary=summary, display=display
        )

    def _tool_locate_target(self, gene: str | None = None, guides=None) -> ToolResult:
        """Find the fixture locus for a gene and the span its guides cover."""
        if not gene:
            return ToolResult(outputs={}, outcome="not_found", summary="no gene to locate")
        record_id = f"{gene.upper()}_locus"
        seq = self.references.get(record_id)
        if seq is None:
            return ToolResult(
                outputs={},
                outcome="not_found",
                summary=f"no reference record for {gene.upper()}",
            )
        positions: list[tuple[int, int]] = []
        for g in guides or []:
            spacer = g["spacer"]
            for probe in (spacer, reverse_complement(spacer)):
                pos = seq.find(probe)
                if pos != -1:
                    positions.append((pos, pos + len(probe)))
        if positions:
            span_start = max(0, min(p[0] for p in positions) - 10)
            span_end = min(len(seq), max(p[1] for p in positions) + 10)
        else:
            mid = len(seq) // 2
            span_start, span_end = mid - 20, mid + 20
        return ToolResult(
            outputs={
                "record_id": record_id,
                "span": [span_start, span_end],
                "region_length": len(seq),
            },
            outcome="located",
            summary=(
                f"target region located on {record_id} at [{span_start}, {span_end}) "
                f"of {len(seq)} bp"
            ),
            display=(
                f"Edit site located on reference {record_id}: span [{span_start}, {span_end}) "
                f"within a {len(seq)} bp locus."
            ),
        )

    def _tool_design_validation_primers(
        self,
        record_id: str | None = None,
        span=None,
        region: str | None = None,
        method: str = "NGS",
    ) -> ToolResult:
        if region:
            reference = "".join(str(region).split()).upper()
            mid = len(reference) // 2
            target = (max(0, mid - 20), min(len(reference), mid + 20))
        elif record_id and span:
            reference = self.references.get(record_id)
            if reference is None:
                raise ToolFailure(f"unknown reference record {record_id!r}")
            target = (int(span[0]), int(span[1]))
        else:
            raise ToolFailure("design_validation_primers needs a located span or a pasted region")
        try:
            pairs = design_primers(reference, target, PrimerConstraints())
        except NoPrimersFound as exc:
            return ToolResult(
                outputs={"nearest_miss": exc.nearest_miss},
                outcome="no_primers",
                summary=f"no valid primer pairs; binding constraint: {exc.nearest_miss}",
                display=str(exc),
            )
        pair_dicts = [p.as_dict() for p in pairs]
        best = pair_dicts[0]
        display_lines = [f"Validation primers ({method}):"]
        for i, p in enumerate(pair_dicts, start=1):
            display_lines.append(
                f"pair {i}: F {p['forward']} (Tm {p['forward_tm']:.0f}) / "
                f"R {p['reverse']} (Tm {p['reverse_tm']:.0f}), "
                f"product {p['product_size']} bp, penalty {p['penalty']}"
            )
        summary = (
            f"designed {len(pair_dicts)} primer pair(s) for {method}; best: product "
            f"{best['product_size']} bp, Tm {best['forward_tm']:.0f}/{best['reverse_tm']:.0f}, "
            f"penalty {best['penalty']}"
        )
        return ToolResult(
            outputs={"pairs": pair_dicts, "method": method},
            outcome="ok",
            summary=summary,
            display="\n".join(display_lines),
        )
