"""Query matching and recommendation over a loaded mined repository.

Matching is tiered: an exact item-name match (respecting the query's kind
hint) beats a simple-name match, which beats a case-insensitive substring
match. Within a tier, higher-scoring patterns come first; exact matches on a
pattern's first element outrank matches buried later in the pattern.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass
from pathlib import Path

from .corpus import Manifest, TermList
from .errors import EmptyQueryError
from .mine import SequencePattern
from .store import CentralDocument, MinedRepository, format_confidence

_FULL_CALL_NAME = re.compile(r"^[\w$.]+\([^()]*\)(:\S+)?$")
_QUALIFIED_NAME = re.compile(r"^[\w$]+(\.[\w$]+)+$")


@dataclass(frozen=True)
class QuerySketch:
    raw: str
    name_fragment: str
    kind_hint: str | None  # "MI", "CI", or None
    exact: bool


def parse_query(raw: str) -> QuerySketch:
    """Normalize a query: strip argument lists, detect call/creation syntax."""
    trimmed = raw.strip()
    if not trimmed:
        raise EmptyQueryError("query is blank")
    kind_hint: str | None = None
    body = trimmed
    if body.startswith("new ") or body == "new":
        kind_hint = "CI"
        body = body[3:].strip()
    elif "(" in body and body.endswith(")"):
        kind_hint = "MI"
    fragment = body.split("(", 1)[0].strip()
    if not fragment:
        raise EmptyQueryError(f"query {raw!r} has no name fragment")
    exact = bool(_FULL_CALL_NAME.match(body) or _QUALIFIED_NAME.match(body))
    return QuerySketch(raw=trimmed, name_fragment=fragment,
                       kind_hint=kind_hint, exact=exact)


def simple_name(item_name: str) -> str:
    """Text after the last dot and before any argument list."""
    head = item_name.split("(", 1)[0]
    return head.rsplit(".", 1)[-1]


def _item_tier(sketch: QuerySketch, kind: str, name: str) -> int:
    if name == sketch.raw or name == sketch.name_fragment:
        if sketch.kind_hint is None or kind == sketch.kind_hint:
            return 3
    if simple_name(name) == sketch.name_fragment:
        return 2
    if sketch.name_fragment.lower() in name.lower():
        return 1
    return 0


@dataclass(frozen=True)
class RecommendationEntry:
    pattern: SequencePattern
    match_strength: int  # 3 exact, 2 simple name, 1 substring
    first_element_match: bool


@dataclass(frozen=True)
class Recommendation:
    query: QuerySketch
    entries: tuple[RecommendationEntry, ...]
    elapsed_ms: float


def match_patterns(
    sketch: QuerySketch, repo: MinedRepository, top_k: int = 10
) -> Recommendation:
    """Rank every pattern containing an item that matches the sketch."""
    if top_k < 1:
        raise ValueError("top_k must be at least 1")
    started = time.perf_counter()
    candidates: list[RecommendationEntry] = []
    for pattern in repo.patterns:
        strength = 0
        first_element = False
        for position, (kind, name) in enumerate(pattern.items):
            tier = _item_tier(sketch, kind, name)
            if tier > strength:
                strength = tier
                first_element = position == 0
        if strength > 0:
            candidates.append(RecommendationEntry(pattern, strength, first_element))
    candidates.sort(
        key=lambda e: (
            -e.match_strength,
            0 if (e.match_strength == 3 and e.first_element_match) else 1,
            -e.pattern.score,
            e.pattern.rank,
        )
    )
    elapsed_ms = (time.perf_counter() - started) * 1000.0
    return Recommendation(
        query=sketch, entries=tuple(candidates[:top_k]), elapsed_ms=elapsed_ms
    )


def suggest_terms(prefix: str, terms: TermList, limit: int = 10) -> list[str]:
    """Case-insensitive prefix completion over the stored trending terms."""
    if limit < 1:
        raise ValueError("limit must be at least 1")
    lowered = prefix.lower()
    hits = [t for t in terms.terms if t.lower().startswith(lowered)]
    return hits[:limit]


# ---------------------------------------------------------------------------
# Code skeletons
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CodeSkeleton:
    unit_path: str
    entity: str
    span: tuple[int, int]
    lines: tuple[str, ...]  # verbatim source lines of the exemplar block
    highlights: tuple[int, ...]  # absolute line numbers carrying pattern items
    header: tuple[str, ...]
    synthetic: bool = False

    def render(self) -> str:
        out = list(self.header)
        highlighted = set(self.highlights)
        for offset, text in enumerate(self.lines):
            number = self.span[0] + offset
            marker = ">>" if number in highlighted else "  "
            out.append(f"{marker} {number:4d} | {text}")
        return "\n".join(out)


def render_pattern_items(pattern: SequencePattern) -> str:
    return " → ".join(f"{kind} {name}" for kind, name in pattern.items)


def _skeleton_header(pattern: SequencePattern, origin: str) -> tuple[str, ...]:
    return (
        f"// pattern: {render_pattern_items(pattern)}",
        f"// score={pattern.score} support={pattern.support} "
        f"confidence={format_confidence(pattern.confidence)} rank={pattern.rank}",
        f"// from {origin}",
    )


def assemble_skeleton(
    pattern: SequencePattern,
    central: CentralDocument,
    exemplar_choice: int = 0,
) -> CodeSkeleton:
    """Load the chosen exemplar's block verbatim and highlight pattern lines.

    Falls back to a synthetic one-line-per-item skeleton when the backing
    source file is no longer readable.
    """
    if not 0 <= exemplar_choice < len(pattern.exemplars):
        raise IndexError(
            f"exemplar index {exemplar_choice} out of range "
            f"({len(pattern.exemplars)} available)"
        )
    exemplar_id = pattern.exemplars[exemplar_choice]
    transaction = None
    for txn in central.transactions:
        if txn.id == exemplar_id:
            transaction = txn
            break
    if transaction is None:
        raise KeyError(f"exemplar transaction {exemplar_id!r} not in central repository")

    wanted = set(pattern.items)
    highlights = tuple(sorted({
        it.line for it in transaction.items if (it.kind, it.name) in wanted
    }))
    text = _load_unit_text(central.manifest, transaction.unit_path)
    if text is None:
        k = pattern.k
        return CodeSkeleton(
            unit_path=transaction.unit_path,
            entity=transaction.entity,
            span=(1, k),
            lines=tuple(f"{kind} {name}" for kind, name in pattern.items),
            highlights=tuple(range(1, k + 1)),
            header=_skeleton_header(pattern, f"{transaction.unit_path} (source unavailable)"),
            synthetic=True,
        )
    all_lines = text.splitlines()
    start, end = transaction.span
    end = min(end, len(all_lines))
    start = max(1, min(start, end if end else 1))
    block = tuple(all_lines[start - 1:end])
    origin = f"{transaction.unit_path}:{start}-{end} ({transaction.entity})"
    return CodeSkeleton(
        unit_path=transaction.unit_path,
        entity=transaction.entity,
        span=(start, end),
        lines=block,
        highlights=tuple(h for h in highlights if start <= h <= end),
        header=_skeleton_header(pattern, origin),
    )


def _load_unit_text(manifest: Manifest, unit_path: str) -> str | None:
    try:
        unit = manifest.unit_by_path(unit_path)
        source = manifest.source_by_id(unit.source_id)
    except KeyError:
        return None
    path = Path(source.root) / unit_path
    try:
        return path.read_text(encoding="utf-8", errors="replace")
    except OSError:
        return None


# ---------------------------------------------------------------------------
# Renderers
# ---------------------------------------------------------------------------

def render_entry_line(entry: RecommendationEntry) -> str:
    """Tab-separated: rank, score, support, confidence, pattern rendering."""
    p = entry.pattern
    return "\t".join([
        str(p.rank), str(p.score), str(p.support),
        format_confidence(p.confidence), render_pattern_items(p),
    ])


def render_recommendation_xml(
    recommendation: Recommendation,
    skeletons: dict[int, CodeSkeleton] | None = None,
) -> bytes:
    """Optional XML rendering: mined-pattern elements plus skeleton lines."""
    from .store import _esc_attr, _esc_text  # shared escaping rules

    lines = ['<?xml version="1.0" encoding="UTF-8"?>']
    query = _esc_attr(recommendation.query.raw)
    count = len(recommendation.entries)
    if not recommendation.entries:
        lines.append(f'<recommendation query="{query}" count="0"/>')
        return ("\n".join(lines) + "\n").encode("utf-8")
    lines.append(f'<recommendation query="{query}" count="{count}">')
    for entry in recommendation.entries:
        p = entry.pattern
        lines.append(
            f'  <pattern k="{p.k}" support="{p.support}" '
            f'confidence="{format_confidence(p.confidence)}" score="{p.score}" '
            f'rank="{p.rank}" strength="{entry.match_strength}">'
        )
        for kind, name in p.items:
            lines.append(f'    <item kind="{_esc_attr(kind)}" name="{_esc_attr(name)}"/>')
        skeleton = (skeletons or {}).get(p.rank)
        if skeleton is not None:
            lines.append(
                f'    <skeleton unit="{_esc_attr(skeleton.unit_path)}" '
                f'entity="{_esc_attr(skeleton.entity)}" '
                f'start="{skeleton.span[0]}" end="{skeleton.span[1]}">'
            )
            highlighted = set(skeleton.highlights)
            for offset, text in enumerate(skeleton.lines):
                number = skeleton.span[0] + offset
                hl = "1" if number in highlighted else "0"
                lines.append(f'      <line no="{number}" hl="{hl}">{_esc_text(text)}</line>')
            lines.append("    </skeleton>")
        lines.append("  </pattern>")
    lines.append("</recommendation>")
    return ("\n".join(lines) + "\n").encode("utf-8")
