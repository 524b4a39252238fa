"""Persistence: the central repository and the mined repository as XML.

Writing is canonical: fixed attribute order, fixed two-space indentation,
sorted element order, LF endings. Reading is strict: unknown elements or
attributes are rejected, as is any document violating the stored invariants
(score law, rank contiguity). write -> read -> write is byte-identical.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import datetime, timezone

from .abstract import ITEM_KINDS, Item, Transaction
from .corpus import Manifest, SourceDescriptor, TermList, UnitSummary
from .errors import (
    ConsistencyError,
    CorruptRepositoryError,
    SchemaVersionError,
    XmlFormatError,
)
from .mine import MiningConfig, SequencePattern

SCHEMA_VERSION = "1"
_TIME_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


def _esc_attr(value: str) -> str:
    value = (
        value.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )
    return value.replace("\n", "&#10;").replace("\t", "&#9;").replace("\r", "&#13;")


def _esc_text(value: str) -> str:
    return value.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _tag(name: str, attrs: list[tuple[str, str]], *, close: bool) -> str:
    parts = [name] + [f'{k}="{_esc_attr(v)}"' for k, v in attrs]
    return f"<{' '.join(parts)}{'/' if close else ''}>"


def format_confidence(confidence: float) -> str:
    return f"{confidence:.6f}"


@dataclass(frozen=True)
class CentralDocument:
    manifest: Manifest
    transactions: tuple[Transaction, ...]
    term_lists: tuple[TermList, ...] = ()


@dataclass(frozen=True)
class MiningProvenance:
    central_digest: str
    sequences: int


# ---------------------------------------------------------------------------
# Central repository
# ---------------------------------------------------------------------------

def write_central_xml(
    manifest: Manifest,
    transactions: list[Transaction] | tuple[Transaction, ...],
    term_lists: list[TermList] | tuple[TermList, ...] = (),
) -> bytes:
    """Serialize the central repository; deterministic for a given model."""
    unit_paths = {u.path for u in manifest.units}
    by_unit: dict[str, list[Transaction]] = {}
    for txn in transactions:
        if txn.unit_path not in unit_paths:
            raise ConsistencyError(
                f"transaction {txn.id!r} references unknown unit {txn.unit_path!r}"
            )
        if not txn.items:
            raise ConsistencyError(f"transaction {txn.id!r} has no items")
        by_unit.setdefault(txn.unit_path, []).append(txn)

    lines = ['<?xml version="1.0" encoding="UTF-8"?>']
    root_attrs = [
        ("version", SCHEMA_VERSION),
        ("built", manifest.built_at.astimezone(timezone.utc).strftime(_TIME_FORMAT)),
        ("digestAlgo", manifest.digest_algo),
        ("intervalDays", str(manifest.update_interval_days)),
    ]
    has_children = bool(manifest.sources or manifest.units or term_lists)
    if not has_children:
        lines.append(_tag("esdp-repository", root_attrs, close=True))
        return ("\n".join(lines) + "\n").encode("utf-8")
    lines.append(_tag("esdp-repository", root_attrs, close=False))
    for src in sorted(manifest.sources, key=lambda s: s.id):
        lines.append("  " + _tag(
            "source",
            [("id", src.id), ("kind", src.kind), ("root", src.root), ("label", src.label)],
            close=True,
        ))
    for unit in sorted(manifest.units, key=lambda u: u.path):
        unit_attrs = [
            ("path", unit.path), ("source", unit.source_id),
            ("package", unit.package), ("digest", unit.digest),
            ("size", str(unit.size)),
        ]
        txns = sorted(
            by_unit.get(unit.path, ()),
            key=lambda t: (t.span[0], t.span[1], t.entity, t.id),
        )
        if not txns:
            lines.append("  " + _tag("unit", unit_attrs, close=True))
            continue
        lines.append("  " + _tag("unit", unit_attrs, close=False))
        for txn in txns:
            lines.append("    " + _tag(
                "transaction",
                [("id", txn.id), ("entity", txn.entity), ("block", txn.block_kind),
                 ("start", str(txn.span[0])), ("end", str(txn.span[1]))],
                close=False,
            ))
            for item in txn.items:
                lines.append("      " + _tag(
                    "item",
                    [("kind", item.kind), ("name", item.name), ("line", str(item.line))],
                    close=True,
                ))
            lines.append("    </transaction>")
        lines.append("  </unit>")
    for terms in sorted(term_lists, key=lambda t: t.source_id):
        if not terms.terms:
            lines.append("  " + _tag("terms", [("source", terms.source_id)], close=True))
            continue
        lines.append("  " + _tag("terms", [("source", terms.source_id)], close=False))
        for term in terms.terms:
            lines.append(f"    <term>{_esc_text(term)}</term>")
        lines.append("  </terms>")
    lines.append("</esdp-repository>")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _parse_xml(data: bytes) -> ET.Element:
    try:
        return ET.fromstring(data)
    except ET.ParseError as exc:
        line, col = exc.position if exc.position else (None, None)
        raise XmlFormatError(f"malformed XML: {exc.msg if hasattr(exc, 'msg') else exc}",
                             line, col) from exc


def _require_attrs(elem: ET.Element, required: tuple[str, ...]) -> dict[str, str]:
    actual = set(elem.attrib)
    expected = set(required)
    unknown = actual - expected
    if unknown:
        raise XmlFormatError(f"<{elem.tag}>: unknown attributes {sorted(unknown)}")
    missing = expected - actual
    if missing:
        raise XmlFormatError(f"<{elem.tag}>: missing attributes {sorted(missing)}")
    return dict(elem.attrib)


def _check_version(root: ET.Element, expected_tag: str) -> None:
    if root.tag != expected_tag:
        raise XmlFormatError(f"expected root <{expected_tag}>, found <{root.tag}>")
    version = root.get("version")
    if version is None:
        raise XmlFormatError(f"<{root.tag}>: missing version attribute")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(
            f"unknown schema version {version!r} (supported: {SCHEMA_VERSION})"
        )


def _int_attr(attrs: dict[str, str], tag: str, name: str, minimum: int = 0) -> int:
    try:
        value = int(attrs[name])
    except ValueError as exc:
        raise XmlFormatError(f"<{tag}>: attribute {name}={attrs[name]!r} is not an integer") from exc
    if value < minimum:
        raise XmlFormatError(f"<{tag}>: attribute {name}={value} below minimum {minimum}")
    return value


def read_central_xml(data: bytes) -> CentralDocument:
    """Full-fidelity inverse of :func:`write_central_xml`; strict."""
    root = _parse_xml(data)
    _check_version(root, "esdp-repository")
    attrs = _require_attrs(root, ("version", "built", "digestAlgo", "intervalDays"))
    try:
        built_at = datetime.strptime(attrs["built"], _TIME_FORMAT).replace(tzinfo=timezone.utc)
    except ValueError as exc:
        raise XmlFormatError(f"bad built timestamp {attrs['built']!r}") from exc
    interval = _int_attr(attrs, root.tag, "intervalDays", minimum=1)

    sources: list[SourceDescriptor] = []
    units: list[UnitSummary] = []
    transactions: list[Transaction] = []
    term_lists: list[TermList] = []
    seen_sources: set[str] = set()
    seen_paths: set[str] = set()

    for child in root:
        if child.tag == "source":
            a = _require_attrs(child, ("id", "kind", "root", "label"))
            if len(child):
                raise XmlFormatError("<source> must not have children")
            if a["id"] in seen_sources:
                raise XmlFormatError(f"duplicate source id {a['id']!r}")
            seen_sources.add(a["id"])
            sources.append(SourceDescriptor(a["id"], a["kind"], a["root"], a["label"]))
        elif child.tag == "unit":
            a = _require_attrs(child, ("path", "source", "package", "digest", "size"))
            if a["path"] in seen_paths:
                raise XmlFormatError(f"duplicate unit path {a['path']!r}")
            seen_paths.add(a["path"])
            units.append(UnitSummary(
                path=a["path"], source_id=a["source"], package=a["package"],
                digest=a["digest"], size=_int_attr(a, "unit", "size"),
            ))
            for txn_elem in child:
                if txn_elem.tag != "transaction":
                    raise XmlFormatError(f"unexpected element <{txn_elem.tag}> in <unit>")
                transactions.append(_read_transaction(txn_elem, a["path"]))
        elif child.tag == "terms":
            a = _require_attrs(child, ("source",))
            term_values: list[str] = []
            for term_elem in child:
                if term_elem.tag != "term":
                    raise XmlFormatError(f"unexpected element <{term_elem.tag}> in <terms>")
                if term_elem.attrib or len(term_elem):
                    raise XmlFormatError("<term> carries only text")
                text = term_elem.text or ""
                if not text:
                    raise XmlFormatError("<term> must be non-empty")
                term_values.append(text)
            term_lists.append(TermList(tuple(term_values), a["source"]))
        else:
            raise XmlFormatError(f"unexpected element <{child.tag}> in <esdp-repository>")

    declared = {s.id for s in sources}
    for unit in units:
        if unit.source_id not in declared:
            raise XmlFormatError(
                f"unit {unit.path!r} references undeclared source {unit.source_id!r}"
            )
    for terms in term_lists:
        if terms.source_id not in declared:
            raise XmlFormatError(
                f"terms reference undeclared source {terms.source_id!r}"
            )
    manifest = Manifest(
        sources=tuple(sources),
        units=tuple(units),
        built_at=built_at,
        update_interval_days=interval,
        digest_algo=attrs["digestAlgo"],
    )
    return CentralDocument(manifest, tuple(transactions), tuple(term_lists))


def _read_transaction(elem: ET.Element, unit_path: str) -> Transaction:
    a = _require_attrs(elem, ("id", "entity", "block", "start", "end"))
    if a["block"] not in ("class", "method"):
        raise XmlFormatError(f"transaction {a['id']!r}: bad block {a['block']!r}")
    if not a["entity"]:
        raise XmlFormatError(f"transaction {a['id']!r}: empty entity")
    start = _int_attr(a, "transaction", "start", minimum=1)
    end = _int_attr(a, "transaction", "end", minimum=1)
    if start > end:
        raise XmlFormatError(f"transaction {a['id']!r}: start {start} after end {end}")
    items: list[Item] = []
    for item_elem in elem:
        if item_elem.tag != "item":
            raise XmlFormatError(f"unexpected element <{item_elem.tag}> in <transaction>")
        ia = _require_attrs(item_elem, ("kind", "name", "line"))
        if ia["kind"] not in ITEM_KINDS:
            raise XmlFormatError(f"unknown item kind {ia['kind']!r}")
        if not ia["name"]:
            raise XmlFormatError("item name must be non-empty")
        line = _int_attr(ia, "item", "line", minimum=1)
        items.append(Item(ia["kind"], ia["name"], a["entity"], line))
    if not items:
        raise XmlFormatError(f"transaction {a['id']!r} has no items")
    return Transaction(
        id=a["id"], entity=a["entity"], block_kind=a["block"],
        items=tuple(items), unit_path=unit_path, span=(start, end),
    )


# ---------------------------------------------------------------------------
# Mined repository
# ---------------------------------------------------------------------------

def write_mined_xml(
    patterns: list[SequencePattern] | tuple[SequencePattern, ...],
    config: MiningConfig,
    provenance: MiningProvenance,
) -> bytes:
    """Serialize ranked patterns; refuses models violating the invariants."""
    ordered = sorted(patterns, key=lambda p: p.rank)
    for position, pattern in enumerate(ordered, 1):
        if pattern.rank != position:
            raise ConsistencyError(
                f"ranks are not contiguous: expected {position}, found {pattern.rank}"
            )
        if pattern.k < 1:
            raise ConsistencyError(f"pattern rank {pattern.rank} has no items")
        if pattern.score != pattern.k * pattern.support:
            raise ConsistencyError(
                f"pattern rank {pattern.rank}: score {pattern.score} is not "
                f"k*support ({pattern.k}*{pattern.support})"
            )
        if not 0.0 < pattern.confidence <= 1.0:
            raise ConsistencyError(
                f"pattern rank {pattern.rank}: confidence {pattern.confidence} "
                "outside (0, 1]"
            )
    lines = ['<?xml version="1.0" encoding="UTF-8"?>']
    root_attrs = [
        ("version", SCHEMA_VERSION),
        ("centralDigest", provenance.central_digest),
        ("minSupport", str(config.min_support)),
        ("maxK", str(config.max_k)),
        ("sequences", str(provenance.sequences)),
        ("count", str(len(ordered))),
    ]
    if not ordered:
        lines.append(_tag("esdp-mined", root_attrs, close=True))
        return ("\n".join(lines) + "\n").encode("utf-8")
    lines.append(_tag("esdp-mined", root_attrs, close=False))
    for pattern in ordered:
        lines.append("  " + _tag(
            "pattern",
            [("k", str(pattern.k)), ("support", str(pattern.support)),
             ("confidence", format_confidence(pattern.confidence)),
             ("score", str(pattern.score)), ("rank", str(pattern.rank))],
            close=False,
        ))
        for kind, name in pattern.items:
            lines.append("    " + _tag("item", [("kind", kind), ("name", name)], close=True))
        for exemplar in pattern.exemplars:
            lines.append("    " + _tag("exemplar", [("transaction", exemplar)], close=True))
        lines.append("  </pattern>")
    lines.append("</esdp-mined>")
    return ("\n".join(lines) + "\n").encode("utf-8")


@dataclass(frozen=True)
class MinedRepository:
    """Immutable, query-ready pattern collection with name indexes."""

    patterns: tuple[SequencePattern, ...]
    min_support: int
    max_k: int
    sequences: int
    central_digest: str
    by_item_name: dict[str, tuple[int, ...]] = field(hash=False, default_factory=dict)
    by_first_item: dict[str, tuple[int, ...]] = field(hash=False, default_factory=dict)

    def pattern_by_rank(self, rank: int) -> SequencePattern:
        return self.patterns[rank - 1]

    @property
    def config(self) -> MiningConfig:
        return MiningConfig(min_support=self.min_support, max_k=self.max_k)

    @property
    def provenance(self) -> MiningProvenance:
        return MiningProvenance(self.central_digest, self.sequences)


def build_indexes(
    patterns: tuple[SequencePattern, ...],
) -> tuple[dict[str, tuple[int, ...]], dict[str, tuple[int, ...]]]:
    by_name: dict[str, list[int]] = {}
    by_first: dict[str, list[int]] = {}
    for pattern in patterns:
        seen: set[str] = set()
        for position, (_, name) in enumerate(pattern.items):
            if name not in seen:
                seen.add(name)
                by_name.setdefault(name, []).append(pattern.rank)
            if position == 0:
                by_first.setdefault(name, []).append(pattern.rank)
    return (
        {name: tuple(ranks) for name, ranks in by_name.items()},
        {name: tuple(ranks) for name, ranks in by_first.items()},
    )


def read_mined_xml(data: bytes) -> MinedRepository:
    """Load patterns, rebuild indexes, and verify the stored invariants."""
    root = _parse_xml(data)
    _check_version(root, "esdp-mined")
    attrs = _require_attrs(
        root, ("version", "centralDigest", "minSupport", "maxK", "sequences", "count")
    )
    min_support = _int_attr(attrs, root.tag, "minSupport", minimum=1)
    max_k = _int_attr(attrs, root.tag, "maxK", minimum=1)
    sequences = _int_attr(attrs, root.tag, "sequences")
    count = _int_attr(attrs, root.tag, "count")

    patterns: list[SequencePattern] = []
    for position, elem in enumerate(root, 1):
        if elem.tag != "pattern":
            raise XmlFormatError(f"unexpected element <{elem.tag}> in <esdp-mined>")
        a = _require_attrs(elem, ("k", "support", "confidence", "score", "rank"))
        k = _int_attr(a, "pattern", "k", minimum=1)
        support = _int_attr(a, "pattern", "support", minimum=1)
        score = _int_attr(a, "pattern", "score", minimum=1)
        rank = _int_attr(a, "pattern", "rank", minimum=1)
        try:
            confidence = float(a["confidence"])
        except ValueError as exc:
            raise XmlFormatError(f"bad confidence {a['confidence']!r}") from exc
        if not 0.0 < confidence <= 1.0:
            raise CorruptRepositoryError(
                f"pattern rank {rank}: confidence {confidence} outside (0, 1]"
            )
        if rank != position:
            raise CorruptRepositoryError(
                f"pattern rank {rank}: ranks must be contiguous from 1 "
                f"(expected {position})"
            )
        if score != k * support:
            raise CorruptRepositoryError(
                f"pattern rank {rank}: score {score} violates k*support "
                f"({k}*{support}={k * support})"
            )
        items: list[tuple[str, str]] = []
        exemplars: list[str] = []
        for child in elem:
            if child.tag == "item":
                ia = _require_attrs(child, ("kind", "name"))
                if ia["kind"] not in ITEM_KINDS:
                    raise XmlFormatError(f"unknown item kind {ia['kind']!r}")
                if not ia["name"]:
                    raise XmlFormatError("item name must be non-empty")
                items.append((ia["kind"], ia["name"]))
            elif child.tag == "exemplar":
                ea = _require_attrs(child, ("transaction",))
                if not ea["transaction"]:
                    raise XmlFormatError("exemplar transaction id must be non-empty")
                exemplars.append(ea["transaction"])
            else:
                raise XmlFormatError(f"unexpected element <{child.tag}> in <pattern>")
        if len(items) != k:
            raise CorruptRepositoryError(
                f"pattern rank {rank}: k={k} but {len(items)} items stored"
            )
        patterns.append(SequencePattern(
            items=tuple(items), support=support, confidence=confidence,
            score=score, rank=rank, exemplars=tuple(exemplars),
        ))
    if count != len(patterns):
        raise CorruptRepositoryError(
            f"count attribute {count} does not match {len(patterns)} stored patterns"
        )
    by_name, by_first = build_indexes(tuple(patterns))
    return MinedRepository(
        patterns=tuple(patterns),
        min_support=min_support,
        max_k=max_k,
        sequences=sequences,
        central_digest=attrs["centralDigest"],
        by_item_name=by_name,
        by_first_item=by_first,
    )
