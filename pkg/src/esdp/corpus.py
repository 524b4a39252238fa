"""Corpus discovery: declared sources, file scanning, manifests, staleness.

A corpus is declared as a set of sources (project trees, library trees, or a
trending-terms file). Scanning reads every matching file into a SourceUnit;
the manifest records per-unit digests so later runs can detect change, plus
the build timestamp that drives the staleness policy.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .abstract import extract_package
from .errors import (
    ClockSkewError,
    ConfigurationError,
    EmptyCorpusError,
    SourceUnavailableError,
)

logger = logging.getLogger(__name__)

SOURCE_KINDS = (
    "open-source-project",
    "company-project",
    "standard-library",
    "trending-terms",
    "authored-api",
)

DEFAULT_EXTENSIONS = frozenset({".java"})
DEFAULT_INTERVAL_DAYS = 90
DEFAULT_DIGEST_ALGO = "sha256"

# algorithms accepted for unit digests; all produce 256-bit hex digests
_DIGEST_ALGOS = ("sha256", "sha3_256", "blake2s")


@dataclass(frozen=True)
class SourceDescriptor:
    id: str
    kind: str
    root: str
    label: str = ""

    def __post_init__(self) -> None:
        if self.kind not in SOURCE_KINDS:
            raise ConfigurationError(
                f"source {self.id!r}: unknown kind {self.kind!r} "
                f"(expected one of {', '.join(SOURCE_KINDS)})"
            )
        if not self.id:
            raise ConfigurationError("source id must be non-empty")


@dataclass(frozen=True)
class SourceUnit:
    """One scanned file: decoded text plus enough metadata to index it."""

    path: str  # corpus-relative, '/'-separated
    source_id: str
    package: str
    text: str
    line_index: tuple[int, ...]  # char offset of each line start, plus end sentinel
    size: int  # file size in bytes
    digest: str  # hex digest of the raw file bytes

    def line(self, number: int) -> str:
        """Return the 1-based line ``number`` without its newline."""
        start = self.line_index[number - 1]
        end = self.line_index[number]
        return self.text[start:end].rstrip("\n")

    @property
    def line_count(self) -> int:
        return len(self.line_index) - 1


@dataclass(frozen=True)
class UnitSummary:
    path: str
    source_id: str
    package: str
    digest: str
    size: int


@dataclass(frozen=True)
class Manifest:
    sources: tuple[SourceDescriptor, ...]
    units: tuple[UnitSummary, ...]
    built_at: datetime
    update_interval_days: int = DEFAULT_INTERVAL_DAYS
    digest_algo: str = DEFAULT_DIGEST_ALGO

    def source_by_id(self, source_id: str) -> SourceDescriptor:
        for src in self.sources:
            if src.id == source_id:
                return src
        raise KeyError(source_id)

    def unit_by_path(self, path: str) -> UnitSummary:
        for unit in self.units:
            if unit.path == path:
                return unit
        raise KeyError(path)


@dataclass(frozen=True)
class TermList:
    terms: tuple[str, ...]
    source_id: str


@dataclass(frozen=True)
class StalenessReport:
    stale: bool
    age_days: int


def compute_digest(data: bytes, algo: str = DEFAULT_DIGEST_ALGO) -> str:
    if algo not in _DIGEST_ALGOS:
        raise ConfigurationError(
            f"unsupported digest algorithm {algo!r} (expected one of {_DIGEST_ALGOS})"
        )
    return hashlib.new(algo, data).hexdigest()


def _line_index(text: str) -> tuple[int, ...]:
    offsets = [0]
    for i, c in enumerate(text):
        if c == "\n":
            offsets.append(i + 1)
    offsets.append(len(text))
    return tuple(offsets)


def scan_corpus(
    descriptor: SourceDescriptor,
    extensions: frozenset[str] = DEFAULT_EXTENSIONS,
    digest_algo: str = DEFAULT_DIGEST_ALGO,
) -> list[SourceUnit]:
    """Read every file under the descriptor's root with a matching extension.

    Returns units in lexicographic path order. Unreadable files are skipped
    with a logged warning; a missing root raises SourceUnavailableError.
    """
    if not extensions:
        raise ConfigurationError("extension set must be non-empty")
    root = Path(descriptor.root)
    if not root.is_dir():
        raise SourceUnavailableError(
            f"source {descriptor.id!r}: root {descriptor.root!r} is not a directory"
        )
    paths = sorted(
        (p for p in root.rglob("*") if p.is_file() and p.suffix in extensions),
        key=lambda p: p.relative_to(root).as_posix(),
    )
    units = []
    for path in paths:
        try:
            raw = path.read_bytes()
        except OSError as exc:
            logger.warning("source %s: skipping unreadable file %s: %s",
                           descriptor.id, path, exc)
            continue
        text = raw.decode("utf-8", errors="replace")
        units.append(
            SourceUnit(
                path=path.relative_to(root).as_posix(),
                source_id=descriptor.id,
                package=extract_package(text),
                text=text,
                line_index=_line_index(text),
                size=len(raw),
                digest=compute_digest(raw, digest_algo),
            )
        )
    return units


def scan_sources(
    descriptors: list[SourceDescriptor],
    extensions: frozenset[str] = DEFAULT_EXTENSIONS,
    digest_algo: str = DEFAULT_DIGEST_ALGO,
) -> list[SourceUnit]:
    """Scan all file-bearing sources, tolerating individually missing roots.

    Trending-terms sources carry no scannable files and contribute no units.
    Raises EmptyCorpusError when every declared source is unavailable.
    """
    _check_unique_ids(descriptors)
    units: list[SourceUnit] = []
    available = 0
    for desc in descriptors:
        if desc.kind == "trending-terms":
            if Path(desc.root).is_file():
                available += 1
            else:
                logger.warning("source %s: term file %s missing", desc.id, desc.root)
            continue
        try:
            units.extend(scan_corpus(desc, extensions, digest_algo))
            available += 1
        except SourceUnavailableError as exc:
            logger.warning("%s", exc)
    if available == 0:
        raise EmptyCorpusError("no declared source is available")
    return units


def _check_unique_ids(descriptors: list[SourceDescriptor]) -> None:
    if not descriptors:
        raise ConfigurationError("at least one source must be declared")
    seen: set[str] = set()
    for desc in descriptors:
        if desc.id in seen:
            raise ConfigurationError(f"duplicate source id {desc.id!r}")
        seen.add(desc.id)


def build_manifest(
    descriptors: list[SourceDescriptor],
    now: datetime,
    units: list[SourceUnit] | None = None,
    extensions: frozenset[str] = DEFAULT_EXTENSIONS,
    interval_days: int = DEFAULT_INTERVAL_DAYS,
    digest_algo: str = DEFAULT_DIGEST_ALGO,
) -> Manifest:
    """Aggregate scans into a manifest stamped with ``now``.

    Pass ``units`` to reuse an existing scan; otherwise the sources are
    scanned here. built_at is truncated to whole seconds in UTC so that the
    stored form is exact.
    """
    _check_unique_ids(descriptors)
    if interval_days < 1:
        raise ConfigurationError("update interval must be at least 1 day")
    if units is None:
        units = scan_sources(descriptors, extensions, digest_algo)
    seen_paths: set[str] = set()
    for unit in units:
        if unit.path in seen_paths:
            raise ConfigurationError(f"duplicate unit path {unit.path!r} across sources")
        seen_paths.add(unit.path)
    summaries = tuple(
        UnitSummary(u.path, u.source_id, u.package, u.digest, u.size) for u in units
    )
    built_at = now.astimezone(timezone.utc).replace(microsecond=0)
    return Manifest(
        sources=tuple(descriptors),
        units=summaries,
        built_at=built_at,
        update_interval_days=interval_days,
        digest_algo=digest_algo,
    )


def check_staleness(manifest: Manifest, now: datetime) -> StalenessReport:
    """Age the manifest against ``now``; stale strictly beyond the interval."""
    now = now.astimezone(timezone.utc)
    if now < manifest.built_at:
        raise ClockSkewError(
            f"now ({now.isoformat()}) is earlier than built_at "
            f"({manifest.built_at.isoformat()})"
        )
    age_days = int((now - manifest.built_at).total_seconds() // 86400)
    return StalenessReport(stale=age_days > manifest.update_interval_days,
                           age_days=age_days)


def load_term_list(path: str, source_id: str) -> TermList:
    """Read one term per line; blanks and repeats are dropped, order kept."""
    p = Path(path)
    if not p.is_file():
        raise SourceUnavailableError(f"term list {path!r} does not exist")
    terms: list[str] = []
    seen: set[str] = set()
    for line in p.read_text(encoding="utf-8", errors="replace").splitlines():
        term = line.strip()
        if term and term not in seen:
            seen.add(term)
            terms.append(term)
    return TermList(terms=tuple(terms), source_id=source_id)


@dataclass
class SourceConfig:
    """Parsed source configuration file: descriptors plus pipeline options."""

    descriptors: list[SourceDescriptor] = field(default_factory=list)
    options: dict[str, str] = field(default_factory=dict)


_OPTION_KEYS = frozenset(
    {"central", "mined", "terms", "min_support", "max_k", "top_k",
     "extensions", "interval_days", "digest_algo"}
)
_SOURCE_KEYS = frozenset({"id", "kind", "root", "label"})


def parse_source_config(path: str) -> SourceConfig:
    """Parse the sectioned key=value source configuration file.

    One ``[source]`` section per descriptor (keys id, kind, root, label) and
    an optional ``[options]`` section for pipeline settings. Relative paths
    are resolved against the config file's directory.
    """
    p = Path(path)
    if not p.is_file():
        raise ConfigurationError(f"config file {path!r} does not exist")
    base = p.parent

    def resolve(value: str) -> str:
        q = Path(value)
        return value if q.is_absolute() else str((base / q))

    config = SourceConfig()
    section: str | None = None
    pending: dict[str, str] = {}

    def flush_source() -> None:
        if section != "source":
            return
        missing = {"id", "kind", "root"} - pending.keys()
        if missing:
            raise ConfigurationError(
                f"{path}: [source] section missing keys {sorted(missing)}"
            )
        config.descriptors.append(
            SourceDescriptor(
                id=pending["id"],
                kind=pending["kind"],
                root=resolve(pending["root"]),
                label=pending.get("label", ""),
            )
        )

    for lineno, raw_line in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            flush_source()
            pending = {}
            section = line[1:-1].strip()
            if section not in ("source", "options"):
                raise ConfigurationError(f"{path}:{lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if section == "source":
            if key not in _SOURCE_KEYS:
                raise ConfigurationError(f"{path}:{lineno}: unknown source key {key!r}")
            pending[key] = value
        elif section == "options":
            if key not in _OPTION_KEYS:
                raise ConfigurationError(f"{path}:{lineno}: unknown option {key!r}")
            if key in ("central", "mined", "terms"):
                value = resolve(value)
            config.options[key] = value
        else:
            raise ConfigurationError(f"{path}:{lineno}: key=value outside any section")
    flush_source()
    if config.descriptors:
        _check_unique_ids(config.descriptors)
    return config
