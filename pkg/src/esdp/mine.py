"""Sequential pattern mining over the transaction database.

The sequence database interns (kind, name) pairs to integer ids; mining is
prefix-projected pattern growth over pseudo-projections (sequence index plus
suffix offset), so no candidate generation and no sequence copying. Support
is the number of distinct sequences containing the pattern as a
not-necessarily-contiguous subsequence, each counted once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .abstract import Transaction
from .errors import EmptyCorpusError

ItemKey = tuple[str, str]  # (kind, name)


@dataclass(frozen=True)
class MiningConfig:
    min_support: int = 2
    max_k: int = 6
    max_exemplars: int = 3

    def __post_init__(self) -> None:
        if self.min_support < 1:
            raise ValueError("min_support must be at least 1")
        if self.max_k < 1:
            raise ValueError("max_k must be at least 1")
        if self.max_exemplars < 1:
            raise ValueError("max_exemplars must be at least 1")


@dataclass
class SequenceDB:
    """Interned sequences: one row per transaction, items as integer ids."""

    id_to_item: list[ItemKey] = field(default_factory=list)
    item_to_id: dict[ItemKey, int] = field(default_factory=dict)
    sequences: list[tuple[str, tuple[int, ...]]] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.sequences)

    def intern(self, item: ItemKey) -> int:
        item_id = self.item_to_id.get(item)
        if item_id is None:
            item_id = len(self.id_to_item)
            self.item_to_id[item] = item_id
            self.id_to_item.append(item)
        return item_id

    def items_of(self, ids: tuple[int, ...]) -> tuple[ItemKey, ...]:
        return tuple(self.id_to_item[i] for i in ids)

    @classmethod
    def from_symbol_sequences(cls, rows: list[tuple[str, list[ItemKey]]]) -> "SequenceDB":
        db = cls()
        for row_id, symbols in rows:
            db.sequences.append((row_id, tuple(db.intern(s) for s in symbols)))
        return db


def build_sequence_db(transactions: list[Transaction]) -> SequenceDB:
    """Intern item identities in first-encounter order; location is not part
    of item identity."""
    if not transactions:
        raise EmptyCorpusError("no transactions to mine")
    db = SequenceDB()
    for txn in transactions:
        ids = tuple(db.intern((it.kind, it.name)) for it in txn.items)
        db.sequences.append((txn.id, ids))
    return db


@dataclass(frozen=True)
class DbView:
    """A projected view: (sequence index, suffix start offset) pairs."""

    db: SequenceDB
    entries: tuple[tuple[int, int], ...]

    def materialize(self) -> list[tuple[ItemKey, ...]]:
        out = []
        for seq_idx, offset in self.entries:
            _, ids = self.db.sequences[seq_idx]
            out.append(self.db.items_of(ids[offset:]))
        return out

    @classmethod
    def whole(cls, db: SequenceDB) -> "DbView":
        return cls(db, tuple((i, 0) for i in range(len(db.sequences))))


def project(view: DbView, item_id: int) -> DbView:
    """Suffixes strictly after the first occurrence of ``item_id``; sequences
    without it are dropped."""
    if not 0 <= item_id < len(view.db.id_to_item):
        raise KeyError(f"item id {item_id} not in dictionary")
    entries = []
    for seq_idx, offset in view.entries:
        _, ids = view.db.sequences[seq_idx]
        try:
            pos = ids.index(item_id, offset)
        except ValueError:
            continue
        entries.append((seq_idx, pos + 1))
    return DbView(view.db, tuple(entries))


@dataclass(frozen=True)
class MinedSequence:
    """Raw miner output: item ids, support, and supporting sequence indexes
    in database order (capped for exemplar use)."""

    item_ids: tuple[int, ...]
    support: int
    supporting: tuple[int, ...]


def prefixspan(
    db: SequenceDB,
    config: MiningConfig,
    keep_supporting: int | None = None,
) -> list[MinedSequence]:
    """Mine every sequence of length 1..max_k with support >= min_support.

    ``keep_supporting`` caps how many supporting sequence indexes are kept
    per pattern (defaults to config.max_exemplars).
    """
    cap = config.max_exemplars if keep_supporting is None else keep_supporting
    sequences = db.sequences
    results: list[MinedSequence] = []

    def grow(prefix: tuple[int, ...], entries: tuple[tuple[int, int], ...]) -> None:
        if len(prefix) >= config.max_k:
            return
        counts: dict[int, int] = {}
        for seq_idx, offset in entries:
            _, ids = sequences[seq_idx]
            seen: set[int] = set()
            for item_id in ids[offset:]:
                if item_id not in seen:
                    seen.add(item_id)
                    counts[item_id] = counts.get(item_id, 0) + 1
        for item_id in sorted(counts):
            support = counts[item_id]
            if support < config.min_support:
                continue
            new_entries = []
            for seq_idx, offset in entries:
                _, ids = sequences[seq_idx]
                try:
                    pos = ids.index(item_id, offset)
                except ValueError:
                    continue
                new_entries.append((seq_idx, pos + 1))
            pattern = prefix + (item_id,)
            results.append(
                MinedSequence(
                    item_ids=pattern,
                    support=support,
                    supporting=tuple(e[0] for e in new_entries[:cap]),
                )
            )
            grow(pattern, tuple(new_entries))

    grow((), DbView.whole(db).entries)
    return results


def score_pattern(k: int, support: int) -> int:
    """Ranking key: pattern length times support."""
    if k < 1 or support < 1:
        raise ValueError("k and support must be at least 1")
    return k * support


def compute_confidence(
    item_ids: tuple[int, ...],
    support: int,
    mined: dict[tuple[int, ...], int],
    db: SequenceDB,
) -> float:
    """Support over the support of the length-(k-1) prefix; for single items,
    support over the database size. Always in (0, 1]."""
    if len(item_ids) == 1:
        return support / db.size
    prefix = item_ids[:-1]
    prefix_support = mined.get(prefix)
    assert prefix_support is not None, "prefix missing from mined set"
    return support / prefix_support


@dataclass(frozen=True)
class SequencePattern:
    """A mined, scored, ranked pattern with exemplar transaction references."""

    items: tuple[ItemKey, ...]
    support: int
    confidence: float
    score: int
    rank: int
    exemplars: tuple[str, ...] = ()

    @property
    def k(self) -> int:
        return len(self.items)


def _rank_key(entry: tuple[tuple[ItemKey, ...], int, int]) -> tuple:
    items, support, score = entry
    names = tuple(name for _, name in items)
    kinds = tuple(kind for kind, _ in items)
    return (-score, -support, -len(items), names, kinds)


def rank_patterns(
    scored: list[tuple[tuple[ItemKey, ...], int, float]],
) -> list[SequencePattern]:
    """Total order: score desc, support desc, k desc, then item-name sequence
    (and kind sequence) ascending. Ranks are the 1-based positions."""
    rows = sorted(
        scored,
        key=lambda row: _rank_key((row[0], row[1], score_pattern(len(row[0]), row[1]))),
    )
    patterns = []
    for position, (items, support, confidence) in enumerate(rows, 1):
        patterns.append(
            SequencePattern(
                items=items,
                support=support,
                confidence=confidence,
                score=score_pattern(len(items), support),
                rank=position,
            )
        )
    return patterns


def _contains_subsequence(haystack: tuple[int, ...], needle: tuple[int, ...]) -> bool:
    it = iter(haystack)
    return all(any(x == want for x in it) for want in needle)


def attach_snippets(
    patterns: list[SequencePattern],
    db: SequenceDB,
    max_exemplars: int,
    supporting: dict[tuple[ItemKey, ...], tuple[int, ...]] | None = None,
) -> list[SequencePattern]:
    """Attach the first ``max_exemplars`` supporting transaction ids in
    database order. ``supporting`` can carry the miner's precomputed
    sequence indexes; otherwise containment is recomputed here."""
    out = []
    for pattern in patterns:
        if supporting is not None and pattern.items in supporting:
            idxs = supporting[pattern.items][:max_exemplars]
        else:
            ids = tuple(db.item_to_id.get(item, -1) for item in pattern.items)
            idxs = []
            if all(i >= 0 for i in ids):
                for seq_idx, (_, seq) in enumerate(db.sequences):
                    if _contains_subsequence(seq, ids):
                        idxs.append(seq_idx)
                        if len(idxs) >= max_exemplars:
                            break
            idxs = tuple(idxs)
        exemplars = tuple(db.sequences[i][0] for i in idxs)
        out.append(
            SequencePattern(
                items=pattern.items,
                support=pattern.support,
                confidence=pattern.confidence,
                score=pattern.score,
                rank=pattern.rank,
                exemplars=exemplars,
            )
        )
    return out


def mine_patterns(
    transactions: list[Transaction],
    config: MiningConfig = MiningConfig(),
) -> tuple[list[SequencePattern], SequenceDB]:
    """Full mining pipeline: build the database, mine, score, rank, and
    attach exemplars. Returns the ranked patterns and the database."""
    db = build_sequence_db(transactions)
    mined = prefixspan(db, config)
    support_by_ids = {m.item_ids: m.support for m in mined}
    supporting = {db.items_of(m.item_ids): m.supporting for m in mined}
    scored = []
    for m in mined:
        confidence = compute_confidence(m.item_ids, m.support, support_by_ids, db)
        scored.append((db.items_of(m.item_ids), m.support, confidence))
    ranked = rank_patterns(scored)
    return attach_snippets(ranked, db, config.max_exemplars, supporting), db
