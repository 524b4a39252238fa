"""Randomized model builders for persistence round-trip testing."""

from __future__ import annotations

import random
from datetime import datetime, timezone

from esdp.abstract import ITEM_KINDS, Item, Transaction
from esdp.corpus import (
    SOURCE_KINDS,
    Manifest,
    SourceDescriptor,
    TermList,
    UnitSummary,
)
from esdp.mine import MiningConfig, SequencePattern
from esdp.store import MiningProvenance

# includes XML-hostile characters on purpose
_NAME_CHARS = "abcdefgXYZ0123456789._$<>&\"'()=:,"


def _name(rng: random.Random, min_len: int = 1, max_len: int = 12) -> str:
    return "".join(rng.choice(_NAME_CHARS) for _ in range(rng.randint(min_len, max_len)))


def _word(rng: random.Random) -> str:
    return "".join(rng.choice("abcdefghij") for _ in range(rng.randint(3, 8)))


def random_central_model(
    rng: random.Random,
) -> tuple[Manifest, list[Transaction], list[TermList]]:
    sources = []
    for i in range(rng.randint(1, 3)):
        sources.append(SourceDescriptor(
            id=f"src{i}",
            kind=rng.choice(SOURCE_KINDS),
            root=f"/data/{_word(rng)}",
            label=_name(rng, 0, 10),
        ))
    units = []
    transactions = []
    for u in range(rng.randint(0, 4)):
        path = f"{_word(rng)}/{_word(rng)}{u}.java"
        units.append(UnitSummary(
            path=path,
            source_id=rng.choice(sources).id,
            package=rng.choice(["", _word(rng)]),
            digest="".join(rng.choice("0123456789abcdef") for _ in range(64)),
            size=rng.randint(0, 100000),
        ))
        for t in range(rng.randint(0, 3)):
            entity = f"{_word(rng)}.{_word(rng).capitalize()}"
            start = rng.randint(1, 50)
            end = start + rng.randint(0, 40)
            items = tuple(
                Item(
                    kind=rng.choice(list(ITEM_KINDS)),
                    name=_name(rng),
                    entity=entity,
                    line=rng.randint(start, end),
                )
                for _ in range(rng.randint(1, 6))
            )
            transactions.append(Transaction(
                id=f"{path}::{entity}::{start}-{end}#{t}",
                entity=entity,
                block_kind=rng.choice(["class", "method"]),
                items=items,
                unit_path=path,
                span=(start, end),
            ))
    term_lists = []
    if sources and rng.random() < 0.6:
        term_lists.append(TermList(
            terms=tuple(dict.fromkeys(_name(rng, 1, 10) for _ in range(rng.randint(0, 5)))),
            source_id=sources[0].id,
        ))
    built = datetime(
        rng.randint(2000, 2030), rng.randint(1, 12), rng.randint(1, 28),
        rng.randint(0, 23), rng.randint(0, 59), rng.randint(0, 59),
        tzinfo=timezone.utc,
    )
    manifest = Manifest(
        sources=tuple(sorted(sources, key=lambda s: s.id)),
        units=tuple(sorted(units, key=lambda u: u.path)),
        built_at=built,
        update_interval_days=rng.randint(1, 365),
        digest_algo="sha256",
    )
    return manifest, transactions, term_lists


def random_mined_model(
    rng: random.Random,
) -> tuple[list[SequencePattern], MiningConfig, MiningProvenance]:
    patterns = []
    for rank in range(1, rng.randint(1, 12) + 1):
        k = rng.randint(1, 5)
        support = rng.randint(1, 9)
        confidence = rng.choice([1.0, round(rng.uniform(0.01, 1.0), 6)])
        items = tuple(
            (rng.choice(list(ITEM_KINDS)), _name(rng)) for _ in range(k)
        )
        exemplars = tuple(f"txn-{_word(rng)}" for _ in range(rng.randint(0, 3)))
        patterns.append(SequencePattern(
            items=items, support=support, confidence=confidence,
            score=k * support, rank=rank, exemplars=exemplars,
        ))
    config = MiningConfig(
        min_support=rng.randint(1, 5), max_k=rng.randint(1, 8),
        max_exemplars=rng.randint(1, 4),
    )
    provenance = MiningProvenance(
        central_digest="".join(rng.choice("0123456789abcdef") for _ in range(64)),
        sequences=rng.randint(0, 500),
    )
    return patterns, config, provenance
