"""Independent brute-force oracle for sequential pattern mining.

Enumerates every distinct subsequence of every sequence (up to a length cap)
and counts, per candidate, how many sequences contain it. This is a direct
implementation of the support definition with no projection machinery, so it
stays independent of the miner it checks.
"""

from __future__ import annotations

from collections import Counter


def distinct_subsequences(seq: tuple, max_k: int) -> set[tuple]:
    subs: set[tuple] = {()}
    for element in seq:
        extensions = {s + (element,) for s in subs if len(s) < max_k}
        subs |= extensions
    subs.discard(())
    return subs


def brute_force_patterns(
    sequences: list[tuple], min_support: int, max_k: int
) -> dict[tuple, int]:
    """All (pattern -> support) with support >= min_support and length <= max_k."""
    counts: Counter = Counter()
    for seq in sequences:
        counts.update(distinct_subsequences(tuple(seq), max_k))
    return {p: c for p, c in counts.items() if c >= min_support}


def contains_subsequence(haystack: tuple, needle: tuple) -> bool:
    it = iter(haystack)
    return all(any(x == want for x in it) for want in needle)
