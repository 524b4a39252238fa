"""Command-line entry point: build, mine, query, repl, bench, stats.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import statistics
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

from . import abstract, corpus, mine, recommend, store
from .errors import EmptyQueryError, EsdpError

USAGE_ERROR = 2
RUNTIME_ERROR = 1


@dataclass
class CliConfig:
    config_path: str | None = None
    central: str = "central.xml"
    mined: str = "mined.xml"
    min_support: int = 2
    max_k: int = 6
    top_k: int = 10
    extensions: frozenset[str] = corpus.DEFAULT_EXTENSIONS
    terms_path: str | None = None
    interval_days: int = corpus.DEFAULT_INTERVAL_DAYS
    digest_algo: str = corpus.DEFAULT_DIGEST_ALGO
    descriptors: list[corpus.SourceDescriptor] = field(default_factory=list)


class _UsageError(Exception):
    pass


def _build_cli_config(args: argparse.Namespace) -> CliConfig:
    cfg = CliConfig(config_path=args.config)
    if args.config is not None:
        if not Path(args.config).is_file():
            raise _UsageError(f"config file {args.config!r} does not exist")
        parsed = corpus.parse_source_config(args.config)
        cfg.descriptors = parsed.descriptors
        opts = parsed.options
        cfg.central = opts.get("central", cfg.central)
        cfg.mined = opts.get("mined", cfg.mined)
        cfg.terms_path = opts.get("terms", cfg.terms_path)
        cfg.digest_algo = opts.get("digest_algo", cfg.digest_algo)
        for key in ("min_support", "max_k", "top_k", "interval_days"):
            if key in opts:
                try:
                    setattr(cfg, key, int(opts[key]))
                except ValueError:
                    raise _UsageError(f"option {key} must be an integer, got {opts[key]!r}")
        if "extensions" in opts:
            exts = frozenset(
                e.strip() for e in opts["extensions"].split(",") if e.strip()
            )
            if exts:
                cfg.extensions = exts
    if args.central is not None:
        cfg.central = args.central
    if args.mined is not None:
        cfg.mined = args.mined
    if args.min_support is not None:
        cfg.min_support = args.min_support
    if args.max_k is not None:
        cfg.max_k = args.max_k
    if args.top_k is not None:
        cfg.top_k = args.top_k
    for name in ("min_support", "max_k", "top_k", "interval_days"):
        if getattr(cfg, name) < 1:
            raise _UsageError(f"{name.replace('_', '-')} must be at least 1")
    return cfg


def _mining_config(cfg: CliConfig) -> mine.MiningConfig:
    return mine.MiningConfig(min_support=cfg.min_support, max_k=cfg.max_k)


def _parse_built_at(value: str | None) -> datetime:
    if value is None:
        return datetime.now(timezone.utc)
    text = value.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    try:
        parsed = datetime.fromisoformat(text)
    except ValueError:
        raise _UsageError(f"--built-at: not an ISO-8601 timestamp: {value!r}")
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed


def _read_file(path: str, what: str) -> bytes:
    p = Path(path)
    if not p.is_file():
        raise EsdpError(f"{what} {path!r} does not exist (run the earlier stage first)")
    return p.read_bytes()


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_build(cfg: CliConfig, args: argparse.Namespace) -> int:
    if not cfg.descriptors:
        raise _UsageError("build requires a --config file declaring [source] sections")
    units = corpus.scan_sources(cfg.descriptors, cfg.extensions, cfg.digest_algo)
    if not units:
        raise EsdpError("empty corpus: no matching files in any source")
    transactions, trees = abstract.abstract_corpus(units)
    for tree in trees.values():
        for warning in tree.warnings:
            print(f"warning: {warning}", file=sys.stderr)
    now = _parse_built_at(args.built_at)
    manifest = corpus.build_manifest(
        cfg.descriptors, now, units=units,
        extensions=cfg.extensions, interval_days=cfg.interval_days,
        digest_algo=cfg.digest_algo,
    )
    manifest = corpus.Manifest(
        sources=tuple(sorted(manifest.sources, key=lambda s: s.id)),
        units=tuple(sorted(manifest.units, key=lambda u: u.path)),
        built_at=manifest.built_at,
        update_interval_days=manifest.update_interval_days,
        digest_algo=manifest.digest_algo,
    )
    term_lists = [
        corpus.load_term_list(d.root, d.id)
        for d in cfg.descriptors
        if d.kind == "trending-terms" and Path(d.root).is_file()
    ]
    data = store.write_central_xml(manifest, transactions, term_lists)
    Path(cfg.central).write_bytes(data)
    item_count = sum(len(t.items) for t in transactions)
    print(f"units: {len(units)}")
    print(f"transactions: {len(transactions)}")
    print(f"items: {item_count}")
    _print_staleness(manifest)
    print(f"central repository written to {cfg.central}")
    return 0


def _print_staleness(manifest: corpus.Manifest) -> None:
    report = corpus.check_staleness(manifest, datetime.now(timezone.utc))
    if report.stale:
        print(f"repository stale: {report.age_days} days")
    else:
        print(f"repository fresh: {report.age_days} days "
              f"(interval {manifest.update_interval_days})")


def cmd_mine(cfg: CliConfig, args: argparse.Namespace) -> int:
    data = _read_file(cfg.central, "central repository")
    document = store.read_central_xml(data)
    _print_staleness(document.manifest)
    digest = corpus.compute_digest(data, document.manifest.digest_algo)
    config = _mining_config(cfg)
    if document.transactions:
        patterns, db = mine.mine_patterns(list(document.transactions), config)
        provenance = store.MiningProvenance(digest, db.size)
    else:
        patterns = []
        provenance = store.MiningProvenance(digest, 0)
    out = store.write_mined_xml(patterns, config, provenance)
    Path(cfg.mined).write_bytes(out)
    print(f"patterns: {len(patterns)}")
    for pattern in patterns[:5]:
        print(f"  #{pattern.rank} score={pattern.score} support={pattern.support} "
              f"{recommend.render_pattern_items(pattern)}")
    print(f"mined repository written to {cfg.mined}")
    return 0


def _load_repo(cfg: CliConfig) -> store.MinedRepository:
    return store.read_mined_xml(_read_file(cfg.mined, "mined repository"))


def cmd_query(cfg: CliConfig, args: argparse.Namespace) -> int:
    try:
        sketch = recommend.parse_query(args.query)
    except EmptyQueryError as exc:
        raise _UsageError(str(exc))
    repo = _load_repo(cfg)
    recommendation = recommend.match_patterns(sketch, repo, cfg.top_k)
    skeletons: dict[int, recommend.CodeSkeleton] = {}
    if args.skeleton and recommendation.entries:
        top = recommendation.entries[0].pattern
        if top.exemplars:
            central = store.read_central_xml(_read_file(cfg.central, "central repository"))
            skeletons[top.rank] = recommend.assemble_skeleton(top, central, 0)
    if args.xml:
        sys.stdout.write(
            recommend.render_recommendation_xml(recommendation, skeletons).decode("utf-8")
        )
    else:
        if not recommendation.entries:
            print("0 results")
        else:
            for entry in recommendation.entries:
                print(recommend.render_entry_line(entry))
        for skeleton in skeletons.values():
            print(skeleton.render())
    print(f"elapsed: {recommendation.elapsed_ms:.2f} ms")
    return 0


def _load_terms(cfg: CliConfig) -> corpus.TermList:
    if cfg.terms_path is not None and Path(cfg.terms_path).is_file():
        return corpus.load_term_list(cfg.terms_path, "terms")
    if Path(cfg.central).is_file():
        document = store.read_central_xml(_read_file(cfg.central, "central repository"))
        merged: list[str] = []
        for term_list in document.term_lists:
            merged.extend(term_list.terms)
        return corpus.TermList(tuple(dict.fromkeys(merged)), "central")
    return corpus.TermList((), "none")


def cmd_repl(cfg: CliConfig, args: argparse.Namespace) -> int:
    repo = _load_repo(cfg)
    terms = _load_terms(cfg)
    print(f"loaded {len(repo.patterns)} patterns; :quit exits, ?prefix suggests terms")
    while True:
        print("esdp> ", end="", file=sys.stderr, flush=True)
        try:
            line = input()
        except EOFError:
            return 0
        line = line.strip()
        if line == ":quit":
            return 0
        if line.startswith("?"):
            for term in recommend.suggest_terms(line[1:].strip(), terms, cfg.top_k):
                print(term)
            continue
        try:
            sketch = recommend.parse_query(line)
        except EmptyQueryError as exc:
            print(f"error: {exc}")
            continue
        recommendation = recommend.match_patterns(sketch, repo, cfg.top_k)
        if not recommendation.entries:
            print("0 results")
        else:
            for entry in recommendation.entries:
                print(recommend.render_entry_line(entry))


def _bench_queries(args: argparse.Namespace) -> list[tuple[str, str | None]]:
    if args.queries is not None:
        path = Path(args.queries)
        if not path.is_file():
            raise EsdpError(f"queries file {args.queries!r} does not exist")
        raw = path.read_text(encoding="utf-8")
    else:
        raw = resources.files("esdp.data").joinpath("bench_queries.txt").read_text("utf-8")
    queries: list[tuple[str, str | None]] = []
    for line in raw.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        query, _, expected = line.partition("\t")
        queries.append((query.strip(), expected.strip() or None))
    if not queries:
        raise EsdpError("queries file contains no queries")
    return queries


@dataclass(frozen=True)
class BenchRow:
    query: str
    median_ms: float
    first_match_rank: int | None
    entries: int


def _run_bench_query(
    repo: store.MinedRepository, query: str, expected: str | None,
    runs: int, top_k: int,
) -> tuple[BenchRow, recommend.Recommendation]:
    sketch = recommend.parse_query(query)
    timings = []
    recommendation = recommend.match_patterns(sketch, repo, top_k)
    for _ in range(runs):
        recommendation = recommend.match_patterns(sketch, repo, top_k)
        timings.append(recommendation.elapsed_ms)
    first: int | None = None
    if expected is not None:
        for position, entry in enumerate(recommendation.entries, 1):
            names = " -> ".join(name for _, name in entry.pattern.items)
            if names == expected:
                first = position
                break
    elif recommendation.entries:
        first = 1
    row = BenchRow(
        query=query,
        median_ms=statistics.median(timings),
        first_match_rank=first,
        entries=len(recommendation.entries),
    )
    return row, recommendation


def cmd_bench(cfg: CliConfig, args: argparse.Namespace) -> int:
    if args.runs < 1:
        raise _UsageError("--runs must be at least 1")
    repo = _load_repo(cfg)
    queries = _bench_queries(args)

    def work(entry: tuple[str, str | None]) -> BenchRow:
        row, _ = _run_bench_query(repo, entry[0], entry[1], args.runs, cfg.top_k)
        return row

    if args.parallel:
        with ThreadPoolExecutor(max_workers=min(8, len(queries))) as pool:
            rows = list(pool.map(work, queries))
    else:
        rows = [work(q) for q in queries]

    csv_lines = ["query,median_ms,first_match_rank,entries"]
    for row in rows:
        rank = "" if row.first_match_rank is None else str(row.first_match_rank)
        csv_lines.append(f"{row.query},{row.median_ms:.3f},{rank},{row.entries}")
    csv_text = "\n".join(csv_lines) + "\n"
    Path(args.out).write_text(csv_text, encoding="utf-8", newline="\n")

    medians = [row.median_ms for row in rows]
    for row in rows:
        rank = "-" if row.first_match_rank is None else str(row.first_match_rank)
        print(f"{row.query}\t{row.median_ms:.3f} ms\tfirst_match={rank}\t"
              f"entries={row.entries}")
    print(f"summary: median {statistics.median(medians):.3f} ms, "
          f"max {max(medians):.3f} ms over {len(rows)} queries")
    print(f"csv written to {args.out}")
    return 0


def cmd_stats(cfg: CliConfig, args: argparse.Namespace) -> int:
    central_path = Path(cfg.central)
    mined_path = Path(cfg.mined)
    if not central_path.is_file() and not mined_path.is_file():
        raise EsdpError("neither a central nor a mined repository is present")
    if central_path.is_file():
        document = store.read_central_xml(central_path.read_bytes())
        method_count = sum(
            1 for t in document.transactions if t.block_kind == "method"
        )
        print(f"files: {len(document.manifest.units)}")
        print(f"method transactions: {method_count}")
        prominent = _prominent_prefix(document.transactions)
        if prominent is not None:
            print(f"prominent api: {prominent}")
    if mined_path.is_file():
        repo = store.read_mined_xml(mined_path.read_bytes())
        print(f"patterns: {len(repo.patterns)}")
    return 0


def _prominent_prefix(transactions: tuple[abstract.Transaction, ...]) -> str | None:
    counts: dict[str, int] = {}
    for txn in transactions:
        for item in txn.items:
            head = item.name.split("(", 1)[0]
            if "." not in head:
                continue
            prefix = head.rsplit(".", 1)[0]
            counts[prefix] = counts.get(prefix, 0) + 1
    if not counts:
        return None
    return min(counts, key=lambda p: (-counts[p], p))


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="source configuration file")
    common.add_argument("--central", metavar="PATH", help="central repository XML path")
    common.add_argument("--mined", metavar="PATH", help="mined repository XML path")
    common.add_argument("--min-support", type=int, metavar="N", dest="min_support")
    common.add_argument("--max-k", type=int, metavar="N", dest="max_k")
    common.add_argument("--top-k", type=int, metavar="N", dest="top_k")
    common.add_argument("--skeleton", action="store_true",
                        help="render the top entry's code skeleton")
    common.add_argument("--parallel", action="store_true",
                        help="run benchmark queries concurrently")

    parser = argparse.ArgumentParser(
        prog="esdp",
        description="Mine API usage patterns from source corpora and answer "
                    "developer queries with ranked recommendations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", parents=[common],
                             help="scan sources and write the central repository")
    p_build.add_argument("--built-at", metavar="ISO8601", default=None,
                         help="override the build timestamp (for reproducible builds)")

    sub.add_parser("mine", parents=[common],
                   help="mine the central repository into ranked patterns")

    p_query = sub.add_parser("query", parents=[common],
                             help="match one query against the mined repository")
    p_query.add_argument("query", help="query statement, e.g. getConnection()")
    p_query.add_argument("--xml", action="store_true",
                         help="render the recommendation as XML")

    sub.add_parser("repl", parents=[common], help="interactive query loop")

    p_bench = sub.add_parser("bench", parents=[common],
                             help="measure query latency over a terms file")
    p_bench.add_argument("queries", nargs="?", default=None,
                         help="queries file (default: bundled benchmark terms)")
    p_bench.add_argument("--runs", type=int, default=5, metavar="N",
                         help="repetitions per query (default 5)")
    p_bench.add_argument("--out", default="bench.csv", metavar="PATH",
                         help="CSV output path (default bench.csv)")

    sub.add_parser("stats", parents=[common],
                   help="print corpus and pattern statistics")
    return parser


_COMMANDS = {
    "build": cmd_build,
    "mine": cmd_mine,
    "query": cmd_query,
    "repl": cmd_repl,
    "bench": cmd_bench,
    "stats": cmd_stats,
}


def main(argv: list[str] | None = None) -> int:
    parser = _make_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "built_at"):
        args.built_at = None
    try:
        try:
            cfg = _build_cli_config(args)
        except EsdpError as exc:  # malformed configuration is a usage problem
            raise _UsageError(str(exc))
        return _COMMANDS[args.command](cfg, args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except EsdpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
