from pathlib import Path

from conftest import run_cli
from esdp.corpusgen import write_fixture_corpus
from esdp.store import read_central_xml, read_mined_xml


def write_config(root: Path, corpus_dir: Path, extra_options: str = "") -> Path:
    cfg = root / "esdp.cfg"
    cfg.write_text(
        "[options]\n"
        "central = central.xml\n"
        "mined = mined.xml\n"
        f"{extra_options}"
        "\n[source]\n"
        "id = fx\n"
        "kind = open-source-project\n"
        f"root = {corpus_dir}\n"
        "label = cli test corpus\n",
        encoding="utf-8",
    )
    return cfg


def small_built(tmp_path: Path) -> Path:
    corpus_dir = tmp_path / "corpus"
    write_fixture_corpus(corpus_dir, files=5, methods_per_file=3, seed=5)
    cfg = write_config(tmp_path, corpus_dir)
    result = run_cli("build", "--config", cfg, "--built-at", "2026-08-09T00:00:00Z")
    assert result.code == 0, result.err
    return cfg


# -- build -------------------------------------------------------------------

def test_build_prints_counts_and_writes_central(tmp_path):
    corpus_dir = tmp_path / "corpus"
    write_fixture_corpus(corpus_dir, files=5, methods_per_file=3, seed=5)
    cfg = write_config(tmp_path, corpus_dir)
    result = run_cli("build", "--config", cfg, "--built-at", "2026-08-09T00:00:00Z")
    assert result.code == 0
    assert "units: 5" in result.out
    assert "transactions:" in result.out
    assert "items:" in result.out
    assert "repository fresh" in result.out
    doc = read_central_xml((tmp_path / "central.xml").read_bytes())
    assert len(doc.manifest.units) == 5


def test_build_missing_config_is_usage_error(tmp_path):
    result = run_cli("build", "--config", tmp_path / "missing.cfg")
    assert result.code == 2
    assert "usage error" in result.err


def test_build_without_config_is_usage_error():
    result = run_cli("build")
    assert result.code == 2


def test_build_empty_corpus_fails(tmp_path):
    corpus_dir = tmp_path / "corpus"
    corpus_dir.mkdir()
    cfg = write_config(tmp_path, corpus_dir)
    result = run_cli("build", "--config", cfg)
    assert result.code == 1
    assert "empty corpus" in result.err


def test_stale_repository_warns_on_reload(tmp_path):
    corpus_dir = tmp_path / "corpus"
    write_fixture_corpus(corpus_dir, files=3, methods_per_file=2, seed=2)
    cfg = write_config(tmp_path, corpus_dir)
    result = run_cli("build", "--config", cfg, "--built-at", "2020-01-01T00:00:00Z")
    assert result.code == 0
    assert "repository stale:" in result.out
    mined = run_cli("mine", "--config", cfg)
    assert mined.code == 0
    assert "repository stale:" in mined.out


# -- mine ---------------------------------------------------------------------

def test_mine_writes_patterns_and_prints_top_five(tmp_path):
    cfg = small_built(tmp_path)
    result = run_cli("mine", "--config", cfg)
    assert result.code == 0
    assert "patterns:" in result.out
    assert "#1 score=" in result.out
    repo = read_mined_xml((tmp_path / "mined.xml").read_bytes())
    assert repo.patterns


def test_mine_with_huge_min_support_writes_empty_repo(tmp_path):
    cfg = small_built(tmp_path)
    result = run_cli("mine", "--config", cfg, "--min-support", "9999")
    assert result.code == 0
    assert "patterns: 0" in result.out
    repo = read_mined_xml((tmp_path / "mined.xml").read_bytes())
    assert repo.patterns == ()


def test_mine_min_support_zero_is_usage_error(tmp_path):
    cfg = small_built(tmp_path)
    result = run_cli("mine", "--config", cfg, "--min-support", "0")
    assert result.code == 2


def test_mine_missing_central_fails(tmp_path):
    result = run_cli("mine", "--central", tmp_path / "none.xml",
                     "--mined", tmp_path / "out.xml")
    assert result.code == 1


def test_mine_corrupt_central_names_parse_error(tmp_path):
    cfg = small_built(tmp_path)
    central = tmp_path / "central.xml"
    central.write_bytes(central.read_bytes()[:100])
    result = run_cli("mine", "--config", cfg)
    assert result.code == 1
    assert "malformed XML" in result.err


# -- query ----------------------------------------------------------------------

def test_query_planted_pattern_is_rank_one(planted_paths):
    result = run_cli("query", "--config", planted_paths.config, "getConnection()")
    assert result.code == 0
    first = result.out.splitlines()[0].split("\t")
    rendering = first[4]
    assert rendering == (
        "MI getConnection(arity=1):? → MI createStatement(arity=1):? "
        "→ MI executeQuery(arity=1):?"
    )
    assert "elapsed:" in result.out


def test_query_no_match_prints_zero_results(planted_paths):
    result = run_cli("query", "--config", planted_paths.config, "zzznothing")
    assert result.code == 0
    assert "0 results" in result.out


def test_query_blank_is_usage_error(planted_paths):
    result = run_cli("query", "--config", planted_paths.config, "   ")
    assert result.code == 2


def test_query_empty_mined_repo(tmp_path):
    cfg = small_built(tmp_path)
    run_cli("mine", "--config", cfg, "--min-support", "9999")
    result = run_cli("query", "--config", cfg, "getConnection()")
    assert result.code == 0
    assert "0 results" in result.out


def test_query_skeleton_renders_source(planted_paths):
    result = run_cli("query", "--config", planted_paths.config,
                     "--skeleton", "getConnection()")
    assert result.code == 0
    assert "// pattern:" in result.out
    assert ">>" in result.out
    assert "getConnection" in result.out


def test_query_xml_mode(planted_paths):
    result = run_cli("query", "--config", planted_paths.config, "--xml",
                     "getConnection()")
    assert result.code == 0
    assert result.out.startswith("<?xml")
    assert "<recommendation query=" in result.out


def test_query_missing_mined_fails(tmp_path):
    result = run_cli("query", "--mined", tmp_path / "none.xml", "anything")
    assert result.code == 1


# -- repl --------------------------------------------------------------------------

def test_repl_session(planted_paths):
    session = "getConnection()\n?Conn\n\n:quit\n"
    result = run_cli("repl", "--config", planted_paths.config, stdin=session)
    assert result.code == 0
    assert "getConnection(arity=1):?" in result.out
    assert "Connection" in result.out  # suggestion for ?Conn
    assert "error:" in result.out  # blank line reported, loop continued


def test_repl_eof_exits_cleanly(planted_paths):
    result = run_cli("repl", "--config", planted_paths.config, stdin="")
    assert result.code == 0


def test_repl_suggestions_fall_back_to_central_terms(tmp_path):
    corpus_dir = tmp_path / "corpus"
    write_fixture_corpus(corpus_dir, files=3, methods_per_file=2, seed=9)
    terms_file = tmp_path / "trending.txt"
    terms_file.write_text("Connection\nXMLParser\n")
    cfg = tmp_path / "esdp.cfg"
    cfg.write_text(
        "[options]\ncentral = central.xml\nmined = mined.xml\n"
        f"\n[source]\nid = fx\nkind = open-source-project\nroot = {corpus_dir}\n"
        f"\n[source]\nid = trend\nkind = trending-terms\nroot = {terms_file}\n"
    )
    assert run_cli("build", "--config", cfg).code == 0
    assert run_cli("mine", "--config", cfg).code == 0
    result = run_cli("repl", "--config", cfg, stdin="?XML\n:quit\n")
    assert result.code == 0
    assert "XMLParser" in result.out


# -- bench ----------------------------------------------------------------------------

def test_bench_default_terms(desk_paths, tmp_path):
    out_csv = tmp_path / "bench.csv"
    result = run_cli("bench", "--config", desk_paths.config, "--runs", "3",
                     "--out", out_csv)
    assert result.code == 0
    lines = out_csv.read_text().splitlines()
    assert lines[0] == "query,median_ms,first_match_rank,entries"
    assert len(lines) == 6
    assert lines[1].startswith("Connection,")
    assert lines[3].startswith("getConnection(),")
    assert lines[5].startswith("InputMissmatchException,")
    assert "summary:" in result.out


def test_bench_queries_file_and_expectations(planted_paths, tmp_path):
    queries = tmp_path / "queries.txt"
    expected = ("getConnection(arity=1):? -> createStatement(arity=1):? -> "
                "executeQuery(arity=1):?")
    queries.write_text(f"getConnection()\t{expected}\nnosuchthing\n")
    out_csv = tmp_path / "bench.csv"
    result = run_cli("bench", "--config", planted_paths.config, queries,
                     "--runs", "2", "--out", out_csv)
    assert result.code == 0
    lines = out_csv.read_text().splitlines()
    assert lines[1].split(",")[2] == "1"  # planted pattern found at position 1
    assert lines[2].split(",")[2] == ""  # no match recorded for the miss


def test_bench_parallel_matches_serial(desk_paths, tmp_path):
    serial_csv = tmp_path / "serial.csv"
    parallel_csv = tmp_path / "parallel.csv"
    assert run_cli("bench", "--config", desk_paths.config, "--runs", "2",
                   "--out", serial_csv).code == 0
    assert run_cli("bench", "--config", desk_paths.config, "--runs", "2",
                   "--out", parallel_csv, "--parallel").code == 0

    def stable(path):
        rows = [line.split(",") for line in path.read_text().splitlines()[1:]]
        return [(r[0], r[2], r[3]) for r in rows]

    assert stable(serial_csv) == stable(parallel_csv)


def test_bench_empty_queries_file_fails(desk_paths, tmp_path):
    queries = tmp_path / "empty.txt"
    queries.write_text("\n")
    result = run_cli("bench", "--config", desk_paths.config, queries,
                     "--out", tmp_path / "b.csv")
    assert result.code == 1


def test_bench_unreadable_queries_file_fails(desk_paths, tmp_path):
    result = run_cli("bench", "--config", desk_paths.config,
                     tmp_path / "missing.txt", "--out", tmp_path / "b.csv")
    assert result.code == 1


# -- stats -----------------------------------------------------------------------------

def test_stats_counts_match_recount(desk_paths):
    result = run_cli("stats", "--config", desk_paths.config)
    assert result.code == 0
    doc = read_central_xml(desk_paths.central.read_bytes())
    repo = read_mined_xml(desk_paths.mined.read_bytes())
    methods = sum(1 for t in doc.transactions if t.block_kind == "method")
    assert f"files: {len(doc.manifest.units)}" in result.out
    assert f"method transactions: {methods}" in result.out
    assert f"patterns: {len(repo.patterns)}" in result.out
    assert "prominent api:" in result.out


def test_stats_with_only_central(tmp_path):
    cfg = small_built(tmp_path)
    result = run_cli("stats", "--config", cfg)
    assert result.code == 0
    assert "files: 5" in result.out
    assert "patterns:" not in result.out


def test_stats_with_neither_repo_fails(tmp_path):
    result = run_cli("stats", "--central", tmp_path / "a.xml",
                     "--mined", tmp_path / "b.xml")
    assert result.code == 1


# -- top-level usage ---------------------------------------------------------------------

def test_unknown_subcommand_is_usage_error():
    result = run_cli("explode")
    assert result.code == 2


def test_no_subcommand_is_usage_error():
    result = run_cli()
    assert result.code == 2
