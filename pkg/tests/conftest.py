import contextlib
import io
import sys
from dataclasses import dataclass
from pathlib import Path
from types import SimpleNamespace

import hypothesis
import pytest

from esdp import cli
from esdp.abstract import Item, Transaction
from esdp.corpusgen import write_fixture_corpus, write_planted_corpus

hypothesis.settings.register_profile("fast", max_examples=25)
hypothesis.settings.register_profile("thorough", max_examples=400)


@dataclass
class CliResult:
    code: int
    out: str
    err: str


def run_cli(*argv: str, stdin: str | None = None) -> CliResult:
    """Invoke the CLI in-process, capturing streams and the exit code."""
    out, err = io.StringIO(), io.StringIO()
    old_stdin = sys.stdin
    if stdin is not None:
        sys.stdin = io.StringIO(stdin)
    try:
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            try:
                code = cli.main([str(a) for a in argv])
            except SystemExit as exc:  # argparse usage errors
                code = exc.code if isinstance(exc.code, int) else 2
    finally:
        sys.stdin = old_stdin
    return CliResult(code, out.getvalue(), err.getvalue())


# ---------------------------------------------------------------------------
# Shared toy mining fixtures
# ---------------------------------------------------------------------------

FIXTURE_ROWS = [
    ("S1", ["a", "b", "c"]),
    ("S2", ["a", "c"]),
    ("S3", ["b", "c"]),
]


def toy_transactions(rows=None) -> list[Transaction]:
    """Build minimal transactions from (id, [names]) rows; items are MI."""
    rows = FIXTURE_ROWS if rows is None else rows
    out = []
    for txn_id, names in rows:
        items = tuple(
            Item("MI", name, "toy.Entity.run()", line)
            for line, name in enumerate(names, 1)
        )
        out.append(Transaction(
            id=txn_id, entity="toy.Entity.run()", block_kind="method",
            items=items, unit_path="toy/Entity.java", span=(1, len(names)),
        ))
    return out


# ---------------------------------------------------------------------------
# Source fixtures matching the documented abstraction examples
# ---------------------------------------------------------------------------

FD_FIXTURE = """package com;
import dom.ASTParser;

class Test {
    ASTParser p;
}
"""


def mi_fixture_text() -> str:
    lines = [
        "package com;",
        "",
        "class class_B {",
        "    void method_A(String s) {",
        "    }",
        "    void method_C() {",
    ]
    while len(lines) < 129:
        lines.append("        // filler")
    lines.append('        method_A("x");')  # line 130
    lines.append("    }")
    lines.append("}")
    return "\n".join(lines) + "\n"


@pytest.fixture
def abstraction_fixture_dir(tmp_path: Path) -> Path:
    root = tmp_path / "fixture-corpus"
    (root / "com").mkdir(parents=True)
    (root / "com" / "Test.java").write_text(FD_FIXTURE, encoding="utf-8")
    (root / "com" / "class_B.java").write_text(mi_fixture_text(), encoding="utf-8")
    return root


# ---------------------------------------------------------------------------
# Session-scoped built repositories
# ---------------------------------------------------------------------------

_TERMS = "Connection\nXMLParser\ngetConnection()\nActionListener\nInputMissmatchException\n"


def _write_config(root: Path, corpus_dir: Path, min_support: int = 2) -> Path:
    terms = root / "terms.txt"
    terms.write_text(_TERMS, encoding="utf-8")
    cfg = root / "esdp.cfg"
    cfg.write_text(
        f"""# generated test configuration
[options]
central = central.xml
mined = mined.xml
min_support = {min_support}
max_k = 6
terms = terms.txt

[source]
id = fx
kind = open-source-project
root = {corpus_dir}
label = generated fixture corpus

[source]
id = trend
kind = trending-terms
root = terms.txt
label = trending terms
""",
        encoding="utf-8",
    )
    return cfg


@pytest.fixture(scope="session")
def desk_paths(tmp_path_factory: pytest.TempPathFactory) -> SimpleNamespace:
    """Desk-scale corpus (60 files, 300 transactions) built and mined once."""
    root = tmp_path_factory.mktemp("desk")
    corpus_dir = root / "corpus"
    write_fixture_corpus(corpus_dir, files=60, methods_per_file=4, seed=7)
    cfg = _write_config(root, corpus_dir)
    built = run_cli("build", "--config", cfg, "--built-at", "2026-08-01T00:00:00Z")
    assert built.code == 0, built.err
    mined = run_cli("mine", "--config", cfg)
    assert mined.code == 0, mined.err
    return SimpleNamespace(
        root=root, config=cfg, corpus=corpus_dir,
        central=root / "central.xml", mined=root / "mined.xml",
        terms=root / "terms.txt",
    )


@pytest.fixture(scope="session")
def planted_paths(tmp_path_factory: pytest.TempPathFactory) -> SimpleNamespace:
    """Twenty method blocks with a three-call sequence planted in eight."""
    root = tmp_path_factory.mktemp("planted")
    corpus_dir = root / "corpus"
    planted_items = write_planted_corpus(corpus_dir, blocks=20, planted=8, seed=3)
    cfg = _write_config(root, corpus_dir)
    built = run_cli("build", "--config", cfg, "--built-at", "2026-08-01T00:00:00Z")
    assert built.code == 0, built.err
    mined = run_cli("mine", "--config", cfg)
    assert mined.code == 0, mined.err
    return SimpleNamespace(
        root=root, config=cfg, corpus=corpus_dir,
        central=root / "central.xml", mined=root / "mined.xml",
        planted=tuple(planted_items),
    )
