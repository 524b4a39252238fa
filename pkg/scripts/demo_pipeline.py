#!/usr/bin/env python3
"""End-to-end demo: generate a corpus, build, mine, query, and benchmark.

    python scripts/demo_pipeline.py out/demo
"""

import argparse
from pathlib import Path

from esdp.cli import main as esdp
from esdp.corpusgen import write_fixture_corpus

TERMS = "Connection\nXMLParser\ngetConnection()\nActionListener\nInputMissmatchException\n"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("workdir", help="working directory for the demo artifacts")
    parser.add_argument("--files", type=int, default=60)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    workdir = Path(args.workdir)
    corpus_dir = workdir / "corpus"
    workdir.mkdir(parents=True, exist_ok=True)
    write_fixture_corpus(corpus_dir, files=args.files, seed=args.seed)
    (workdir / "terms.txt").write_text(TERMS, encoding="utf-8")
    config = workdir / "esdp.cfg"
    config.write_text(
        "[options]\n"
        "central = central.xml\n"
        "mined = mined.xml\n"
        "min_support = 2\n"
        "max_k = 6\n"
        "terms = terms.txt\n"
        "\n"
        "[source]\n"
        "id = fx\n"
        "kind = open-source-project\n"
        "root = corpus\n"
        "label = generated demo corpus\n"
        "\n"
        "[source]\n"
        "id = trend\n"
        "kind = trending-terms\n"
        "root = terms.txt\n"
        "label = trending terms\n",
        encoding="utf-8",
    )

    for step in (
        ["build", "--config", str(config)],
        ["mine", "--config", str(config)],
        ["query", "--config", str(config), "--skeleton", "getConnection()"],
        ["bench", "--config", str(config), "--out", str(workdir / "bench.csv")],
        ["stats", "--config", str(config)],
    ):
        print(f"\n$ esdp {' '.join(step)}")
        code = esdp(step)
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
