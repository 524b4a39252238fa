#!/usr/bin/env python3
"""Generate a synthetic source corpus for benchmarks and experiments.

Examples:
    python scripts/make_fixture_corpus.py out/corpus --files 60
    python scripts/make_fixture_corpus.py out/planted --style planted
    python scripts/make_fixture_corpus.py out/broken --style broken --files 8
"""

import argparse

from esdp.corpusgen import (
    write_fixture_corpus,
    write_planted_corpus,
    write_random_corpus,
)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("root", help="directory to write the corpus into")
    parser.add_argument("--style", choices=["fixture", "planted", "broken"],
                        default="fixture")
    parser.add_argument("--files", type=int, default=60)
    parser.add_argument("--methods", type=int, default=4,
                        help="methods per file (fixture style)")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    if args.style == "fixture":
        count = write_fixture_corpus(args.root, files=args.files,
                                     methods_per_file=args.methods, seed=args.seed)
    elif args.style == "planted":
        planted = write_planted_corpus(args.root, blocks=args.files or 20,
                                       planted=max(2, (args.files or 20) * 2 // 5),
                                       seed=args.seed)
        print("planted items:")
        for kind, name in planted:
            print(f"  {kind} {name}")
        count = args.files or 20
    else:
        count = write_random_corpus(args.root, files=args.files, seed=args.seed,
                                    broken_ratio=0.4)
    print(f"wrote {count} files under {args.root}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
