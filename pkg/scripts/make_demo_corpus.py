#!/usr/bin/env python3
"""Generate a small synthetic reading corpus for driving the pipeline.

Writes a manifest, one plain-text file per volume, and a ready-to-use
config. Documents are bags of invented words drawn from a few planted
topics with disjoint vocabularies; the mixture drifts over the reading
order (early volumes stick to the first topics, late volumes lean on the
last one), so surprise series, null comparison, and epoch detection all
have something to find.

Usage:
    python scripts/make_demo_corpus.py demo/
    readpath run --config demo/run.cfg
"""

from __future__ import annotations

import argparse
import csv
from datetime import date, timedelta
from pathlib import Path

import numpy as np

SYLLABLES = [
    "ba", "ce", "di", "fo", "gu", "ha", "je", "ki", "lo", "mu",
    "na", "pe", "qi", "ro", "su", "ta", "ve", "wi", "xo", "zu",
]


def make_word(rng: np.random.Generator, n_syllables: int = 3) -> str:
    return "".join(rng.choice(SYLLABLES) for _ in range(n_syllables))


def make_lexicon(rng: np.random.Generator, n_topics: int, words_per_topic: int) -> list[list[str]]:
    words = set()
    while len(words) < n_topics * words_per_topic:
        words.add(make_word(rng))
    flat = sorted(words)
    rng.shuffle(flat)
    return [flat[t * words_per_topic:(t + 1) * words_per_topic] for t in range(n_topics)]


def mixture_at(rng: np.random.Generator, frac: float, n_topics: int) -> np.ndarray:
    """Topic weights drifting with reading progress: mass moves from the
    first topics toward the last as frac goes 0 -> 1."""
    base = np.ones(n_topics)
    base[-1] += 6.0 * frac
    base[0] += 6.0 * (1.0 - frac)
    return rng.dirichlet(base)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("out", type=Path, help="directory for the demo corpus")
    ap.add_argument("--docs", type=int, default=24)
    ap.add_argument("--topics", type=int, default=3)
    ap.add_argument("--words-per-topic", type=int, default=30)
    ap.add_argument("--tokens", type=int, default=400, help="tokens per document")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    out = args.out
    (out / "texts").mkdir(parents=True, exist_ok=True)
    lexicon = make_lexicon(rng, args.topics, args.words_per_topic)

    start = date(1850, 3, 1)
    rows = []
    for i in range(args.docs):
        vid = f"v{i:03d}"
        read_date = start + timedelta(days=int(i * 170 + rng.integers(0, 30)))
        pub_year = read_date.year - int(rng.integers(0, 6))
        weights = mixture_at(rng, i / max(args.docs - 1, 1), args.topics)
        topics_drawn = rng.choice(args.topics, size=args.tokens, p=weights)
        words = [lexicon[t][rng.integers(0, args.words_per_topic)] for t in topics_drawn]
        # wrap lines to look like a plain-text scan
        lines = [" ".join(words[j:j + 12]) for j in range(0, len(words), 12)]
        (out / "texts" / f"{vid}.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
        rows.append([vid, f"Volume {i}", read_date.isoformat(), pub_year, f"texts/{vid}.txt"])

    with open(out / "manifest.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "title", "read_date", "pub_year", "text_path"])
        w.writerows(rows)

    (out / "run.cfg").write_text(
        "\n".join(
            [
                "[corpus]",
                "manifest = manifest.csv",
                "min_count = 1",
                "max_count = 1000000",
                "",
                "[topics]",
                f"k = {args.topics}",
                "alpha = 1.0",
                "iterations = 300",
                "",
                "[null]",
                "samples = 300",
                "",
                "[epochs]",
                "n_max = 2",
                "min_length = 4",
                "",
                "[run]",
                "out = out",
                f"seed = {args.seed}",
                "",
            ]
        ),
        encoding="utf-8",
    )
    print(f"wrote {args.docs} volumes under {out}")
    print(f"next: readpath run --config {out / 'run.cfg'}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
