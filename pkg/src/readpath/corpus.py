"""Reading-manifest ingestion and term-count corpus construction.

A corpus starts from a CSV manifest describing an ordered reading list
(one row per volume: identity, date read, publication year, path to the
plain text). Texts are tokenized with a fixed normalization pipeline,
globally frequency-filtered, and packed into an immutable sparse
count matrix whose row order is the reading order.
"""

from __future__ import annotations

import csv
import functools
import hashlib
import json
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass
from datetime import date
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import InputError

CACHE_FORMAT_VERSION = 1

MANIFEST_COLUMNS = ("id", "title", "read_date", "pub_year", "text_path")

# A hyphen glued to the following line break marks a word split by
# typesetting; both characters are deleted to rejoin the word. Hyphens
# inside a line are left alone (the token is later dropped as
# punctuation-bearing).
_HYPHEN_LINEBREAK = re.compile(r"-\r?\n")


@dataclass(frozen=True)
class VolumeRecord:
    """One volume in the reading sequence."""

    id: str
    title: str
    read_date: date
    read_seq: int
    pub_year: int
    text_path: Path


@dataclass(frozen=True)
class TokenizerConfig:
    min_count: int = 30
    max_count: int = 15000
    stopword_path: Path | None = None  # None = packaged English list

    def __post_init__(self):
        if not (0 <= self.min_count <= self.max_count):
            raise ValueError(
                f"need 0 <= min_count <= max_count, got [{self.min_count}, {self.max_count}]"
            )


@dataclass(frozen=True)
class Vocabulary:
    """Bijection between retained token strings and dense indices.

    Tokens are stored in lexicographic order, so index assignment is a
    pure function of the token set. ``frequencies[i]`` is the corpus-wide
    count of ``tokens[i]``.
    """

    tokens: tuple[str, ...]
    frequencies: tuple[int, ...]

    def __post_init__(self):
        if len(self.tokens) != len(self.frequencies):
            raise ValueError("tokens and frequencies must align")
        if any(f <= 0 for f in self.frequencies):
            raise ValueError("every retained token needs a positive frequency")

    @functools.cached_property
    def index(self) -> dict[str, int]:
        return {tok: i for i, tok in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index


class CorpusMatrix:
    """Per-document sparse token counts over vocabulary indices (CSR layout).

    Document order is reading order. Stored counts are strictly positive
    and per-document indices are ascending.
    """

    def __init__(self, indptr: np.ndarray, indices: np.ndarray, counts: np.ndarray, n_vocab: int):
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.counts = np.asarray(counts, dtype=np.int64)
        self.n_vocab = int(n_vocab)
        if self.indptr.ndim != 1 or self.indptr[0] != 0 or self.indptr[-1] != len(self.indices):
            raise ValueError("malformed indptr")
        if np.any(np.diff(self.indptr) < 0):
            raise ValueError("indptr must be nondecreasing")
        if len(self.indices) != len(self.counts):
            raise ValueError("indices and counts must align")
        if len(self.indices) and (self.indices.min() < 0 or self.indices.max() >= self.n_vocab):
            raise ValueError("token index out of vocabulary range")
        if np.any(self.counts <= 0):
            raise ValueError("stored counts must be positive")

    @property
    def n_docs(self) -> int:
        return len(self.indptr) - 1

    @property
    def total_tokens(self) -> int:
        return int(self.counts.sum())

    def doc(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """(vocab indices, counts) of document ``i``."""
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.counts[lo:hi]

    def token_streams(self) -> tuple[np.ndarray, np.ndarray]:
        """Expand counts into parallel (document, vocab index) arrays with
        one entry per token occurrence, in document order."""
        doc_of = np.repeat(np.arange(self.n_docs, dtype=np.int64), np.diff(self.indptr))
        doc_of = np.repeat(doc_of, self.counts)
        word_of = np.repeat(self.indices, self.counts)
        return doc_of, word_of


def default_stopword_path() -> Path:
    return Path(str(resources.files("readpath").joinpath("data/stopwords_english.txt")))


def load_stopwords(path: Path | None = None) -> frozenset[str]:
    """Read a newline-delimited stopword file (UTF-8, one token per line)."""
    p = Path(path) if path is not None else default_stopword_path()
    if not p.exists():
        raise InputError(f"stopword file not found: {p}")
    words = set()
    for line in p.read_text(encoding="utf-8").splitlines():
        tok = line.strip()
        if tok:
            words.add(tok.lower())
    return frozenset(words)


@functools.lru_cache(maxsize=8)
def _cached_stopwords(path_key: str | None) -> frozenset[str]:
    return load_stopwords(Path(path_key) if path_key else None)


def load_manifest(path: Path | str) -> list[VolumeRecord]:
    """Read a reading-list CSV and return validated records in reading order.

    Rows are sorted by read date; rows sharing a date keep their file order
    (the manifest's row order is the tie order). ``read_seq`` is the 0-based
    position after sorting. A record is rejected when its id repeats, its
    date does not parse, its publication year postdates the reading year,
    or its text file is missing.
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"manifest not found: {path}")
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != MANIFEST_COLUMNS:
            raise InputError(
                f"manifest header must be {','.join(MANIFEST_COLUMNS)}, got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(MANIFEST_COLUMNS):
                raise InputError(f"manifest line {lineno}: expected {len(MANIFEST_COLUMNS)} fields")
            rows.append((lineno, [c.strip() for c in row]))

    parsed = []
    seen_ids = set()
    for lineno, (rid, title, read_date_s, pub_year_s, text_path_s) in rows:
        if rid in seen_ids:
            raise InputError(f"duplicate record id {rid!r} (manifest line {lineno})")
        seen_ids.add(rid)
        try:
            read_date = date.fromisoformat(read_date_s)
        except ValueError as exc:
            raise InputError(f"record {rid!r}: unparsable read_date {read_date_s!r}") from exc
        try:
            pub_year = int(pub_year_s)
        except ValueError as exc:
            raise InputError(f"record {rid!r}: unparsable pub_year {pub_year_s!r}") from exc
        if pub_year > read_date.year:
            raise InputError(
                f"record {rid!r}: pub_year {pub_year} is after reading year {read_date.year}"
            )
        text_path = (path.parent / text_path_s).resolve() if not Path(text_path_s).is_absolute() else Path(text_path_s)
        if not text_path.exists():
            raise InputError(f"record {rid!r}: text file not found: {text_path}")
        parsed.append((read_date, rid, title, pub_year, text_path))

    # Stable sort: ties on read_date keep manifest row order.
    parsed.sort(key=lambda t: t[0])
    return [
        VolumeRecord(id=rid, title=title, read_date=rd, read_seq=i, pub_year=py, text_path=tp)
        for i, (rd, rid, title, py, tp) in enumerate(parsed)
    ]


def tokenize(text: str, config: TokenizerConfig) -> list[str]:
    """Normalize raw text to a token list.

    Pipeline, in order: rejoin words split by a hyphen + line break;
    transliterate to ASCII (NFKD decomposition, unmappable characters
    dropped); split on whitespace; drop tokens containing anything but
    letters (digits, punctuation, including apostrophes); lowercase;
    drop stopwords. Deterministic; empty output is allowed.
    """
    text = _HYPHEN_LINEBREAK.sub("", text)
    text = unicodedata.normalize("NFKD", text).encode("ascii", "ignore").decode("ascii")
    stopwords = _cached_stopwords(str(config.stopword_path) if config.stopword_path else None)
    out = []
    for raw in text.split():
        if not raw.isalpha():
            continue
        tok = raw.lower()
        if tok in stopwords:
            continue
        out.append(tok)
    return out


def build_corpus(
    records: list[VolumeRecord], config: TokenizerConfig
) -> tuple[Vocabulary, CorpusMatrix]:
    """Tokenize every record's text and build the frequency-filtered corpus.

    Global token frequencies are computed over the whole reading list;
    tokens with corpus frequency outside [min_count, max_count] are removed
    everywhere. A document left with zero tokens is an error: every
    document must be able to carry a topic distribution downstream.
    """
    doc_tokens = []
    for rec in records:
        try:
            text = rec.text_path.read_text(encoding="utf-8")
        except OSError as exc:
            raise InputError(f"record {rec.id!r}: cannot read text file: {exc}") from exc
        doc_tokens.append(tokenize(text, config))

    freq = Counter()
    for toks in doc_tokens:
        freq.update(toks)
    retained = {t: c for t, c in freq.items() if config.min_count <= c <= config.max_count}

    ordered = sorted(retained)
    vocab = Vocabulary(tokens=tuple(ordered), frequencies=tuple(retained[t] for t in ordered))
    index = vocab.index

    indptr = [0]
    indices: list[int] = []
    counts: list[int] = []
    for rec, toks in zip(records, doc_tokens):
        doc_counts = Counter(t for t in toks if t in index)
        if not doc_counts:
            raise InputError(
                f"record {rec.id!r}: no tokens remain after frequency filtering"
            )
        for tok in sorted(doc_counts):
            indices.append(index[tok])
            counts.append(doc_counts[tok])
        indptr.append(len(indices))

    matrix = CorpusMatrix(
        indptr=np.asarray(indptr, dtype=np.int64),
        indices=np.asarray(indices, dtype=np.int64),
        counts=np.asarray(counts, dtype=np.int64),
        n_vocab=len(vocab),
    )
    return vocab, matrix


def ingest_stats(vocab: Vocabulary, matrix: CorpusMatrix) -> dict:
    """Summary counts; the token total is tallied from vocabulary
    frequencies, independently of the matrix."""
    return {
        "documents": matrix.n_docs,
        "tokens": int(sum(vocab.frequencies)),
        "vocabulary": len(vocab),
    }


def _cache_payload(records: list[VolumeRecord], vocab: Vocabulary, matrix: CorpusMatrix) -> dict:
    return {
        "format_version": CACHE_FORMAT_VERSION,
        "kind": "corpus-cache",
        "records": [
            {
                "id": r.id,
                "title": r.title,
                "read_date": r.read_date.isoformat(),
                "read_seq": r.read_seq,
                "pub_year": r.pub_year,
                "text_path": str(r.text_path),
            }
            for r in records
        ],
        "vocabulary": {"tokens": list(vocab.tokens), "frequencies": list(vocab.frequencies)},
        "documents": {
            "indptr": matrix.indptr.tolist(),
            "indices": matrix.indices.tolist(),
            "counts": matrix.counts.tolist(),
        },
    }


def canonical_json_bytes(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def corpus_fingerprint(vocab: Vocabulary, matrix: CorpusMatrix) -> str:
    """SHA-256 over the canonical serialization of vocabulary + counts."""
    payload = {
        "tokens": list(vocab.tokens),
        "indptr": matrix.indptr.tolist(),
        "indices": matrix.indices.tolist(),
        "counts": matrix.counts.tolist(),
    }
    return hashlib.sha256(canonical_json_bytes(payload)).hexdigest()


def save_cache(path: Path | str, records: list[VolumeRecord], vocab: Vocabulary, matrix: CorpusMatrix) -> None:
    """Write the corpus artifact as canonical JSON (byte-stable across runs)."""
    Path(path).write_bytes(canonical_json_bytes(_cache_payload(records, vocab, matrix)))


def load_cache(path: Path | str) -> tuple[list[VolumeRecord], Vocabulary, CorpusMatrix]:
    path = Path(path)
    if not path.exists():
        raise InputError(f"corpus cache not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"corpus cache {path} is not valid JSON: {exc}") from exc
    if payload.get("kind") != "corpus-cache" or payload.get("format_version") != CACHE_FORMAT_VERSION:
        raise InputError(f"corpus cache {path}: unsupported format tag")
    records = [
        VolumeRecord(
            id=r["id"],
            title=r["title"],
            read_date=date.fromisoformat(r["read_date"]),
            read_seq=r["read_seq"],
            pub_year=r["pub_year"],
            text_path=Path(r["text_path"]),
        )
        for r in payload["records"]
    ]
    vocab = Vocabulary(
        tokens=tuple(payload["vocabulary"]["tokens"]),
        frequencies=tuple(payload["vocabulary"]["frequencies"]),
    )
    docs = payload["documents"]
    matrix = CorpusMatrix(
        indptr=np.asarray(docs["indptr"], dtype=np.int64),
        indices=np.asarray(docs["indices"], dtype=np.int64),
        counts=np.asarray(docs["counts"], dtype=np.int64),
        n_vocab=len(vocab),
    )
    return records, vocab, matrix
