"""Corpus ingestion: tokenization, proper-noun filtering, and sparse term matrices.

Documents are keyed by (entity, year). The end product of this module is a
:class:`SparseTermMatrix` (terms x documents), the input shared by every
scaling method in the package.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

__all__ = [
    "DocKey",
    "RawDocument",
    "Vocabulary",
    "SparseTermMatrix",
    "CorpusVariantConfig",
    "tokenize",
    "strip_proper_nouns",
    "build_term_matrix",
    "apply_variant",
    "build_corpus",
    "load_corpus_dir",
    "load_corpus_jsonl",
    "load_stoplist",
    "save_matrix",
    "load_matrix",
]

# Maximal runs of letters, allowing internal apostrophes or hyphens.
# Digits, underscores and punctuation act as separators.
_TOKEN_RE = re.compile(r"[^\W\d_]+(?:['\-][^\W\d_]+)*")


@dataclass(frozen=True, order=True)
class DocKey:
    """Identity of one document: an entity (e.g. a country code) and a year."""

    entity: str
    year: int

    def __post_init__(self):
        if not self.entity:
            raise ValueError("DocKey entity must be non-empty")
        if any(ch.isspace() for ch in self.entity):
            raise ValueError(f"DocKey entity may not contain whitespace: {self.entity!r}")

    def __str__(self):
        return f"{self.entity}_{self.year}"


@dataclass(frozen=True)
class RawDocument:
    """All text belonging to one key, merged into a single string."""

    key: DocKey
    text: str


@dataclass
class Vocabulary:
    """Ordered unique terms with their document frequencies."""

    words: list[str]
    df: np.ndarray
    index: dict[str, int] = field(repr=False, default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            dupes = [w for w, c in Counter(self.words).items() if c > 1]
            raise ValueError(f"duplicate words in vocabulary: {dupes[:5]}")
        self.df = np.asarray(self.df, dtype=np.int64)
        if len(self.df) != len(self.words):
            raise ValueError("df length does not match vocabulary size")

    def __len__(self):
        return len(self.words)

    def __eq__(self, other):
        if not isinstance(other, Vocabulary):
            return NotImplemented
        return self.words == other.words and np.array_equal(self.df, other.df)


@dataclass
class SparseTermMatrix:
    """Term-frequency counts, terms on rows and documents on columns."""

    vocab: Vocabulary
    doc_keys: list[DocKey]
    counts: sp.csc_matrix

    def __post_init__(self):
        self.counts = sp.csc_matrix(self.counts)
        self.counts.eliminate_zeros()
        if self.counts.shape != (len(self.vocab), len(self.doc_keys)):
            raise ValueError(
                f"count matrix shape {self.counts.shape} does not match "
                f"{len(self.vocab)} words x {len(self.doc_keys)} documents"
            )
        if len(set(self.doc_keys)) != len(self.doc_keys):
            raise ValueError("duplicate document keys")
        if self.counts.nnz and self.counts.data.min() <= 0:
            raise ValueError("stored counts must be positive")

    @property
    def n_words(self):
        return len(self.vocab)

    @property
    def n_docs(self):
        return len(self.doc_keys)

    @property
    def nnz(self):
        return self.counts.nnz

    def doc_index(self, key: DocKey) -> int:
        try:
            return self._key_index[key]
        except AttributeError:
            self._key_index = {k: j for j, k in enumerate(self.doc_keys)}
            return self._key_index[key]

    def column(self, key: DocKey) -> np.ndarray:
        """Dense count vector of one document."""
        j = self.doc_index(key)
        return np.asarray(self.counts[:, j].todense()).ravel()

    def token_counts(self) -> np.ndarray:
        """Total tokens per document (column sums)."""
        return np.asarray(self.counts.sum(axis=0)).ravel().astype(np.int64)

    def recomputed_df(self) -> np.ndarray:
        return np.diff(sp.csr_matrix(self.counts).indptr).astype(np.int64)


@dataclass
class CorpusVariantConfig:
    """Which corpus variant to build.

    Variant A keeps everything. Variant B additionally drops stoplist words
    and words that never reach ``min_max_in_doc_count`` occurrences inside a
    single document.
    """

    variant: str = "A"
    stoplist: frozenset[str] = frozenset()
    min_max_in_doc_count: int = 2

    def __post_init__(self):
        if self.variant not in ("A", "B"):
            raise ValueError(f"variant must be 'A' or 'B', got {self.variant!r}")
        self.stoplist = frozenset(w.lower() for w in self.stoplist)
        if self.variant == "B" and not self.stoplist:
            raise ValueError("variant B requires a non-empty stoplist")


def tokenize(text: str) -> list[str]:
    """Split text into tokens, preserving original case.

    A token is a maximal run of letters, possibly joined by internal
    apostrophes or hyphens. Everything else separates tokens.
    """
    return _TOKEN_RE.findall(text)


def strip_proper_nouns(token_lists: list[list[str]]) -> list[list[str]]:
    """Drop words that are capitalized in every occurrence across the corpus.

    The test is corpus-wide and case-insensitive: if some occurrence of a
    word starts with a lowercase letter, all its occurrences survive. The
    output is lowercased. Idempotent.
    """
    always_capitalized: dict[str, bool] = {}
    for tokens in token_lists:
        for tok in tokens:
            low = tok.lower()
            cap = tok[:1].isupper()
            always_capitalized[low] = always_capitalized.get(low, True) and cap
    return [
        [t.lower() for t in tokens if not always_capitalized[t.lower()]]
        for tokens in token_lists
    ]


def build_term_matrix(token_lists: list[list[str]], doc_keys: list[DocKey]) -> SparseTermMatrix:
    """Count token multiplicities into a sparse terms x documents matrix.

    Vocabulary is the sorted union of tokens; document frequency is derived
    from the counts.
    """
    if len(token_lists) != len(doc_keys):
        raise ValueError(
            f"{len(token_lists)} token lists but {len(doc_keys)} document keys"
        )
    seen: set[DocKey] = set()
    for key in doc_keys:
        if key in seen:
            raise ValueError(f"duplicate document key: {key}")
        seen.add(key)

    words = sorted(set().union(*token_lists)) if token_lists else []
    index = {w: i for i, w in enumerate(words)}
    rows, cols, data = [], [], []
    for j, tokens in enumerate(token_lists):
        for word, count in Counter(tokens).items():
            rows.append(index[word])
            cols.append(j)
            data.append(count)
    counts = sp.csc_matrix(
        (data, (rows, cols)), shape=(len(words), len(doc_keys)), dtype=np.int64
    )
    df = np.diff(sp.csr_matrix(counts).indptr).astype(np.int64)
    vocab = Vocabulary(words=words, df=df, index=index)
    return SparseTermMatrix(vocab=vocab, doc_keys=list(doc_keys), counts=counts)


def apply_variant(matrix: SparseTermMatrix, config: CorpusVariantConfig) -> SparseTermMatrix:
    """Apply a corpus variant. Variant A is the identity.

    Variant B removes stoplist words and words whose maximum within-document
    count is below ``min_max_in_doc_count``, then reindexes the vocabulary.
    """
    if config.variant == "A":
        return matrix
    max_in_doc = np.asarray(matrix.counts.max(axis=1).todense()).ravel()
    keep = np.array(
        [
            w not in config.stoplist and max_in_doc[i] >= config.min_max_in_doc_count
            for i, w in enumerate(matrix.vocab.words)
        ],
        dtype=bool,
    )
    if not keep.any():
        raise ValueError("variant B filtering removed the entire vocabulary")
    kept_words = [w for w, k in zip(matrix.vocab.words, keep) if k]
    counts = sp.csc_matrix(matrix.counts[keep, :])
    df = np.diff(sp.csr_matrix(counts).indptr).astype(np.int64)
    vocab = Vocabulary(words=kept_words, df=df)
    return SparseTermMatrix(vocab=vocab, doc_keys=list(matrix.doc_keys), counts=counts)


def build_corpus(docs: list[RawDocument], config: CorpusVariantConfig | None = None) -> SparseTermMatrix:
    """Full ingestion pipeline: tokenize, strip proper nouns, count, filter."""
    config = config or CorpusVariantConfig()
    token_lists = strip_proper_nouns([tokenize(d.text) for d in docs])
    matrix = build_term_matrix(token_lists, [d.key for d in docs])
    return apply_variant(matrix, config)


def load_corpus_dir(path: str | Path, year_range: tuple[int, int] | None = None) -> list[RawDocument]:
    """Read a directory of ``<entity>_<year>.txt`` files, sorted by name."""
    path = Path(path)
    docs = []
    for file in sorted(path.glob("*.txt")):
        stem = file.stem
        entity, sep, year_str = stem.rpartition("_")
        if not sep or not entity:
            raise ValueError(f"cannot parse document file name: {file.name}")
        key = DocKey(entity=entity, year=_parse_year(year_str, file.name, year_range))
        docs.append(RawDocument(key=key, text=file.read_text(encoding="utf-8")))
    return docs


def load_corpus_jsonl(path: str | Path, year_range: tuple[int, int] | None = None) -> list[RawDocument]:
    """Read a JSON-lines corpus with ``entity``, ``year`` and ``text`` fields."""
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            try:
                entity, year, text = record["entity"], record["year"], record["text"]
            except KeyError as exc:
                raise ValueError(f"line {lineno}: missing field {exc}") from None
            key = DocKey(entity=str(entity), year=_parse_year(year, f"line {lineno}", year_range))
            docs.append(RawDocument(key=key, text=text))
    return docs


def _parse_year(value, where, year_range):
    try:
        year = int(value)
    except (TypeError, ValueError):
        raise ValueError(f"{where}: year {value!r} is not an integer") from None
    if year_range is not None and not (year_range[0] <= year <= year_range[1]):
        raise ValueError(f"{where}: year {year} outside configured range {year_range}")
    return year


def load_stoplist(path: str | Path) -> frozenset[str]:
    """One word per line; blank lines ignored, everything lowercased."""
    words = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip().lower()
            if word:
                words.append(word)
    return frozenset(words)


def save_matrix(matrix: SparseTermMatrix, path: str | Path) -> None:
    """Write the documented text format.

    Header ``m n nnz``, then m vocabulary words (one per line), then n
    document keys as ``entity year``, then nnz triples
    ``word_index doc_index count``.
    """
    with open(path, "w", encoding="utf-8") as fh:
        _write_matrix(matrix, fh)


def dumps_matrix(matrix: SparseTermMatrix) -> str:
    import io

    buf = io.StringIO()
    _write_matrix(matrix, buf)
    return buf.getvalue()


def _write_matrix(matrix: SparseTermMatrix, fh) -> None:
    coo = matrix.counts.tocoo()
    order = np.lexsort((coo.row, coo.col))
    fh.write(f"{matrix.n_words} {matrix.n_docs} {matrix.nnz}\n")
    for word in matrix.vocab.words:
        fh.write(word + "\n")
    for key in matrix.doc_keys:
        fh.write(f"{key.entity} {key.year}\n")
    for idx in order:
        fh.write(f"{coo.row[idx]} {coo.col[idx]} {coo.data[idx]}\n")


def load_matrix(path: str | Path) -> SparseTermMatrix:
    """Read the format written by :func:`save_matrix`."""
    with open(path, encoding="utf-8") as fh:
        return _read_matrix(fh)


def loads_matrix(text: str) -> SparseTermMatrix:
    import io

    return _read_matrix(io.StringIO(text))


def _read_matrix(fh) -> SparseTermMatrix:
    header = fh.readline().split()
    if len(header) != 3:
        raise ValueError(f"bad matrix header: {header}")
    m, n, nnz = (int(x) for x in header)
    words = [fh.readline().rstrip("\n") for _ in range(m)]
    keys = []
    for _ in range(n):
        entity, year = fh.readline().split()
        keys.append(DocKey(entity=entity, year=int(year)))
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    data = np.empty(nnz, dtype=np.int64)
    for i in range(nnz):
        r, c, v = fh.readline().split()
        rows[i], cols[i], data[i] = int(r), int(c), int(v)
    counts = sp.csc_matrix((data, (rows, cols)), shape=(m, n), dtype=np.int64)
    df = np.diff(sp.csr_matrix(counts).indptr).astype(np.int64)
    vocab = Vocabulary(words=words, df=df)
    return SparseTermMatrix(vocab=vocab, doc_keys=keys, counts=counts)
