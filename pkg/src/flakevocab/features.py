"""Vocabulary fitting and document embedding.

Three term weightings are supported:

``bow``
    raw term counts.
``tfidf``
    ``tf * (ln((1 + N) / (1 + df)) + 1)``, then L2-normalized.
``tfidfc_rf``
    ``tf * idfc * rf`` with ``idfc = ln((1 + N) / (1 + a + b)) + 1`` and
    ``rf = log2(2 + a / max(1, b))``, then L2-normalized. ``a`` and ``b`` are
    the numbers of flaky and non-flaky training documents containing the term.

Keyword counts and the line count are appended after the term columns,
unnormalized.
"""

from __future__ import annotations

import hashlib
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .ingest import FLAKY, NON_FLAKY
from .lexer import KEYWORD, NAME, STRING_WORD, AuxFeatures, Lexer, Token, aux_features
from .splitter import expand_tokens

BOW = "bow"
TFIDF = "tfidf"
TFIDFC_RF = "tfidfc_rf"
SCHEMES = (BOW, TFIDF, TFIDFC_RF)

VOCAB_MAGIC = "# flakevocab vocabulary v1"


class FeatureError(ValueError):
    pass


def normalize_scheme(name: str) -> str:
    key = name.lower().replace("-", "_")
    if key not in SCHEMES:
        raise FeatureError(f"unknown weighting scheme {name!r}; expected one of {', '.join(SCHEMES)}")
    return key


def _is_flaky(label) -> bool:
    if label in (FLAKY, True, 1):
        return True
    if label in (NON_FLAKY, False, 0):
        return False
    raise FeatureError(f"label must be binary, got {label!r}")


def doc_terms(tokens: Iterable[Token], lowercase: bool = True) -> list[str]:
    """Vocabulary terms of a token stream; keywords never become terms."""
    terms = []
    for t in tokens:
        if t.kind == KEYWORD:
            continue
        if lowercase and t.kind in (NAME, STRING_WORD):
            terms.append(t.text.lower())
        else:
            terms.append(t.text)
    return terms


@dataclass(frozen=True)
class Document:
    """A test prepared for embedding: expanded tokens plus auxiliary counts."""

    tokens: tuple[Token, ...]
    aux: AuxFeatures | None = None


def prepare_document(source: str, lexer: Lexer | None = None) -> Document:
    lexer = lexer or Lexer()
    raw = lexer.tokenize(source)
    aux = aux_features(source, raw, lexer.profile.keywords)
    return Document(tuple(expand_tokens(raw)), aux)


def _doc_tokens(doc) -> Sequence[Token]:
    return doc.tokens if isinstance(doc, Document) else doc


@dataclass
class Vocabulary:
    terms: list[str]
    df: np.ndarray
    flaky_df: np.ndarray
    nonflaky_df: np.ndarray
    n_flaky: int
    n_nonflaky: int
    lowercase: bool = True
    scheme: str = BOW
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.index = {t: i for i, t in enumerate(self.terms)}
        self.df = np.asarray(self.df, dtype=np.int64)
        self.flaky_df = np.asarray(self.flaky_df, dtype=np.int64)
        self.nonflaky_df = np.asarray(self.nonflaky_df, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.index

    @property
    def n_docs(self) -> int:
        return self.n_flaky + self.n_nonflaky

    def idf(self) -> np.ndarray:
        return np.log((1.0 + self.n_docs) / (1.0 + self.df)) + 1.0

    def idfc(self) -> np.ndarray:
        return np.log((1.0 + self.n_docs) / (1.0 + self.flaky_df + self.nonflaky_df)) + 1.0

    def rf(self) -> np.ndarray:
        return relevance_factor(self.flaky_df, self.nonflaky_df)

    def term_weights(self, scheme: str) -> np.ndarray | None:
        scheme = normalize_scheme(scheme)
        if scheme == BOW:
            return None
        if scheme == TFIDF:
            return self.idf()
        return self.idfc() * self.rf()

    def decode(self, vector: dict[int, float]) -> dict[str, float]:
        return {self.terms[i]: w for i, w in vector.items()}

    def dumps(self) -> str:
        lines = [
            VOCAB_MAGIC,
            f"# n_flaky={self.n_flaky}\tn_nonflaky={self.n_nonflaky}\tscheme={self.scheme}"
            f"\tlowercase={int(self.lowercase)}",
        ]
        for i, t in enumerate(self.terms):
            lines.append(f"{t}\t{i}\t{self.df[i]}\t{self.flaky_df[i]}\t{self.nonflaky_df[i]}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Vocabulary":
        lines = text.splitlines()
        if len(lines) < 2 or lines[0] != VOCAB_MAGIC:
            raise FeatureError("not a flakevocab vocabulary (bad or missing header)")
        header = dict(item.split("=", 1) for item in lines[1].lstrip("# ").split("\t"))
        terms, df, a, b = [], [], [], []
        for lineno, line in enumerate(lines[2:], start=3):
            parts = line.split("\t")
            if len(parts) != 5 or int(parts[1]) != len(terms):
                raise FeatureError(f"vocabulary line {lineno} is malformed")
            terms.append(parts[0])
            df.append(int(parts[2]))
            a.append(int(parts[3]))
            b.append(int(parts[4]))
        return cls(
            terms, df, a, b,
            int(header["n_flaky"]), int(header["n_nonflaky"]),
            header.get("lowercase", "1") == "1", header.get("scheme", BOW),
        )

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode("utf-8")).hexdigest()


def relevance_factor(flaky_df, nonflaky_df) -> np.ndarray:
    a = np.asarray(flaky_df, dtype=np.float64)
    b = np.asarray(nonflaky_df, dtype=np.float64)
    return np.log2(2.0 + a / np.maximum(1.0, b))


def fit_vocabulary(
    train_docs: Sequence[tuple[object, object]],
    lowercase: bool = True,
    scheme: str = BOW,
) -> Vocabulary:
    """Fit term statistics on ``(document, label)`` pairs from the training split only."""
    if not train_docs:
        raise FeatureError("cannot fit a vocabulary on an empty corpus")
    df: Counter[str] = Counter()
    a: Counter[str] = Counter()
    n_flaky = 0
    for doc, label in train_docs:
        flaky = _is_flaky(label)
        n_flaky += flaky
        present = set(doc_terms(_doc_tokens(doc), lowercase))
        df.update(present)
        if flaky:
            a.update(present)
    terms = sorted(df)
    dfs = [df[t] for t in terms]
    flaky_df = [a[t] for t in terms]
    return Vocabulary(
        terms,
        dfs,
        flaky_df,
        [d - f for d, f in zip(dfs, flaky_df)],
        n_flaky,
        len(train_docs) - n_flaky,
        lowercase,
        normalize_scheme(scheme),
    )


def _counts(doc, vocab: Vocabulary) -> dict[int, int]:
    counts: dict[int, int] = {}
    for term in doc_terms(_doc_tokens(doc), vocab.lowercase):
        j = vocab.index.get(term)
        if j is not None:
            counts[j] = counts.get(j, 0) + 1
    return dict(sorted(counts.items()))


def _weighted(counts: dict[int, int], weights: np.ndarray) -> dict[int, float]:
    vec = {j: c * float(weights[j]) for j, c in counts.items()}
    norm = math.sqrt(sum(w * w for w in vec.values()))
    if norm > 0.0:
        vec = {j: w / norm for j, w in vec.items()}
    return vec


def embed_bow(doc, vocab: Vocabulary) -> dict[int, int]:
    """Raw counts keyed by term index; out-of-vocabulary terms are ignored."""
    return _counts(doc, vocab)


def embed_tfidf(doc, vocab: Vocabulary) -> dict[int, float]:
    return _weighted(_counts(doc, vocab), vocab.idf())


def embed_tfidfc_rf(doc, vocab: Vocabulary) -> dict[int, float]:
    return _weighted(_counts(doc, vocab), vocab.idfc() * vocab.rf())


def embed(doc, vocab: Vocabulary, scheme: str) -> dict[int, float]:
    weights = vocab.term_weights(scheme)
    counts = _counts(doc, vocab)
    if weights is None:
        return counts
    return _weighted(counts, weights)


@dataclass
class FeatureMatrix:
    scheme: str
    terms: sp.csr_matrix
    aux: np.ndarray | None = None
    row_ids: list[str] = field(default_factory=list)
    keywords: tuple[str, ...] = ()

    @property
    def n_rows(self) -> int:
        return self.terms.shape[0]

    @property
    def n_terms(self) -> int:
        return self.terms.shape[1]

    @property
    def n_columns(self) -> int:
        return self.n_terms + (0 if self.aux is None else self.aux.shape[1])

    def to_dense(self) -> np.ndarray:
        dense = self.terms.toarray()
        if self.aux is not None:
            dense = np.hstack([dense, self.aux])
        return np.ascontiguousarray(dense, dtype=np.float64)


def embed_corpus(docs: Sequence, vocab: Vocabulary, scheme: str, row_ids: Sequence[str] | None = None) -> FeatureMatrix:
    scheme = normalize_scheme(scheme)
    weights = vocab.term_weights(scheme)
    indptr, indices, data = [0], [], []
    for doc in docs:
        counts = _counts(doc, vocab)
        vec = counts if weights is None else _weighted(counts, weights)
        indices.extend(vec)
        data.extend(vec.values())
        indptr.append(len(indices))
    matrix = sp.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(docs), len(vocab)),
    )
    return FeatureMatrix(scheme, matrix, None, list(row_ids or []))


def append_aux(matrix: FeatureMatrix, aux: Sequence[AuxFeatures | None], keywords: Sequence[str]) -> FeatureMatrix:
    """Append keyword counts (in ``keywords`` order) and the line count."""
    if len(aux) != matrix.n_rows:
        raise FeatureError(f"aux features for {len(aux)} rows, matrix has {matrix.n_rows}")
    cols = np.zeros((matrix.n_rows, len(keywords) + 1), dtype=np.float64)
    for i, row in enumerate(aux):
        if row is None:
            raise FeatureError(f"missing aux features for row {i}")
        for j, k in enumerate(keywords):
            cols[i, j] = row.keyword_counts.get(k, 0)
        cols[i, -1] = row.loc
    return FeatureMatrix(matrix.scheme, matrix.terms, cols, matrix.row_ids, tuple(keywords))


def build_features(docs: Sequence[Document], vocab: Vocabulary, scheme: str, keywords: Sequence[str], row_ids=None) -> FeatureMatrix:
    matrix = embed_corpus(docs, vocab, scheme, row_ids)
    return append_aux(matrix, [d.aux for d in docs], keywords)
