"""n-gram feature space over traces and pairwise Euclidean distances."""
from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import squareform
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_feature_array
from .eventlog.model import Case, EventLog
from .exceptions import AnalysisError, EmptyLogError

START = "<START>"
END = "<END>"


class Weighting(str, Enum):
    COUNT = "count"
    BINARY = "binary"


@dataclass(frozen=True)
class NGramConfig:
    sizes: tuple[int, ...] = (2, 3)
    boundary_sentinels: bool = True
    weighting: Weighting = Weighting.COUNT

    def __post_init__(self):
        sizes = tuple(sorted(set(int(s) for s in self.sizes)))
        if not sizes:
            raise ValueError("n-gram sizes must not be empty")
        if any(s not in (1, 2, 3) for s in sizes):
            raise ValueError(f"n-gram sizes must be within 1..3, got {sizes}")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "weighting", Weighting(self.weighting))

    @classmethod
    def parse(cls, text: str, **kwargs) -> "NGramConfig":
        """Build from a comma list such as ``"2,3"``."""
        return cls(tuple(int(t) for t in text.split(",") if t.strip()), **kwargs)


def _labels(trace) -> tuple[str, ...]:
    if isinstance(trace, Case):
        return trace.activities
    return tuple(trace)


def trace_to_ngrams(trace: Case | Sequence[str], cfg: NGramConfig = NGramConfig()) -> Counter:
    """Multiset of n-grams (tuples of labels) occurring in ``trace``.

    With sentinels the trace is padded to ``[START, a1, ..., am, END]``
    before windows are taken. BINARY weighting caps every multiplicity at 1.
    """
    seq = _labels(trace)
    if cfg.boundary_sentinels:
        seq = (START,) + seq + (END,)
    grams: Counter = Counter()
    for n in cfg.sizes:
        for i in range(len(seq) - n + 1):
            grams[seq[i:i + n]] += 1
    if cfg.weighting is Weighting.BINARY:
        grams = Counter(dict.fromkeys(grams, 1))
    return grams


def ngram_label(gram: tuple[str, ...]) -> str:
    return " > ".join(gram)


class NGramVectorizer(TransformerMixin, BaseEstimator):
    """Turn traces into sparse n-gram count vectors.

    Traces may be :class:`Case` objects or plain sequences of activity
    labels. Columns follow first-occurrence order over the fitted traces;
    n-grams unseen during ``fit`` are ignored by ``transform``.

    Parameters
    ----------
    sizes : tuple of int, default=(2, 3)
    boundary_sentinels : bool, default=True
    weighting : {"count", "binary"}, default="count"

    Attributes
    ----------
    vocabulary_ : dict
        Maps n-gram tuples to column indices.
    """

    def __init__(self, sizes=(2, 3), boundary_sentinels=True, weighting="count"):
        self.sizes = sizes
        self.boundary_sentinels = boundary_sentinels
        self.weighting = weighting

    def _config(self) -> NGramConfig:
        return NGramConfig(tuple(self.sizes), self.boundary_sentinels, Weighting(self.weighting))

    def fit(self, X, y=None):
        cfg = self._config()
        vocab: dict[tuple[str, ...], int] = {}
        n_traces = 0
        for trace in X:
            n_traces += 1
            for gram in trace_to_ngrams(trace, cfg):
                if gram not in vocab:
                    vocab[gram] = len(vocab)
        if n_traces == 0:
            raise EmptyLogError("cannot fit a vectorizer on zero traces")
        self.vocabulary_ = vocab
        self.n_features_out_ = len(vocab)
        return self

    def transform(self, X) -> sp.csr_matrix:
        check_is_fitted(self, "vocabulary_")
        cfg = self._config()
        indptr, indices, data = [0], [], []
        for trace in X:
            grams = trace_to_ngrams(trace, cfg)
            cols = sorted((self.vocabulary_[g], c) for g, c in grams.items() if g in self.vocabulary_)
            indices.extend(col for col, _ in cols)
            data.extend(c for _, c in cols)
            indptr.append(len(indices))
        return sp.csr_matrix(
            (np.asarray(data, dtype=np.int64), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
            shape=(len(indptr) - 1, len(self.vocabulary_)),
        )

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "vocabulary_")
        return np.asarray([ngram_label(g) for g in self.vocabulary_], dtype=object)


@dataclass(frozen=True)
class FeatureMatrix:
    """Case-by-n-gram matrix; ``rows`` is a CSR matrix of int64 weights."""

    feature_index: dict[tuple[str, ...], int]
    rows: sp.csr_matrix
    case_ids: tuple[str, ...]

    def __post_init__(self):
        if self.rows.shape[0] != len(self.case_ids):
            raise ValueError("row count must equal number of case ids")

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows.shape

    def toarray(self) -> np.ndarray:
        return self.rows.toarray()

    def feature_labels(self) -> list[str]:
        return [ngram_label(g) for g in self.feature_index]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["case_id"] + self.feature_labels())
        for cid, row in zip(self.case_ids, self.toarray()):
            w.writerow([cid] + row.tolist())
        return buf.getvalue()


def build_vector_space(log: EventLog | Iterable[Case], cfg: NGramConfig = NGramConfig()) -> FeatureMatrix:
    cases = list(log.cases if isinstance(log, EventLog) else log)
    if not cases:
        raise EmptyLogError("build_vector_space needs a non-empty log")
    vec = NGramVectorizer(cfg.sizes, cfg.boundary_sentinels, cfg.weighting.value)
    rows = vec.fit_transform(cases)
    return FeatureMatrix(dict(vec.vocabulary_), rows, tuple(c.case_id for c in cases))


def squared_distances(X) -> np.ndarray:
    """Square matrix of squared Euclidean distances between rows of ``X``.

    Integer features go through an exact int64 Gram product. Float
    features are differenced pair by pair so each entry has a fixed
    summation order.
    """
    arr = as_feature_array(X)
    n = arr.shape[0]
    if arr.dtype == np.int64:
        gram = arr @ arr.T
        sq = np.diag(gram)
        d2 = (sq[:, None] + sq[None, :] - 2 * gram).astype(np.float64)
        np.fill_diagonal(d2, 0.0)
        return d2
    d2 = np.zeros((n, n))
    for i in range(n - 1):
        diff = arr[i + 1:] - arr[i]
        d2[i, i + 1:] = np.einsum("ij,ij->i", diff, diff)
    return d2 + d2.T


@dataclass(frozen=True)
class DistanceMatrix:
    """Pairwise distances in condensed (upper-triangle, row-major) form."""

    n: int
    condensed: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        expected = self.n * (self.n - 1) // 2
        if self.condensed.shape != (expected,):
            raise ValueError(f"condensed array must have length {expected}")

    def __getitem__(self, ij) -> float:
        i, j = ij
        if i == j:
            return 0.0
        if i > j:
            i, j = j, i
        return float(self.condensed[self.n * i - i * (i + 1) // 2 + (j - i - 1)])

    def square(self) -> np.ndarray:
        return squareform(self.condensed, checks=False)

    def to_csv(self) -> str:
        labels = list(self.labels) or [str(i) for i in range(self.n)]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow([""] + labels)
        for lab, row in zip(labels, self.square()):
            w.writerow([lab] + [repr(float(v)) for v in row])
        return buf.getvalue()


def distance_matrix(fm: FeatureMatrix | np.ndarray) -> DistanceMatrix:
    """Euclidean distances between all pairs of rows (at least two rows)."""
    n = fm.shape[0]
    if n < 2:
        raise AnalysisError(f"distance_matrix needs at least 2 rows, got {n}")
    d2 = squared_distances(fm)
    cond = np.sqrt(d2[np.triu_indices(n, k=1)])
    return DistanceMatrix(n, cond, tuple(getattr(fm, "case_ids", ())))
