"""Normalization, prioritization score, Pareto split and contribution shares."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import ceil_fraction, check_fraction
from .exceptions import AnalysisError
from .indicators import INDICATORS, IndicatorTable

SHORT_HEAD = "short_head"
LONG_TAIL = "long_tail"


@dataclass(frozen=True)
class NormalizedTable:
    cluster_ids: tuple[int, ...]
    values: np.ndarray  # (n_clusters, 9), in [0, 1]
    minimum: np.ndarray
    maximum: np.ndarray
    constant: np.ndarray  # bool per indicator

    def __len__(self):
        return len(self.cluster_ids)


def minmax_columns(values: np.ndarray, minimum=None, maximum=None):
    """Column-wise min-max scaling; constant columns map to 0."""
    values = np.asarray(values, dtype=float)
    lo = values.min(axis=0) if minimum is None else np.asarray(minimum, dtype=float)
    hi = values.max(axis=0) if maximum is None else np.asarray(maximum, dtype=float)
    span = hi - lo
    constant = span <= 0
    scaled = np.where(constant, 0.0, (values - lo) / np.where(constant, 1.0, span))
    return np.clip(scaled, 0.0, 1.0), lo, hi, constant


def normalize(table: IndicatorTable | np.ndarray, cluster_ids: Sequence[int] | None = None) -> NormalizedTable:
    """Min-max scale every indicator over the clusters."""
    if isinstance(table, IndicatorTable):
        values, ids = table.values, table.cluster_ids
    else:
        values = np.asarray(table, dtype=float)
        ids = tuple(range(len(values))) if cluster_ids is None else tuple(cluster_ids)
    if values.ndim != 2 or values.shape[0] < 1:
        raise AnalysisError("normalize needs at least one row")
    scaled, lo, hi, constant = minmax_columns(values)
    return NormalizedTable(tuple(int(i) for i in ids), scaled, lo, hi, constant)


def _weights(weights, n_features: int) -> np.ndarray:
    if weights is None:
        return np.ones(n_features)
    w = np.asarray(weights, dtype=float)
    if w.shape != (n_features,) or np.any(w < 0) or not np.any(w > 0):
        raise AnalysisError(f"weights must be {n_features} non-negative numbers, not all zero")
    return w


def aggregate_score(row, weights=None) -> float:
    """Weighted quadratic mean of normalized indicator values.

    With the default equal weights this is ``sqrt(sum(v**2) / 9)``.
    """
    v = np.asarray(row, dtype=float)
    w = _weights(weights, v.shape[-1])
    return float(np.sqrt(np.dot(w, v * v) / w.sum()))


def aggregate_scores(values: np.ndarray, weights=None) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    w = _weights(weights, values.shape[1])
    return np.sqrt((values * values) @ w / w.sum())


@dataclass(frozen=True)
class RankedVariant:
    cluster_id: int
    aggregate_score: float
    rank: int
    segment: str


@dataclass(frozen=True)
class LongTailReport:
    variants: tuple[RankedVariant, ...]  # in rank order
    pareto_fraction: float
    k: int

    @property
    def n_clusters(self) -> int:
        return len(self.variants)

    @property
    def head(self) -> list[int]:
        return [v.cluster_id for v in self.variants if v.segment == SHORT_HEAD]

    @property
    def tail(self) -> list[int]:
        return [v.cluster_id for v in self.variants if v.segment == LONG_TAIL]

    @property
    def score_curve(self) -> list[float]:
        return [v.aggregate_score for v in self.variants]

    def to_dict(self) -> dict:
        return {
            "parameters": {"pareto_fraction": self.pareto_fraction, "k": self.k,
                           "n_clusters": self.n_clusters, "head_size": len(self.head)},
            "variants": [{"rank": v.rank, "cluster_id": v.cluster_id,
                          "aggregate_score": v.aggregate_score, "segment": v.segment}
                         for v in self.variants],
            "score_curve": self.score_curve,
        }


def rank_and_split(nt: NormalizedTable, pareto_fraction: float = 0.2, weights=None,
                   k: int | None = None) -> LongTailReport:
    """Rank clusters by aggregate score and mark the top ``ceil(fraction * n)`` as short head.

    Equal scores are ordered by cluster id.
    """
    fraction = check_fraction(pareto_fraction)
    scores = aggregate_scores(nt.values, weights)
    ids = np.asarray(nt.cluster_ids)
    order = np.lexsort((ids, -scores))
    head_size = ceil_fraction(fraction, len(ids))
    variants = tuple(
        RankedVariant(int(ids[i]), float(scores[i]), r + 1, SHORT_HEAD if r < head_size else LONG_TAIL)
        for r, i in enumerate(order))
    return LongTailReport(variants, fraction, len(ids) if k is None else int(k))


@dataclass(frozen=True)
class Share:
    head_share: float
    tail_share: float
    applicable: bool  # False when the indicator has zero total mass


@dataclass(frozen=True)
class ContributionReport:
    """Head/tail shares in percent of each indicator's normalized mass."""

    per_indicator: dict[str, Share]
    aggregate: Share

    def to_dict(self) -> dict:
        def row(s: Share):
            return {"head_share": s.head_share, "tail_share": s.tail_share,
                    "status": "ok" if s.applicable else "not_applicable"}
        return {"per_indicator": {k: row(v) for k, v in self.per_indicator.items()},
                "aggregate": row(self.aggregate)}


def _share(head_mass: float, total_mass: float, head_count: int, n: int) -> Share:
    if total_mass <= 0:
        head = 100.0 * head_count / n
        return Share(head, 100.0 - head, False)
    head = min(100.0, max(0.0, 100.0 * head_mass / total_mass))
    return Share(head, 100.0 - head, True)


def contribution_analysis(nt: NormalizedTable, report: LongTailReport,
                          names: Sequence[str] = INDICATORS) -> ContributionReport:
    """Share of each indicator's total normalized value held by the short head.

    An indicator with zero total mass falls back to the head's share of
    clusters and is marked not applicable.
    """
    if set(report.head) | set(report.tail) != set(nt.cluster_ids):
        raise AnalysisError("report does not cover the same clusters as the normalized table")
    head_ids = set(report.head)
    in_head = np.array([cid in head_ids for cid in nt.cluster_ids])
    n, h = len(in_head), int(in_head.sum())
    per = {}
    for j, name in enumerate(names):
        col = nt.values[:, j]
        per[name] = _share(float(col[in_head].sum()), float(col.sum()), h, n)
    agg = _share(float(nt.values[in_head].sum()), float(nt.values.sum()), h, n)
    return ContributionReport(per, agg)


def distribution_export(nt: NormalizedTable, report: LongTailReport,
                        names: Sequence[str] = INDICATORS) -> dict[str, list[tuple[int, int, float]]]:
    """Per-indicator ``(rank, cluster_id, value)`` rows sorted by value descending,
    plus the ``"aggregate"`` score curve. Ties are ordered by cluster id."""
    ids = np.asarray(nt.cluster_ids)
    out: dict[str, list[tuple[int, int, float]]] = {}
    for j, name in enumerate(names):
        col = nt.values[:, j]
        order = np.lexsort((ids, -col))
        out[name] = [(r + 1, int(ids[i]), float(col[i])) for r, i in enumerate(order)]
    out["aggregate"] = [(v.rank, v.cluster_id, v.aggregate_score) for v in report.variants]
    return out


def distribution_csv(rows: list[tuple[int, int, float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["rank", "cluster_id", "value"])
    for rank, cid, value in rows:
        w.writerow([rank, cid, repr(value)])
    return buf.getvalue()


def report_json(report: LongTailReport, contributions: ContributionReport | None = None,
                nt: NormalizedTable | None = None) -> str:
    data = report.to_dict()
    if nt is not None:
        data["normalization"] = {
            name: {"min": float(nt.minimum[j]), "max": float(nt.maximum[j]), "constant": bool(nt.constant[j])}
            for j, name in enumerate(INDICATORS)}
    if contributions is not None:
        data["contributions"] = contributions.to_dict()
    return json.dumps(data, indent=2)


class LongTailRanker(TransformerMixin, BaseEstimator):
    """Min-max normalize raw indicator rows and split them into head and tail.

    ``transform`` applies the fitted min-max scaling, clipped to [0, 1].
    ``predict`` compares aggregate scores with the lowest score that made
    the fitted short head.

    Parameters
    ----------
    pareto_fraction : float, default=0.2
    weights : array-like of shape (n_indicators,), optional

    Attributes
    ----------
    min_, max_, constant_ : ndarray
    scores_ : ndarray
        Aggregate score of each fitted row.
    segments_ : ndarray of str
    threshold_ : float
        Lowest aggregate score inside the fitted short head.
    """

    def __init__(self, pareto_fraction=0.2, weights=None):
        self.pareto_fraction = pareto_fraction
        self.weights = weights

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        nt = normalize(X)
        report = rank_and_split(nt, self.pareto_fraction, self.weights)
        self.min_, self.max_, self.constant_ = nt.minimum, nt.maximum, nt.constant
        self.n_features_in_ = X.shape[1]
        self.scores_ = aggregate_scores(nt.values, self.weights)
        seg = {v.cluster_id: v.segment for v in report.variants}
        self.segments_ = np.array([seg[i] for i in range(len(X))])
        self.ranks_ = np.empty(len(X), dtype=np.int64)
        for v in report.variants:
            self.ranks_[v.cluster_id] = v.rank
        self.threshold_ = min(v.aggregate_score for v in report.variants if v.segment == SHORT_HEAD)
        return self

    def transform(self, X):
        check_is_fitted(self, "min_")
        X = check_array(X, dtype=float)
        return minmax_columns(X, self.min_, self.max_)[0]

    def score_samples(self, X):
        return aggregate_scores(self.transform(X), self.weights)

    def predict(self, X):
        """1 for rows scoring at or above the fitted head threshold, else 0."""
        return (self.score_samples(X) >= self.threshold_).astype(int)
