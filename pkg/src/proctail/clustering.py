"""Ward agglomerative clustering, dendrogram cuts and validity indices.

Merge heights are Ward distances, ``sqrt(2 * dSSE)`` where ``dSSE`` is the
increase in total within-cluster sum of squares caused by the merge. This
is the scale scipy's ``linkage(method="ward")`` uses, so the exported
linkage matrix plugs straight into scipy's dendrogram plotting.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from ._validation import as_feature_array, check_positive_int
from .exceptions import AnalysisError
from .vectorizer import FeatureMatrix, squared_distances

TIE_TOLERANCE = 1e-12
MONOTONE_TOLERANCE = 1e-9
NOT_APPLICABLE = None


@dataclass(frozen=True)
class Merge:
    left: int
    right: int
    height: float
    size: int

    @property
    def cost(self) -> float:
        """Increase of within-cluster sum of squares caused by this merge."""
        return self.height * self.height / 2.0


@dataclass(frozen=True)
class Dendrogram:
    """Ward merge tree over ``n_leaves`` leaves.

    Leaves are nodes ``0..n-1``; merge ``t`` creates node ``n + t``.
    """

    n_leaves: int
    merges: tuple[Merge, ...]

    def __post_init__(self):
        if len(self.merges) != self.n_leaves - 1:
            raise ValueError("a dendrogram over n leaves needs exactly n - 1 merges")

    @property
    def heights(self) -> np.ndarray:
        return np.array([m.height for m in self.merges])

    def to_linkage(self) -> np.ndarray:
        """``(n-1, 4)`` array ``[left, right, height, size]`` as used by scipy."""
        return np.array([[m.left, m.right, m.height, m.size] for m in self.merges], dtype=float).reshape(-1, 4)

    def to_dict(self) -> dict:
        return {
            "n_leaves": self.n_leaves,
            "merges": [{"left": m.left, "right": m.right, "height": m.height, "size": m.size}
                       for m in self.merges],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["left", "right", "height", "size"])
        for m in self.merges:
            w.writerow([m.left, m.right, repr(m.height), m.size])
        return buf.getvalue()

    @classmethod
    def from_dict(cls, data: dict) -> "Dendrogram":
        return cls(int(data["n_leaves"]),
                   tuple(Merge(int(m["left"]), int(m["right"]), float(m["height"]), int(m["size"]))
                         for m in data["merges"]))


def ward_cluster(fm: FeatureMatrix | np.ndarray) -> Dendrogram:
    """Agglomerative Ward clustering of the rows of ``fm``.

    Cluster distances are maintained with the Lance-Williams recurrence on
    squared Euclidean distances. Each step merges the closest pair; pairs
    within ``TIE_TOLERANCE`` of the minimum are ranked by
    ``(min node id, max node id)`` so results are deterministic.

    Raises
    ------
    AnalysisError
        If there are fewer than two rows.
    """
    X = as_feature_array(fm)
    n = X.shape[0]
    if n < 2:
        raise AnalysisError(f"ward_cluster needs at least 2 cases, got {n}")

    D = squared_distances(X)
    np.fill_diagonal(D, np.inf)
    sizes = np.ones(n)
    node = np.arange(n)  # node id currently stored in each slot
    active = np.ones(n, dtype=bool)
    rowmin = D.min(axis=1)
    rowarg = D.argmin(axis=1)

    merges: list[Merge] = []
    for step in range(n - 1):
        m = rowmin.min()
        thr = m + TIE_TOLERANCE
        cand_rows = np.flatnonzero(rowmin <= thr)
        sub = D[cand_rows] <= thr
        ri, cj = np.nonzero(sub)
        pi, pj = cand_rows[ri], cj
        lo = np.minimum(node[pi], node[pj])
        hi = np.maximum(node[pi], node[pj])
        best = np.lexsort((hi, lo))[0]
        p, q = int(pi[best]), int(pj[best])
        if p > q:
            p, q = q, p
        d_pq = D[p, q]
        n_p, n_q = sizes[p], sizes[q]

        merges.append(Merge(int(lo[best]), int(hi[best]), float(np.sqrt(max(d_pq, 0.0))), int(n_p + n_q)))

        # Lance-Williams update, the merged cluster takes slot p
        others = active.copy()
        others[[p, q]] = False
        n_k = sizes[others]
        total = n_p + n_q + n_k
        new = ((n_p + n_k) * D[p, others] + (n_q + n_k) * D[q, others] - n_k * d_pq) / total
        D[p, others] = new
        D[others, p] = new
        D[q, :] = np.inf
        D[:, q] = np.inf
        active[q] = False
        sizes[p] = n_p + n_q
        node[p] = n + step
        rowmin[q] = np.inf

        stale = others & ((rowarg == p) | (rowarg == q))
        if stale.any():
            idx = np.flatnonzero(stale)
            rowarg[idx] = D[idx].argmin(axis=1)
            rowmin[idx] = D[idx, rowarg[idx]]
        better = others & (D[:, p] < rowmin)
        rowmin[better] = D[better, p]
        rowarg[better] = p
        rowarg[p] = D[p].argmin()
        rowmin[p] = D[p, rowarg[p]]

    dendro = Dendrogram(n, tuple(merges))
    check_monotone(dendro)
    return dendro


def check_monotone(d: Dendrogram, tol: float = MONOTONE_TOLERANCE) -> None:
    h = d.heights
    if len(h) > 1:
        drop = h[:-1] - h[1:]
        bad = drop > tol * np.maximum(1.0, np.abs(h[:-1]))
        if bad.any():
            t = int(np.flatnonzero(bad)[0])
            raise AnalysisError(f"merge heights decrease at merge {t + 1}: {h[t]!r} -> {h[t + 1]!r}")


@dataclass(frozen=True)
class ClusterAssignment:
    """Flat clustering; ids ordered by decreasing size, ties by smallest leaf."""

    k: int
    labels: np.ndarray

    def clusters(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.labels == c) for c in range(self.k)]

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)


def canonical_labels(raw: Sequence[int]) -> np.ndarray:
    """Relabel an arbitrary partition by (decreasing size, smallest member)."""
    raw = np.asarray(raw)
    groups: dict[int, list[int]] = {}
    for i, r in enumerate(raw.tolist()):
        groups.setdefault(r, []).append(i)
    order = sorted(groups.values(), key=lambda members: (-len(members), members[0]))
    labels = np.empty(len(raw), dtype=np.int64)
    for cid, members in enumerate(order):
        labels[members] = cid
    return labels


def cut_dendrogram(d: Dendrogram, k: int) -> ClusterAssignment:
    """Partition obtained by undoing the last ``k - 1`` merges."""
    n = d.n_leaves
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or not 1 <= k <= n:
        raise AnalysisError(f"cut_dendrogram: k must be within 1..{n}, got {k!r}")
    parent = list(range(2 * n - 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for t, m in enumerate(d.merges[: n - k]):
        parent[find(m.left)] = n + t
        parent[find(m.right)] = n + t
    raw = [find(i) for i in range(n)]
    return ClusterAssignment(int(k), canonical_labels(raw))


def elbow_data(d: Dendrogram) -> list[tuple[int, float]]:
    """``(k, height)`` pairs: the height at which k+1 clusters become k."""
    n = d.n_leaves
    return [(n - 1 - t, m.height) for t, m in enumerate(d.merges)]


@dataclass(frozen=True)
class ValidityRow:
    k: int
    within_cluster_ss: float
    silhouette: float | None
    dunn: float | None
    calinski_harabasz: float | None


@dataclass(frozen=True)
class ValidityReport:
    rows: tuple[ValidityRow, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["k", "within_cluster_ss", "silhouette", "dunn", "calinski_harabasz"])
        for r in self.rows:
            w.writerow([r.k] + ["NA" if v is None else repr(float(v))
                                for v in (r.within_cluster_ss, r.silhouette, r.dunn, r.calinski_harabasz)])
        return buf.getvalue()


def within_cluster_ss(X: np.ndarray, labels: np.ndarray) -> float:
    total = 0.0
    for c in np.unique(labels):
        pts = X[labels == c]
        total += float(((pts - pts.mean(axis=0)) ** 2).sum())
    return total


def silhouette(D: np.ndarray, labels: np.ndarray) -> float | None:
    """Mean silhouette from a square distance matrix.

    Members of singleton clusters score 0. Undefined (None) unless
    ``2 <= k <= n - 1``.
    """
    n = len(labels)
    ids = np.unique(labels)
    k = len(ids)
    if not 2 <= k <= n - 1:
        return NOT_APPLICABLE
    counts = np.array([(labels == c).sum() for c in ids])
    sums = np.stack([D[:, labels == c].sum(axis=1) for c in ids], axis=1)
    pos = np.searchsorted(ids, labels)
    own = counts[pos]
    a = np.where(own > 1, sums[np.arange(n), pos] / np.maximum(own - 1, 1), 0.0)
    mean_other = sums / counts
    mean_other[np.arange(n), pos] = np.inf
    b = mean_other.min(axis=1)
    denom = np.maximum(a, b)
    s = np.where((own > 1) & (denom > 0), (b - a) / np.where(denom > 0, denom, 1.0), 0.0)
    return float(s.mean())


def dunn_index(D: np.ndarray, labels: np.ndarray) -> float | None:
    """Smallest single-linkage separation over largest cluster diameter."""
    ids = np.unique(labels)
    if len(ids) < 2:
        return NOT_APPLICABLE
    diam = 0.0
    sep = np.inf
    for i, a in enumerate(ids):
        in_a = labels == a
        diam = max(diam, float(D[np.ix_(in_a, in_a)].max()))
        for b in ids[i + 1:]:
            sep = min(sep, float(D[np.ix_(in_a, labels == b)].min()))
    if diam == 0.0:
        return NOT_APPLICABLE
    return sep / diam


def calinski_harabasz(X: np.ndarray, labels: np.ndarray) -> float | None:
    n = len(labels)
    ids = np.unique(labels)
    k = len(ids)
    if not 2 <= k <= n - 1:
        return NOT_APPLICABLE
    centre = X.mean(axis=0)
    between = 0.0
    within = 0.0
    for c in ids:
        pts = X[labels == c]
        mu = pts.mean(axis=0)
        between += len(pts) * float(((mu - centre) ** 2).sum())
        within += float(((pts - mu) ** 2).sum())
    if within == 0.0:
        return NOT_APPLICABLE
    return (between / (k - 1)) / (within / (n - k))


def validity_sweep(fm: FeatureMatrix | np.ndarray, d: Dendrogram, ks: Iterable[int]) -> ValidityReport:
    """Validity indices for each k in ``ks``.

    Indices that are undefined for a given k (singleton-only or single
    cluster partitions, zero spread) are reported as None.
    """
    X = as_feature_array(fm).astype(np.float64)
    if X.shape[0] != d.n_leaves:
        raise AnalysisError("feature matrix and dendrogram disagree on the number of cases")
    D = np.sqrt(np.maximum(squared_distances(as_feature_array(fm)), 0.0))
    rows = []
    for k in ks:
        labels = cut_dendrogram(d, int(k)).labels
        rows.append(ValidityRow(
            k=int(k),
            within_cluster_ss=within_cluster_ss(X, labels),
            silhouette=silhouette(D, labels),
            dunn=dunn_index(D, labels),
            calinski_harabasz=calinski_harabasz(X, labels),
        ))
    return ValidityReport(tuple(rows))


class WardClustering(ClusterMixin, BaseEstimator):
    """Estimator wrapper around :func:`ward_cluster` and :func:`cut_dendrogram`.

    Parameters
    ----------
    n_clusters : int, default=2

    Attributes
    ----------
    dendrogram_ : Dendrogram
    labels_ : ndarray of shape (n_samples,)
    """

    def __init__(self, n_clusters=2):
        self.n_clusters = n_clusters

    def fit(self, X, y=None):
        check_positive_int(self.n_clusters, "n_clusters")
        self.dendrogram_ = ward_cluster(X)
        self.labels_ = cut_dendrogram(self.dendrogram_, self.n_clusters).labels
        return self

    def cut(self, n_clusters: int) -> ClusterAssignment:
        """Re-cut the fitted tree without re-running the clustering."""
        return cut_dendrogram(self.dendrogram_, n_clusters)
