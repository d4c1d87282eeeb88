"""Per-variant process indicators.

Importance: execution frequency (ef), resource utilization (ru),
customer contacts (cc). Health: activity duration variance (av),
execution time variance (etv), execution redundancies (er). Feasibility:
shared activity contexts (sac), stakeholder involvement (s), process
length (l). Feasibility values are inverted so that for every indicator a
larger value means a higher improvement priority.

Time-based indicators are in seconds squared. They are accumulated over
integer milliseconds and divided once at the end, so they are exact up
to the final float conversion.
"""
from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import astuple, dataclass, fields
from typing import Mapping, Sequence

import numpy as np

from .clustering import ClusterAssignment
from .eventlog.durations import DurationMode, event_durations_ms
from .eventlog.model import Case, CustomerContactRule, EventLog
from .exceptions import AnalysisError
from .vectorizer import END, START

INDICATORS = ("ef", "ru", "cc", "av", "etv", "er", "sac", "s", "l")
INDICATOR_NAMES = {
    "ef": "execution frequency",
    "ru": "resource utilization",
    "cc": "customer contacts",
    "av": "activity duration variance",
    "etv": "execution time variance",
    "er": "execution redundancies",
    "sac": "shared activity contexts",
    "s": "stakeholder involvement",
    "l": "process length",
}
_MS2_PER_S2 = 1_000_000


def _non_empty(cluster: Sequence[Case], op: str) -> None:
    if not cluster:
        raise AnalysisError(f"{op}: cluster is empty")


@dataclass(frozen=True)
class ResourceRegistry:
    """Log-wide execution counts per resource and optional resource costs."""

    counts: Mapping[str, int]
    costs: Mapping[str, float] | None = None

    @classmethod
    def from_log(cls, log: EventLog, costs: Mapping[str, float] | None = None) -> "ResourceRegistry":
        counts = Counter(e.resource for c in log.cases for e in c.events)
        if costs is not None:
            missing = sorted(set(counts) - set(costs))
            if missing:
                raise AnalysisError(f"cost table has no entry for resources {missing}")
            costs = {r: float(costs[r]) for r in counts}
        return cls(dict(counts), costs)

    def score(self, resource: str) -> float:
        """Resource rating: its cost, or the inverse of its log-wide execution count."""
        if resource not in self.counts:
            raise AnalysisError(f"resource {resource!r} is not in the registry")
        if self.costs is not None:
            return self.costs[resource]
        return 1.0 / self.counts[resource]


@dataclass(frozen=True)
class ContextIndex:
    """Distinct (predecessor, successor) pairs per activity, log-wide."""

    contexts: Mapping[str, frozenset[tuple[str, str]]]

    @classmethod
    def from_log(cls, log: EventLog) -> "ContextIndex":
        ctx: dict[str, set[tuple[str, str]]] = {}
        for case in log.cases:
            seq = (START,) + case.activities + (END,)
            for i in range(1, len(seq) - 1):
                ctx.setdefault(seq[i], set()).add((seq[i - 1], seq[i + 1]))
        return cls({a: frozenset(v) for a, v in ctx.items()})

    def n_contexts(self, activity: str) -> int:
        try:
            return len(self.contexts[activity])
        except KeyError:
            raise AnalysisError(f"activity {activity!r} is not in the context index") from None


@dataclass(frozen=True)
class IndicatorVector:
    ef: float
    ru: float
    cc: float
    av: float
    etv: float
    er: float
    sac: float
    s: float
    l: float  # noqa: E741

    def __post_init__(self):
        values = astuple(self)
        if not all(np.isfinite(v) and v >= 0 for v in values):
            raise AnalysisError(f"indicator values must be finite and non-negative: {self}")
        if not 0.0 <= self.cc <= 1.0:
            raise AnalysisError(f"cc out of [0, 1]: {self.cc}")
        for name in ("sac", "s", "l"):
            if not 0.0 < getattr(self, name) <= 1.0:
                raise AnalysisError(f"{name} out of (0, 1]: {getattr(self, name)}")

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)


def execution_frequency(cluster: Sequence[Case]) -> int:
    _non_empty(cluster, "execution_frequency")
    return len(cluster)


def resource_utilization(cluster: Sequence[Case], registry: ResourceRegistry) -> float:
    """Mean resource rating over all events of the cluster."""
    _non_empty(cluster, "resource_utilization")
    total = 0.0
    n = 0
    for case in cluster:
        for e in case.events:
            total += registry.score(e.resource)
            n += 1
    return total / n


def customer_contacts(cluster: Sequence[Case], rule: CustomerContactRule | None = None) -> float:
    """Share of events flagged as customer contact.

    Without ``rule`` the flags set at parse time are used.
    """
    _non_empty(cluster, "customer_contacts")
    flagged = n = 0
    for case in cluster:
        for e in case.events:
            flagged += rule.apply(e) if rule is not None else e.customer_contact
            n += 1
    return flagged / n


def activity_duration_variance(cluster: Sequence[Case],
                               mode: DurationMode | str = DurationMode.NEXT_EVENT) -> float:
    """Mean squared excess of event durations over the fastest execution
    of the same activity within the cluster, in s^2."""
    _non_empty(cluster, "activity_duration_variance")
    pairs = [(e.activity, d) for case in cluster
             for e, d in zip(case.events, event_durations_ms(case, mode))]
    return mean_squared_excess(pairs) / _MS2_PER_S2


def mean_squared_excess(pairs: Sequence[tuple[str, int]]) -> float:
    """Mean of ``(duration - fastest duration of that activity) ** 2``
    over ``(activity, duration)`` pairs, in the input's squared unit."""
    fastest: dict[str, int] = {}
    for act, d in pairs:
        if act not in fastest or d < fastest[act]:
            fastest[act] = d
    return sum((d - fastest[act]) ** 2 for act, d in pairs) / len(pairs)


def execution_time_variance(cluster: Sequence[Case]) -> float:
    """Population variance of case spans (first to last event), in s^2."""
    _non_empty(cluster, "execution_time_variance")
    spans = [c.duration_ms for c in cluster]
    n = len(spans)
    # n * sum(x^2) - sum(x)^2 is exact in integers
    num = n * sum(x * x for x in spans) - sum(spans) ** 2
    return num / (n * n) / _MS2_PER_S2


def redundant_pairs(case: Case) -> int:
    """Distinct directly-follows label pairs that occur at least twice in ``case``."""
    acts = case.activities
    counts = Counter(zip(acts, acts[1:]))
    return sum(1 for c in counts.values() if c >= 2)


def execution_redundancies(cluster: Sequence[Case]) -> int:
    _non_empty(cluster, "execution_redundancies")
    return sum(redundant_pairs(c) for c in cluster)


def shared_activity_contexts(cluster: Sequence[Case], ctx: ContextIndex) -> float:
    """Inverse of the mean log-wide context count of the cluster's events."""
    _non_empty(cluster, "shared_activity_contexts")
    total = n = 0
    for case in cluster:
        for e in case.events:
            total += ctx.n_contexts(e.activity)
            n += 1
    return n / total


def stakeholder_involvement(cluster: Sequence[Case]) -> float:
    _non_empty(cluster, "stakeholder_involvement")
    return 1.0 / len({e.resource for c in cluster for e in c.events})


def process_length(cluster: Sequence[Case]) -> float:
    """Inverse of the mean number of events per case."""
    _non_empty(cluster, "process_length")
    return len(cluster) / sum(len(c) for c in cluster)


def indicator_vector(cluster: Sequence[Case], registry: ResourceRegistry, ctx: ContextIndex,
                     mode: DurationMode | str = DurationMode.NEXT_EVENT,
                     rule: CustomerContactRule | None = None) -> IndicatorVector:
    return IndicatorVector(
        ef=execution_frequency(cluster),
        ru=resource_utilization(cluster, registry),
        cc=customer_contacts(cluster, rule),
        av=activity_duration_variance(cluster, mode),
        etv=execution_time_variance(cluster),
        er=execution_redundancies(cluster),
        sac=shared_activity_contexts(cluster, ctx),
        s=stakeholder_involvement(cluster),
        l=process_length(cluster),
    )


@dataclass(frozen=True)
class IndicatorTable:
    """One :class:`IndicatorVector` per cluster, in cluster-id order."""

    cluster_ids: tuple[int, ...]
    vectors: tuple[IndicatorVector, ...]

    def __post_init__(self):
        if len(self.cluster_ids) != len(self.vectors):
            raise ValueError("cluster_ids and vectors must align")

    def __len__(self):
        return len(self.vectors)

    @property
    def values(self) -> np.ndarray:
        """``(n_clusters, 9)`` array in :data:`INDICATORS` column order."""
        return np.array([v.as_array() for v in self.vectors]).reshape(-1, len(INDICATORS))

    @classmethod
    def from_array(cls, values, cluster_ids: Sequence[int] | None = None) -> "IndicatorTable":
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or values.shape[1] != len(INDICATORS):
            raise ValueError(f"expected shape (n, {len(INDICATORS)}), got {values.shape}")
        ids = tuple(range(len(values))) if cluster_ids is None else tuple(int(c) for c in cluster_ids)
        return cls(ids, tuple(IndicatorVector(*map(float, row)) for row in values))

    def to_records(self) -> list[dict]:
        out = []
        for cid, vec in zip(self.cluster_ids, self.vectors):
            rec = {"cluster_id": cid}
            rec.update({f.name: getattr(vec, f.name) for f in fields(vec)})
            out.append(rec)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(("cluster_id",) + INDICATORS)
        for rec in self.to_records():
            w.writerow([rec["cluster_id"]] + [repr(float(rec[k])) for k in INDICATORS])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"indicators": list(INDICATORS), "rows": self.to_records()}, indent=2)


def compute_indicator_table(log: EventLog, assignment: ClusterAssignment | Sequence[int],
                            registry: ResourceRegistry | None = None,
                            ctx: ContextIndex | None = None,
                            duration_mode: DurationMode | str = DurationMode.NEXT_EVENT,
                            rule: CustomerContactRule | None = None) -> IndicatorTable:
    """Indicators for every cluster of ``assignment``.

    ``registry`` and ``ctx`` default to indices built once over the whole
    log. Clusters with no cases raise :class:`AnalysisError`.
    """
    labels = np.asarray(getattr(assignment, "labels", assignment))
    if labels.shape != (len(log),):
        raise AnalysisError(f"assignment has {labels.size} labels but the log has {len(log)} cases")
    k = getattr(assignment, "k", int(labels.max()) + 1 if labels.size else 0)
    registry = registry or ResourceRegistry.from_log(log)
    ctx = ctx or ContextIndex.from_log(log)
    members: list[list[Case]] = [[] for _ in range(k)]
    for case, lab in zip(log.cases, labels.tolist()):
        if not 0 <= lab < k:
            raise AnalysisError(f"label {lab} outside 0..{k - 1}")
        members[lab].append(case)
    vectors = []
    for cid, cluster in enumerate(members):
        if not cluster:
            raise AnalysisError(f"cluster {cid} has no cases")
        vectors.append(indicator_vector(cluster, registry, ctx, duration_mode, rule))
    return IndicatorTable(tuple(range(k)), tuple(vectors))
