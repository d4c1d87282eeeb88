from __future__ import annotations

import csv
import io
import json
from collections import Counter, defaultdict
from dataclasses import dataclass

from ..exceptions import EmptyLogError
from .durations import DurationMode, event_durations_ms
from .model import EventLog


def _sorted_desc(mapping: dict) -> dict:
    return dict(sorted(mapping.items(), key=lambda kv: (-kv[1], kv[0])))


@dataclass(frozen=True)
class StatsReport:
    """Descriptive log statistics.

    The three mappings are ordered by descending value (ties by label),
    ready to plot as bar charts. Mean durations are in seconds.
    """

    n_cases: int
    n_events: int
    min_trace_length: int
    max_trace_length: int
    activity_counts: dict[str, int]
    activity_mean_duration: dict[str, float]
    resource_involvement: dict[str, int]
    duration_mode: str

    def to_dict(self) -> dict:
        return {
            "n_cases": self.n_cases,
            "n_events": self.n_events,
            "min_trace_length": self.min_trace_length,
            "max_trace_length": self.max_trace_length,
            "duration_mode": self.duration_mode,
            "activity_counts": self.activity_counts,
            "activity_mean_duration_s": self.activity_mean_duration,
            "resource_involvement": self.resource_involvement,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)

    def to_csv(self) -> str:
        """Long format: ``section,label,value``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["section", "label", "value"])
        for key in ("n_cases", "n_events", "min_trace_length", "max_trace_length"):
            w.writerow(["summary", key, getattr(self, key)])
        for section, mapping in (("activity_count", self.activity_counts),
                                 ("activity_mean_duration_s", self.activity_mean_duration),
                                 ("resource_involvement", self.resource_involvement)):
            for label, value in mapping.items():
                w.writerow([section, label, repr(value) if isinstance(value, float) else value])
        return buf.getvalue()


def descriptive_stats(log: EventLog, duration_mode: DurationMode | str = DurationMode.NEXT_EVENT) -> StatsReport:
    if not len(log):
        raise EmptyLogError("descriptive_stats needs a non-empty log")
    mode = DurationMode(duration_mode)
    counts: Counter[str] = Counter()
    resources: Counter[str] = Counter()
    dur_total: dict[str, int] = defaultdict(int)
    for case in log.cases:
        for event, dur in zip(case.events, event_durations_ms(case, mode)):
            counts[event.activity] += 1
            resources[event.resource] += 1
            dur_total[event.activity] += dur
    lengths = [len(c) for c in log.cases]
    means = {a: dur_total[a] / counts[a] / 1000.0 for a in counts}
    return StatsReport(
        n_cases=len(log),
        n_events=sum(lengths),
        min_trace_length=min(lengths),
        max_trace_length=max(lengths),
        activity_counts=_sorted_desc(dict(counts)),
        activity_mean_duration=_sorted_desc(means),
        resource_involvement=_sorted_desc(dict(resources)),
        duration_mode=mode.value,
    )
