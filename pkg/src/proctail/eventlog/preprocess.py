from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from datetime import datetime

from .model import Case, EventLog, to_utc_ms

DROP_REASONS = ("missing_start_activity", "missing_end_activity", "too_few_events", "outside_window")


@dataclass(frozen=True)
class PreprocessSpec:
    """Case filter criteria; unset criteria are disabled.

    A case is kept when it contains at least one activity from
    ``required_start_activities`` and at least one from
    ``required_end_activities``, has ``min_events`` or more events, and its
    first event lies inside ``drop_cases_outside`` (inclusive bounds).
    """

    required_start_activities: frozenset[str] | None = None
    required_end_activities: frozenset[str] | None = None
    min_events: int = 1
    drop_cases_outside: tuple[datetime, datetime] | None = None

    def __post_init__(self):
        if self.min_events < 1:
            raise ValueError("min_events must be >= 1")
        for name in ("required_start_activities", "required_end_activities"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, frozenset(value))
        if self.drop_cases_outside is not None:
            lo, hi = (to_utc_ms(t) for t in self.drop_cases_outside)
            if hi < lo:
                raise ValueError("window end precedes window start")
            object.__setattr__(self, "drop_cases_outside", (lo, hi))

    def drop_reason(self, case: Case) -> str | None:
        """First failing criterion for ``case``, or None if it is kept."""
        acts = set(case.activities)
        if self.required_start_activities is not None and not acts & self.required_start_activities:
            return "missing_start_activity"
        if self.required_end_activities is not None and not acts & self.required_end_activities:
            return "missing_end_activity"
        if len(case) < self.min_events:
            return "too_few_events"
        if self.drop_cases_outside is not None:
            lo, hi = self.drop_cases_outside
            if not lo <= case.events[0].timestamp <= hi:
                return "outside_window"
        return None


@dataclass
class DropReport:
    cases_in: int
    cases_out: int
    events_in: int
    events_out: int
    drops: dict[str, int] = field(default_factory=lambda: dict.fromkeys(DROP_REASONS, 0))

    @property
    def empty_result(self) -> bool:
        return self.cases_out == 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["empty_result"] = self.empty_result
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv_rows(self) -> list[tuple[str, int]]:
        rows = [("cases_in", self.cases_in), ("cases_out", self.cases_out),
                ("events_in", self.events_in), ("events_out", self.events_out)]
        rows += [(f"dropped_{k}", v) for k, v in self.drops.items()]
        return rows


def preprocess(log: EventLog, spec: PreprocessSpec | None = None) -> tuple[EventLog, DropReport]:
    """Filter cases of ``log`` by ``spec``.

    Each dropped case is counted once, under the first criterion it fails
    (in :data:`DROP_REASONS` order). An empty result is allowed here and
    flagged by :attr:`DropReport.empty_result`.
    """
    spec = spec or PreprocessSpec()
    kept = []
    report = DropReport(len(log), 0, log.n_events, 0)
    for case in log.cases:
        reason = spec.drop_reason(case)
        if reason is None:
            kept.append(case)
        else:
            report.drops[reason] += 1
    out = log.subset(kept)
    report.cases_out = len(out)
    report.events_out = out.n_events
    return out, report
