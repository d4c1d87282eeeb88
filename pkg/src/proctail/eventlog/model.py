"""In-memory event log model.

All timestamps are timezone-aware UTC datetimes truncated to milliseconds.
Durations derived from them are kept as integer milliseconds so that sums
and variances stay exact.
"""
from __future__ import annotations

import fnmatch
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence

UNKNOWN_RESOURCE = "<unknown>"

EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
_MS = timedelta(milliseconds=1)


def to_utc_ms(ts: datetime) -> datetime:
    """Return ``ts`` as an aware UTC datetime truncated to milliseconds.

    Naive datetimes are interpreted as UTC.
    """
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    else:
        ts = ts.astimezone(timezone.utc)
    return ts.replace(microsecond=ts.microsecond - ts.microsecond % 1000)


def epoch_ms(ts: datetime) -> int:
    """Milliseconds since the Unix epoch, computed without float rounding."""
    return (ts - EPOCH) // _MS


@dataclass(frozen=True)
class Event:
    activity: str
    timestamp: datetime
    resource: str = UNKNOWN_RESOURCE
    lifecycle: str | None = None
    customer_contact: bool = False
    extra_attributes: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.activity, str) or not self.activity:
            raise ValueError("event activity must be a non-empty string")
        if not isinstance(self.timestamp, datetime):
            raise TypeError(f"event timestamp must be a datetime, got {type(self.timestamp).__name__}")
        object.__setattr__(self, "timestamp", to_utc_ms(self.timestamp))
        if not self.resource:
            object.__setattr__(self, "resource", UNKNOWN_RESOURCE)

    @property
    def time_ms(self) -> int:
        return epoch_ms(self.timestamp)


@dataclass(frozen=True)
class Case:
    """One process execution.

    Events must already be sorted by timestamp; use :meth:`from_events`
    to build a case from events in file order.
    """

    case_id: str
    events: tuple[Event, ...]

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        if not self.events:
            raise ValueError(f"case {self.case_id!r} has no events")
        for prev, nxt in zip(self.events, self.events[1:]):
            if nxt.timestamp < prev.timestamp:
                raise ValueError(f"events of case {self.case_id!r} are not sorted by timestamp")

    @classmethod
    def from_events(cls, case_id: str, events: Iterable[Event]) -> "Case":
        """Sort ``events`` by timestamp, keeping file order on ties."""
        return cls(case_id, tuple(sorted(events, key=lambda e: e.timestamp)))

    def __len__(self):
        return len(self.events)

    @property
    def activities(self) -> tuple[str, ...]:
        return tuple(e.activity for e in self.events)

    @property
    def duration_ms(self) -> int:
        return self.events[-1].time_ms - self.events[0].time_ms


@dataclass(frozen=True)
class EventLog:
    cases: tuple[Case, ...]
    source_meta: Mapping[str, str] = field(default_factory=dict, compare=False)
    warnings: tuple[str, ...] = field(default=(), compare=False)
    activity_alphabet: frozenset[str] = field(init=False)
    resource_set: frozenset[str] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "cases", tuple(self.cases))
        seen = set()
        for case in self.cases:
            if case.case_id in seen:
                raise ValueError(f"duplicate case id {case.case_id!r}")
            seen.add(case.case_id)
        object.__setattr__(
            self, "activity_alphabet",
            frozenset(e.activity for c in self.cases for e in c.events))
        object.__setattr__(
            self, "resource_set",
            frozenset(e.resource for c in self.cases for e in c.events))

    def __len__(self):
        return len(self.cases)

    def __iter__(self):
        return iter(self.cases)

    @property
    def n_events(self) -> int:
        return sum(len(c) for c in self.cases)

    @property
    def case_ids(self) -> list[str]:
        return [c.case_id for c in self.cases]

    def subset(self, cases: Sequence[Case]) -> "EventLog":
        return EventLog(tuple(cases), dict(self.source_meta), self.warnings)


class ContactMode(str, Enum):
    ACTIVITY_PATTERNS = "activity_patterns"
    ATTRIBUTE_FLAG = "attribute_flag"
    NONE = "none"


_GLOB_CHARS = set("*?[")


@dataclass(frozen=True)
class CustomerContactRule:
    """Decides which events count as a customer contact.

    With ``ACTIVITY_PATTERNS`` a pattern containing glob characters is
    matched with :func:`fnmatch.fnmatchcase` against the lower-cased label;
    any other pattern is a lower-cased substring test. With
    ``ATTRIBUTE_FLAG`` the named attribute is looked up on the event
    (extra attributes first, then the event fields) and compared,
    case-insensitively, with ``truthy_values``.
    """

    mode: ContactMode = ContactMode.NONE
    patterns: tuple[str, ...] = ()
    attribute: str | None = None
    truthy_values: tuple[str, ...] = ("true", "1", "yes", "y")

    def __post_init__(self):
        object.__setattr__(self, "mode", ContactMode(self.mode))
        object.__setattr__(self, "patterns", tuple(p.lower() for p in self.patterns))
        object.__setattr__(self, "truthy_values", tuple(str(v).lower() for v in self.truthy_values))
        if self.mode is ContactMode.ACTIVITY_PATTERNS and not self.patterns:
            raise ValueError("ACTIVITY_PATTERNS contact rule needs at least one pattern")
        if self.mode is ContactMode.ATTRIBUTE_FLAG and not self.attribute:
            raise ValueError("ATTRIBUTE_FLAG contact rule needs an attribute name")

    @classmethod
    def from_patterns(cls, patterns: Iterable[str]) -> "CustomerContactRule":
        return cls(ContactMode.ACTIVITY_PATTERNS, tuple(patterns))

    @classmethod
    def from_attribute(cls, attribute: str, truthy_values=("true", "1", "yes", "y")) -> "CustomerContactRule":
        return cls(ContactMode.ATTRIBUTE_FLAG, attribute=attribute, truthy_values=tuple(truthy_values))

    def matches_activity(self, activity: str) -> bool:
        label = activity.lower()
        for pattern in self.patterns:
            if _GLOB_CHARS & set(pattern):
                if fnmatch.fnmatchcase(label, pattern):
                    return True
            elif pattern in label:
                return True
        return False

    def is_contact(self, activity: str, attributes: Mapping[str, Any] | None = None,
                   default: bool = False) -> bool:
        if self.mode is ContactMode.NONE:
            return default
        if self.mode is ContactMode.ACTIVITY_PATTERNS:
            return self.matches_activity(activity)
        value = (attributes or {}).get(self.attribute)
        if value is None:
            return False
        return str(value).strip().lower() in self.truthy_values

    def apply(self, event: Event) -> bool:
        attrs = dict(event.extra_attributes)
        attrs.setdefault("customer_contact", event.customer_contact)
        return self.is_contact(event.activity, attrs, default=event.customer_contact)


@dataclass(frozen=True)
class ColumnMap:
    case_id_column: str = "case_id"
    activity_column: str = "activity"
    timestamp_column: str = "timestamp"
    resource_column: str | None = "resource"
    lifecycle_column: str | None = "lifecycle"
    timestamp_format: str = "ISO8601"
    customer_contact_rule: CustomerContactRule = field(default_factory=CustomerContactRule)

    def __post_init__(self):
        required = [self.case_id_column, self.activity_column, self.timestamp_column]
        if not all(required):
            raise ValueError("case id, activity and timestamp columns must be named")
        if len(set(required)) != 3:
            raise ValueError(f"required columns must be distinct, got {required}")

    @property
    def mapped_columns(self) -> tuple[str, ...]:
        cols = [self.case_id_column, self.activity_column, self.timestamp_column,
                self.resource_column, self.lifecycle_column]
        return tuple(c for c in cols if c)
