"""Event log model, readers/writers, preprocessing and descriptive statistics."""
from .csv_io import parse_csv, write_csv
from .durations import DurationMode, event_durations_ms
from .model import (
    UNKNOWN_RESOURCE,
    Case,
    ColumnMap,
    ContactMode,
    CustomerContactRule,
    Event,
    EventLog,
)
from .preprocess import DROP_REASONS, DropReport, PreprocessSpec, preprocess
from .stats import StatsReport, descriptive_stats
from .xes import parse_xes

__all__ = [
    "UNKNOWN_RESOURCE", "Case", "ColumnMap", "ContactMode", "CustomerContactRule",
    "DROP_REASONS", "DropReport", "DurationMode", "Event", "EventLog", "PreprocessSpec",
    "StatsReport", "descriptive_stats", "event_durations_ms", "parse_csv", "parse_xes",
    "preprocess", "write_csv",
]
