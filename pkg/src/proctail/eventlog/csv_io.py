"""CSV reading and writing (header row, RFC-4180 quoting)."""
from __future__ import annotations

import csv
import io
import logging
import os
from typing import IO

from ..exceptions import LogParseError
from ._time import format_timestamp, parse_timestamp
from .model import UNKNOWN_RESOURCE, Case, ColumnMap, ContactMode, Event, EventLog

logger = logging.getLogger(__name__)

CANONICAL_COLUMNS = ("case_id", "activity", "timestamp", "resource", "lifecycle", "customer_contact")


def _open_text(source) -> tuple[IO[str], str, bool]:
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(source.decode("utf-8-sig")), "<bytes>", False
    if isinstance(source, (str, os.PathLike)):
        name = os.fspath(source)
        return open(name, newline="", encoding="utf-8-sig"), name, True
    if isinstance(source, io.TextIOBase):
        return source, getattr(source, "name", "<stream>"), False
    return io.TextIOWrapper(source, encoding="utf-8-sig", newline=""), getattr(source, "name", "<stream>"), False


def parse_csv(source, column_map: ColumnMap | None = None, *, strict: bool = False,
              delimiter: str = ",") -> EventLog:
    """Read a CSV event log, one row per event.

    Rows are grouped into cases by the case id column, in order of first
    appearance. Columns outside the map end up in ``extra_attributes`` as
    strings, except the column consumed by an ``ATTRIBUTE_FLAG`` contact
    rule.

    Raises
    ------
    LogParseError
        If a mapped column is missing, or (strict mode only) a row has an
        unparseable timestamp or an empty activity.
    """
    cmap = column_map or ColumnMap()
    rule = cmap.customer_contact_rule
    stream, name, owned = _open_text(source)
    try:
        reader = csv.DictReader(stream, delimiter=delimiter)
        header = reader.fieldnames or []
        for col in cmap.mapped_columns:
            if col not in header:
                if col in (cmap.resource_column, cmap.lifecycle_column) and col in ("resource", "lifecycle"):
                    # optional canonical defaults may be absent
                    continue
                raise LogParseError(f"column {col!r} not found in {name}; header is {header}")
        resource_col = cmap.resource_column if cmap.resource_column in header else None
        lifecycle_col = cmap.lifecycle_column if cmap.lifecycle_column in header else None
        skip = set(cmap.mapped_columns)
        if rule.mode is ContactMode.ATTRIBUTE_FLAG:
            skip.add(rule.attribute)

        grouped: dict[str, list[Event]] = {}
        warnings: list[str] = []
        for row_no, row in enumerate(reader, start=1):
            try:
                case_id = (row.get(cmap.case_id_column) or "").strip()
                if not case_id:
                    raise ValueError("empty case id")
                activity = row.get(cmap.activity_column) or ""
                if not activity:
                    raise ValueError("empty activity")
                ts = parse_timestamp(row.get(cmap.timestamp_column) or "", cmap.timestamp_format)
            except ValueError as exc:
                msg = f"row {row_no}: {exc}"
                if strict:
                    raise LogParseError(f"{name}: {msg}", row=row_no) from exc
                warnings.append(msg + "; row dropped")
                continue
            extras = {k: v for k, v in row.items() if k not in skip and k is not None}
            resource = (row.get(resource_col) or "") if resource_col else ""
            lifecycle = (row.get(lifecycle_col) or None) if lifecycle_col else None
            contact_attrs = row if rule.mode is ContactMode.ATTRIBUTE_FLAG else extras
            grouped.setdefault(case_id, []).append(Event(
                activity=activity,
                timestamp=ts,
                resource=resource or UNKNOWN_RESOURCE,
                lifecycle=lifecycle,
                customer_contact=rule.is_contact(activity, contact_attrs),
                extra_attributes=extras,
            ))
    finally:
        if owned:
            stream.close()

    for w in warnings:
        logger.warning(w)
    cases = tuple(Case.from_events(cid, evs) for cid, evs in grouped.items())
    return EventLog(cases, {"format": "csv", "source": name}, tuple(warnings))


def write_csv(log: EventLog, dest, *, include_extra: bool = False) -> None:
    """Write ``log`` in the canonical column layout.

    The output reads back identically with
    ``ColumnMap(customer_contact_rule=CustomerContactRule.from_attribute("customer_contact"))``.
    """
    extra_cols: list[str] = []
    if include_extra:
        seen = dict.fromkeys(
            k for c in log.cases for e in c.events for k in e.extra_attributes
            if k not in CANONICAL_COLUMNS)
        extra_cols = list(seen)

    def _write(fh):
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(list(CANONICAL_COLUMNS) + extra_cols)
        for case in log.cases:
            for e in case.events:
                row = [
                    case.case_id,
                    e.activity,
                    format_timestamp(e.timestamp),
                    "" if e.resource == UNKNOWN_RESOURCE else e.resource,
                    e.lifecycle or "",
                    "true" if e.customer_contact else "false",
                ]
                row += [_scalar_text(e.extra_attributes.get(k, "")) for k in extra_cols]
                writer.writerow(row)

    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", newline="", encoding="utf-8") as fh:
            _write(fh)
    else:
        _write(dest)


def _scalar_text(value) -> str:
    if hasattr(value, "isoformat"):
        return format_timestamp(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)
