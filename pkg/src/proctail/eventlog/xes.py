"""Reader for the flat subset of IEEE XES used by public BPI logs."""
from __future__ import annotations

import io
import logging
import os
import xml.etree.ElementTree as ET
from datetime import datetime
from typing import IO, Any

from ..exceptions import LogParseError
from ._time import parse_iso8601
from .model import UNKNOWN_RESOURCE, Case, CustomerContactRule, Event, EventLog

logger = logging.getLogger(__name__)

_SCALAR_TAGS = {"string", "date", "int", "float", "boolean", "id"}


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _attr_value(elem: ET.Element) -> Any:
    kind = _local(elem.tag)
    raw = elem.get("value")
    if kind not in _SCALAR_TAGS or len(elem):
        # nested containers/lists are kept as opaque XML text
        return ET.tostring(elem, encoding="unicode").strip()
    if raw is None:
        return None
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "boolean":
            return raw.strip().lower() == "true"
        if kind == "date":
            return parse_iso8601(raw)
    except ValueError:
        return raw
    return raw


def _event_from_element(elem: ET.Element, rule: CustomerContactRule) -> Event:
    attrs: dict[str, Any] = {}
    for child in elem:
        key = child.get("key")
        if key is None:
            continue
        attrs[key] = _attr_value(child)
    activity = attrs.pop("concept:name", None)
    timestamp = attrs.pop("time:timestamp", None)
    if activity in (None, ""):
        raise ValueError("event without concept:name")
    if timestamp is None:
        raise ValueError("event without time:timestamp")
    if not isinstance(timestamp, datetime):
        raise ValueError(f"unparseable time:timestamp {timestamp!r}")
    resource = attrs.pop("org:resource", None)
    if resource in (None, ""):
        resource = attrs.get("org:group") or UNKNOWN_RESOURCE
    lifecycle = attrs.pop("lifecycle:transition", None)
    activity = str(activity)
    return Event(
        activity=activity,
        timestamp=timestamp,
        resource=str(resource),
        lifecycle=None if lifecycle is None else str(lifecycle),
        customer_contact=rule.is_contact(activity, attrs),
        extra_attributes=attrs,
    )


def parse_xes(source: str | os.PathLike | IO[bytes] | bytes, *,
              contact_rule: CustomerContactRule | None = None,
              strict: bool = False) -> EventLog:
    """Read an XES document into an :class:`EventLog`.

    Parameters
    ----------
    source : path, bytes or binary file object
    contact_rule : CustomerContactRule, optional
        Sets ``Event.customer_contact``; defaults to no contacts.
    strict : bool
        Fail on the first invalid event instead of dropping it with a
        collected warning.

    Raises
    ------
    LogParseError
        On XML syntax errors (with ``position``) and, in strict mode, on
        invalid events.
    """
    rule = contact_rule or CustomerContactRule()
    name = "<bytes>"
    if isinstance(source, (bytes, bytearray)):
        stream: IO[bytes] = io.BytesIO(source)
    elif isinstance(source, (str, os.PathLike)):
        name = os.fspath(source)
        stream = open(name, "rb")
    else:
        stream = source
        name = getattr(source, "name", "<stream>")

    warnings: list[str] = []
    cases: list[Case] = []
    seen_ids: set[str] = set()
    trace_no = 0
    try:
        for _, elem in ET.iterparse(stream, events=("end",)):
            # events are read when their enclosing trace closes
            if _local(elem.tag) != "trace":
                continue
            trace_no += 1
            case_id = None
            events: list[Event] = []
            for child in elem:
                ctag = _local(child.tag)
                if ctag == "event":
                    try:
                        events.append(_event_from_element(child, rule))
                    except ValueError as exc:
                        msg = f"trace {trace_no}, event {len(events) + 1}: {exc}"
                        if strict:
                            raise LogParseError(msg) from exc
                        warnings.append(msg)
                elif child.get("key") == "concept:name":
                    case_id = child.get("value")
            elem.clear()
            if case_id is None:
                case_id = f"trace_{trace_no}"
            if case_id in seen_ids:
                msg = f"duplicate trace id {case_id!r}"
                if strict:
                    raise LogParseError(msg)
                warnings.append(msg + "; trace dropped")
                continue
            if not events:
                warnings.append(f"trace {case_id!r} has no valid events; dropped")
                continue
            seen_ids.add(case_id)
            cases.append(Case.from_events(case_id, events))
    except ET.ParseError as exc:
        raise LogParseError(f"XML syntax error in {name}: {exc}", position=exc.position) from exc
    finally:
        if isinstance(source, (str, os.PathLike)):
            stream.close()

    for w in warnings:
        logger.warning(w)
    return EventLog(tuple(cases), {"format": "xes", "source": name}, tuple(warnings))
