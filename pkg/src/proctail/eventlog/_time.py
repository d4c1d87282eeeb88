from __future__ import annotations

import re
from datetime import datetime

from .model import to_utc_ms

_FRACTION = re.compile(r"(\.\d+)")


def parse_iso8601(text: str) -> datetime:
    """Parse the ISO-8601 variants found in XES and CSV exports.

    Accepts a trailing ``Z``, a space instead of ``T`` and fractional
    seconds of any length (the stdlib parser on 3.10 needs 3 or 6 digits).
    """
    s = text.strip()
    if not s:
        raise ValueError("empty timestamp")
    if s[-1] in "zZ":
        s = s[:-1] + "+00:00"
    m = _FRACTION.search(s)
    if m:
        digits = m.group(1)[1:]
        digits = (digits + "000000")[:6]
        s = s[:m.start()] + "." + digits + s[m.end():]
    return to_utc_ms(datetime.fromisoformat(s))


def parse_timestamp(text: str, fmt: str = "ISO8601") -> datetime:
    if fmt.upper() == "ISO8601":
        return parse_iso8601(text)
    return to_utc_ms(datetime.strptime(text.strip(), fmt))


def format_timestamp(ts: datetime) -> str:
    return ts.isoformat(timespec="milliseconds")
