"""Per-event activity durations."""
from __future__ import annotations

from collections import defaultdict, deque
from enum import Enum

from .model import Case


class DurationMode(str, Enum):
    """How the execution time of a single event is derived.

    ``NEXT_EVENT``
        time until the next event of the same case; the last event gets 0.
    ``LIFECYCLE_PAIR``
        ``start`` and ``complete`` events of the same activity label are
        paired first-in-first-out; both events of a pair carry the pair's
        duration, unmatched events get 0.
    """

    NEXT_EVENT = "next_event"
    LIFECYCLE_PAIR = "lifecycle_pair"


_START = {"start"}
_COMPLETE = {"complete"}


def event_durations_ms(case: Case, mode: DurationMode | str = DurationMode.NEXT_EVENT) -> list[int]:
    """Duration of every event of ``case`` in integer milliseconds."""
    mode = DurationMode(mode)
    times = [e.time_ms for e in case.events]
    if mode is DurationMode.NEXT_EVENT:
        return [b - a for a, b in zip(times, times[1:])] + [0]

    out = [0] * len(times)
    open_starts: dict[str, deque[int]] = defaultdict(deque)
    for idx, event in enumerate(case.events):
        transition = (event.lifecycle or "").lower()
        if transition in _START:
            open_starts[event.activity].append(idx)
        elif transition in _COMPLETE and open_starts[event.activity]:
            start_idx = open_starts[event.activity].popleft()
            out[start_idx] = out[idx] = times[idx] - times[start_idx]
    return out
