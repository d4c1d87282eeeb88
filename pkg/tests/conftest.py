import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from proctail import Case, Event, EventLog  # noqa: E402

T0 = datetime(2021, 3, 1, 9, 0, tzinfo=timezone.utc)


def make_case(case_id, activities, *, resources=None, gaps_s=None, contacts=None, start=T0, lifecycles=None):
    """Case from activity labels; ``gaps_s[k]`` seconds separate event k and k+1."""
    n = len(activities)
    resources = resources or ["r1"] * n
    gaps_s = gaps_s if gaps_s is not None else [60] * (n - 1)
    contacts = contacts or [False] * n
    lifecycles = lifecycles or [None] * n
    t = start
    events = []
    for k, act in enumerate(activities):
        events.append(Event(act, t, resources[k], lifecycles[k], contacts[k]))
        if k < n - 1:
            t = t + timedelta(seconds=gaps_s[k])
    return Case(case_id, tuple(events))


def make_log(traces, **kwargs):
    return EventLog(tuple(make_case(f"c{i}", t, **kwargs) for i, t in enumerate(traces)))


def random_raw_log(rng, max_cases=50, max_events=15, n_acts=6, n_res=5):
    """Random log as raw tuples (activity, time_ms, resource, contact) per case."""
    raw = []
    for _ in range(int(rng.integers(1, max_cases + 1))):
        length = int(rng.integers(1, max_events + 1))
        t = int(rng.integers(0, 10**9))
        case = []
        for _ in range(length):
            case.append((f"a{rng.integers(n_acts)}", t, f"r{rng.integers(n_res)}", bool(rng.random() < 0.3)))
            t += int(rng.integers(0, 5 * 10**6)) if rng.random() < 0.8 else 0
        raw.append(case)
    return raw


def raw_to_log(raw):
    epoch = datetime(1970, 1, 1, tzinfo=timezone.utc)
    cases = []
    for i, case in enumerate(raw):
        events = tuple(Event(a, epoch + timedelta(milliseconds=t), r, None, flag) for a, t, r, flag in case)
        cases.append(Case(f"case{i}", events))
    return EventLog(tuple(cases))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA: dict[str, str] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    name = marker.args[0]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        _CRITERIA[name] = status


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA):
        terminalreporter.write_line(f"{_CRITERIA[name]}  {name}")
