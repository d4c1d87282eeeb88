"""Seeded synthetic event logs with Zipf-distributed variant frequencies."""
from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

import numpy as np

from .eventlog.model import Case, Event, EventLog
from .vectorizer import trace_to_ngrams


@dataclass(frozen=True)
class SynthSpec:
    n_templates: int = 20
    zipf_exponent: float = 1.0
    length_range: tuple[int, int] = (4, 10)
    n_activities: int = 30
    n_resources: int = 15
    contact_fraction: float = 0.2
    duration_mu: float = 8.0  # log-seconds
    duration_sigma: float = 1.0
    n_cases: int = 500
    seed: int = 42
    start: datetime = datetime(2020, 1, 1, tzinfo=timezone.utc)

    def __post_init__(self):
        if self.n_templates < 1:
            raise ValueError("n_templates must be >= 1")
        if self.n_cases < self.n_templates:
            raise ValueError("n_cases must be >= n_templates")
        if self.zipf_exponent <= 0:
            raise ValueError("zipf_exponent must be > 0")
        lo, hi = self.length_range
        if not 1 <= lo <= hi:
            raise ValueError("length_range must satisfy 1 <= low <= high")
        if self.n_activities < 1 or self.n_resources < 1:
            raise ValueError("need at least one activity and one resource")
        if not 0 <= self.contact_fraction <= 1:
            raise ValueError("contact_fraction must be within [0, 1]")
        if self.duration_sigma < 0:
            raise ValueError("duration_sigma must be >= 0")


def zipf_probabilities(n: int, exponent: float) -> np.ndarray:
    """Probability of rank ``v = 1..n`` proportional to ``v ** -exponent``."""
    w = np.arange(1, n + 1, dtype=float) ** -exponent
    return w / w.sum()


@dataclass(frozen=True)
class SyntheticLog:
    log: EventLog
    templates: tuple[tuple[str, ...], ...]
    template_of_case: tuple[int, ...]

    @property
    def template_counts(self) -> np.ndarray:
        return np.bincount(self.template_of_case, minlength=len(self.templates))


def generate_synthetic(spec: SynthSpec = SynthSpec()) -> SyntheticLog:
    """Generate a log together with its ground-truth template assignment.

    Templates are distinct activity sequences (also distinct as n-gram
    vectors). Every template receives one case; the remaining cases are
    drawn from a Zipf distribution over templates, so template 0 is the
    most frequent in expectation.
    """
    rng = np.random.default_rng(spec.seed)
    activities = [f"act_{i:02d}" for i in range(spec.n_activities)]
    resources = [f"res_{i:02d}" for i in range(spec.n_resources)]
    n_contact = int(round(spec.contact_fraction * spec.n_activities))
    contact = set(rng.permutation(activities)[:n_contact].tolist())
    act_mu = {a: spec.duration_mu + rng.uniform(-1.0, 1.0) for a in activities}

    templates: list[tuple[str, ...]] = []
    signatures: list = []
    lo, hi = spec.length_range
    attempts = 0
    while len(templates) < spec.n_templates:
        attempts += 1
        if attempts > 1000 * spec.n_templates:
            raise ValueError("could not draw enough distinct templates; widen the alphabet or lengths")
        length = int(rng.integers(lo, hi + 1))
        seq = tuple(activities[i] for i in rng.integers(0, spec.n_activities, size=length))
        sig = trace_to_ngrams(seq)
        if seq in templates or sig in signatures:
            continue
        templates.append(seq)
        signatures.append(sig)

    counts = np.ones(spec.n_templates, dtype=np.int64)
    counts += rng.multinomial(spec.n_cases - spec.n_templates,
                              zipf_probabilities(spec.n_templates, spec.zipf_exponent))
    assignment = rng.permutation(np.repeat(np.arange(spec.n_templates), counts))

    year_ms = 365 * 24 * 3600 * 1000
    cases = []
    for idx, tpl in enumerate(assignment.tolist()):
        t = int(rng.integers(0, year_ms))
        events = []
        for act in templates[tpl]:
            events.append(Event(
                activity=act,
                timestamp=spec.start + timedelta(milliseconds=t),
                resource=resources[int(rng.integers(0, spec.n_resources))],
                lifecycle="complete",
                customer_contact=act in contact,
            ))
            t += int(round(1000 * rng.lognormal(act_mu[act], spec.duration_sigma)))
        cases.append(Case(f"case_{idx:05d}", tuple(events)))
    log = EventLog(tuple(cases), {"format": "synthetic", "source": f"seed={spec.seed}"})
    return SyntheticLog(log, tuple(templates), tuple(assignment.tolist()))


def generate_synthetic_log(spec: SynthSpec = SynthSpec()) -> EventLog:
    return generate_synthetic(spec).log
