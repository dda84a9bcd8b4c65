"""Sequential unbiased estimators of entropy and class number, plus the plug-in baseline.

Every stream-based estimator reads labels from an object exposing
``next_sample()`` and ``draws_consumed`` (``SampleStream`` or ``ReplayStream``)
and returns an :class:`EstimateRecord`. Streams that hit their cap raise
:class:`CapExceeded`; no estimator ever substitutes a truncated value.
"""

from __future__ import annotations

import math
import threading
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .errors import PreconditionViolated, ValidationError

ESTIMATOR_IDS = ("h1", "h2", "h3", "m1", "m2", "m2cap", "m3", "m4", "m4s", "plugin")
# estimators whose expectation is claimed to equal the truth exactly
UNBIASED_IDS = frozenset({"h1", "h2", "h3", "m1", "m2", "m2cap", "m4", "m4s"})
ENTROPY_IDS = frozenset({"h1", "h2", "h3", "plugin"})
WINDOWED_IDS = frozenset({"h3", "m2", "m2cap", "m3", "m4", "m4s", "plugin"})


class HarmonicTable:
    """``values[k] = 1 + 1/2 + ... + 1/k`` by forward summation, grown on demand.

    Growth appends under a lock; readers only index already-written entries.
    """

    def __init__(self, initial: int = 1024):
        self.values = [0.0]
        self._lock = threading.Lock()
        self.extend(initial)

    def extend(self, k_max: int):
        if k_max < len(self.values):
            return
        with self._lock:
            values = self.values
            if k_max < len(values):
                return
            h = values[-1]
            for k in range(len(values), max(k_max + 1, 2 * len(values))):
                h += 1.0 / k
                values.append(h)

    def __getitem__(self, k: int) -> float:
        if k >= len(self.values):
            self.extend(k)
        return self.values[k]


_HARMONIC = HarmonicTable()


def harmonic(k: int) -> float:
    if k < 0:
        raise ValueError("harmonic numbers are defined for k >= 0")
    return _HARMONIC[k]


@dataclass(frozen=True)
class EstimateRecord:
    estimator_id: str
    value: float
    draws_consumed: int


@dataclass(frozen=True)
class FirstOccurrenceTimes:
    times: dict  # label -> N_i


@dataclass(frozen=True)
class ReturnTimes:
    n: int
    times: tuple[int, ...]


@dataclass(frozen=True)
class CaptureRecord:
    """Summary of a first sample of size ``n`` and its recollection sample of size ``m``.

    ``first[i]`` is the position of class ``i``'s first draw among the first
    ``n``; ``recapture[i]`` is the offset (1..m) of its first draw after
    position ``n``. ``r`` and ``s`` count class ``i`` in the two samples; ``s``
    only tracks classes observed in the first sample.
    """

    n: int
    m: int
    first: dict
    recapture: dict
    r: dict
    s: dict

    @property
    def observed(self) -> frozenset:
        return frozenset(self.r)

    def validate(self):
        A = self.observed
        if set(self.first) != A or set(self.recapture) != A or set(self.s) != A:
            raise ValidationError("capture record fields cover different class sets")
        if sum(self.r.values()) != self.n or sum(self.s.values()) > self.m:
            raise ValidationError("capture record counts do not match sample sizes")
        for i in A:
            if not (1 <= self.first[i] <= self.n and 1 <= self.recapture[i] <= self.m):
                raise ValidationError(f"positions for class {i!r} out of range")
            if self.r[i] < 1 or self.s[i] < 1:
                raise ValidationError(f"class {i!r} has a zero count")
        if self.m != max(self.recapture.values()):
            raise ValidationError("m must equal the last recapture offset")


@dataclass(frozen=True)
class PluginCounts:
    n: int
    counts: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.n < 1 or sum(self.counts) != self.n or min(self.counts, default=0) < 0:
            raise ValidationError("plug-in counts must be nonnegative and sum to n >= 1")


# -- stream scanners ---------------------------------------------------------

def first_occurrence_times(stream, labels) -> FirstOccurrenceTimes:
    """Draw until every label in ``labels`` has appeared; record first indices."""
    missing = set(labels)
    times = {}
    draw = stream.next_sample
    start = stream.draws_consumed
    while missing:
        w = draw()
        if w in missing:
            missing.discard(w)
            times[w] = stream.draws_consumed - start
    return FirstOccurrenceTimes(times)


def first_return_time(stream) -> int:
    """Smallest ``k >= 1`` such that ``w_{k+1}`` is in the class of ``w_1``."""
    draw = stream.next_sample
    w1 = draw()
    k = 1
    while draw() != w1:
        k += 1
    return k


def return_times(stream, n: int) -> ReturnTimes:
    """Return times ``N^(1..n)`` read off one shared realization of the stream.

    At each position ``t`` every pending reference position of the same class
    resolves with ``N = t - j``; positions ``t <= n`` then become references.
    """
    if n < 1:
        raise ValueError("window size n must be >= 1")
    draw = stream.next_sample
    times = [0] * n
    pending = {}  # label -> reference position awaiting a return
    t = 0
    while t < n or pending:
        t += 1
        w = draw()
        j = pending.pop(w, None)
        if j is not None:
            times[j - 1] = t - j
        if t <= n:
            pending[w] = t
    return ReturnTimes(n, tuple(times))


def capture_recapture(stream, n: int) -> CaptureRecord:
    """Draw ``n`` samples, then keep drawing until each observed class reappears."""
    if n < 1:
        raise ValueError("first-sample size n must be >= 1")
    draw = stream.next_sample
    first, r = {}, {}
    for k in range(1, n + 1):
        w = draw()
        if w not in first:
            first[w] = k
            r[w] = 0
        r[w] += 1
    recapture = {}
    s = dict.fromkeys(r, 0)
    outstanding = len(r)
    m = 0
    while outstanding:
        m += 1
        w = draw()
        if w in s:
            s[w] += 1
            if w not in recapture:
                recapture[w] = m
                outstanding -= 1
    return CaptureRecord(n=n, m=m, first=first, recapture=recapture, r=r, s=s)


# -- estimators --------------------------------------------------------------

def _labels_for(stream, M, labels):
    if labels is None:
        dist = getattr(stream, "distribution", None)
        labels = dist.support if dist is not None else range(1, M + 1)
    labels = tuple(labels)
    if len(labels) != M or len(set(labels)) != M:
        raise PreconditionViolated(f"need exactly {M} distinct class labels")
    dist = getattr(stream, "distribution", None)
    if dist is not None:
        for i in labels:
            if not (isinstance(i, int) and 1 <= i <= len(dist) and dist.probs[i - 1] > 0.0):
                raise PreconditionViolated(f"class {i!r} is unreachable; it would never appear")
        if len(dist.support) != M:
            raise PreconditionViolated(
                f"distribution has {len(dist.support)} reachable classes, caller declared {M}"
            )
    return labels


def h1_estimate(stream, M: int, labels=None) -> EstimateRecord:
    """Entropy from first-occurrence times: sum of ``1/(N_i - 1)`` over ``N_i >= 2``.

    The full label set has to be known up front; by default it is the
    support of the stream's distribution (or ``1..M`` for replayed streams).
    """
    labels = _labels_for(stream, M, labels)
    start = stream.draws_consumed
    occ = first_occurrence_times(stream, labels)
    value = math.fsum(1.0 / (N - 1) for N in occ.times.values() if N >= 2)
    return EstimateRecord("h1", value, stream.draws_consumed - start)


def h2_estimate(stream) -> EstimateRecord:
    start = stream.draws_consumed
    N = first_return_time(stream)
    return EstimateRecord("h2", harmonic(N - 1), stream.draws_consumed - start)


def h3_estimate(stream, n: int) -> EstimateRecord:
    start = stream.draws_consumed
    rt = return_times(stream, n)
    value = math.fsum(harmonic(N - 1) for N in rt.times) / n
    return EstimateRecord("h3", value, stream.draws_consumed - start)


def m1_estimate(stream) -> EstimateRecord:
    start = stream.draws_consumed
    N = first_return_time(stream)
    return EstimateRecord("m1", float(N), stream.draws_consumed - start)


def m2_direct(stream, n: int) -> EstimateRecord:
    start = stream.draws_consumed
    rt = return_times(stream, n)
    return EstimateRecord("m2", sum(rt.times) / n, stream.draws_consumed - start)


def m2_telescoped_exact(record: CaptureRecord) -> Fraction:
    shift = sum(record.recapture[i] - record.first[i] for i in record.observed)
    return len(record.observed) + Fraction(shift, record.n)


def m2_telescoped(record: CaptureRecord) -> float:
    """Observed-class count corrected by the mean recapture-minus-first offset."""
    return float(m2_telescoped_exact(record))


def m3_estimate(samples) -> int:
    """Number of distinct classes among ``samples``."""
    if not samples:
        raise ValueError("need at least one sample")
    return len(set(samples))


def _check_counts(n, r, m, s):
    r = {i: c for i, c in r.items() if c != 0}
    if any(c < 0 for c in r.values()) or any(c < 0 for c in s.values()):
        raise PreconditionViolated("counts must be nonnegative")
    if n < 1 or m < 1:
        raise PreconditionViolated("sample sizes must be >= 1")
    if sum(r.values()) != n:
        raise PreconditionViolated(f"first-sample counts sum to {sum(r.values())}, expected {n}")
    if sum(s.values()) > m:
        raise PreconditionViolated(f"subsequent-sample counts sum past m = {m}")
    for i in r:
        if s.get(i, 0) < 1:
            raise PreconditionViolated(f"class {i!r} was never recollected (s = 0)")
    return r


def m4_from_counts_exact(n: int, r: Mapping, m: int, s: Mapping) -> Fraction:
    r = _check_counts(n, r, m, s)
    correction = sum(Fraction(m + 1, s[i] + 1) - Fraction(n + 1, r[i] + 1) for i in r)
    return len(r) + correction / n


def m4_from_counts(n: int, r: Mapping, m: int, s: Mapping) -> float:
    """Order-free class-number estimate from the two samples' class counts."""
    return float(m4_from_counts_exact(n, r, m, s))


def m4_estimate(record: CaptureRecord) -> float:
    return m4_from_counts(record.n, record.r, record.m, record.s)


def m4_stopping_exact(n: int, r: Mapping, m: int, s: Mapping) -> Fraction:
    """Counts-only estimate averaged over orderings the stopping rule can produce.

    Given the counts, the last recollection draw is equally likely to be any
    observed class seen once in the second sample, and the other ``m - 1``
    draws are uniformly arranged. Averaging the recapture offsets over that
    set gives ``m/2 + sum m/(s_i + 1)`` in place of ``sum (m+1)/(s_i + 1)``.
    """
    r = _check_counts(n, r, m, s)
    if not any(s[i] == 1 for i in r):
        raise PreconditionViolated("no observed class is recollected exactly once; "
                                   "counts cannot come from the stopping rule")
    correction = Fraction(m, 2) + sum(
        Fraction(m, s[i] + 1) - Fraction(n + 1, r[i] + 1) for i in r
    )
    return len(r) + correction / n


def m4_stopping(record: CaptureRecord) -> float:
    return float(m4_stopping_exact(record.n, record.r, record.m, record.s))


def plugin_entropy(counts: PluginCounts) -> float:
    n = counts.n
    return -math.fsum((k / n) * math.log(k / n) for k in counts.counts if k > 0)


def plugin_counts(samples, n_classes: int | None = None) -> PluginCounts:
    tally = Counter(samples)
    if n_classes is not None:
        return PluginCounts(len(samples), tuple(tally.get(i, 0) for i in range(1, n_classes + 1)))
    return PluginCounts(len(samples), tuple(tally.values()))


# -- dispatch ----------------------------------------------------------------

def evaluate(estimator_id: str, stream, n: int | None = None, M: int | None = None) -> EstimateRecord:
    """Run estimator ``estimator_id`` on ``stream``.

    ``n`` is the window / first-sample size for windowed estimators. ``M`` is
    the declared class count for ``h1`` (defaults to the support size).
    """
    if estimator_id in WINDOWED_IDS and (n is None or n < 1):
        raise PreconditionViolated(f"estimator {estimator_id!r} needs a sample size n >= 1")
    start = stream.draws_consumed
    if estimator_id == "h1":
        if M is None:
            dist = getattr(stream, "distribution", None)
            if dist is None:
                raise PreconditionViolated("h1 needs the class count M")
            M = len(dist.support)
        return h1_estimate(stream, M)
    if estimator_id == "h2":
        return h2_estimate(stream)
    if estimator_id == "h3":
        return h3_estimate(stream, n)
    if estimator_id == "m1":
        return m1_estimate(stream)
    if estimator_id == "m2":
        return m2_direct(stream, n)
    if estimator_id in ("m2cap", "m4", "m4s"):
        record = capture_recapture(stream, n)
        if estimator_id == "m2cap":
            value = m2_telescoped(record)
        elif estimator_id == "m4":
            value = m4_estimate(record)
        else:
            value = m4_stopping(record)
        return EstimateRecord(estimator_id, value, stream.draws_consumed - start)
    if estimator_id == "m3":
        value = float(m3_estimate(stream.take(n)))
        return EstimateRecord("m3", value, stream.draws_consumed - start)
    if estimator_id == "plugin":
        value = plugin_entropy(plugin_counts(stream.take(n)))
        return EstimateRecord("plugin", value, stream.draws_consumed - start)
    raise ValueError(f"unknown estimator {estimator_id!r}; expected one of {ESTIMATOR_IDS}")
