"""Exact (non-statistical) checks of the estimators' expectations.

The expectation series are summed term by term until a certified bound on the
omitted tail drops below the requested tolerance. Classes with equal
probability share one series weighted by their multiplicity, so uniform
populations with many classes stay cheap.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .dist import CategoricalDistribution
from .errors import PreconditionViolated, ValidationError
from .estimators import _check_counts

DEFAULT_TERM_BUDGET = 10**7
ENUMERATION_BUDGET = 10  # max n + m for the permutation oracle
_EPS = 2.0**-52


@dataclass(frozen=True)
class TruncationResult:
    value: float
    tail_bound: float
    terms_used: int

    def contains(self, x: float) -> bool:
        return abs(self.value - x) <= self.tail_bound


def series_identity_check(x: float, K: int) -> float:
    """Largest gap between the three closed forms and their ``K``-term power series.

    The series: ``sum k x^(k-1) = 1/(1-x)^2``, ``-sum x^k/k = log(1-x)`` and
    ``-sum h_k x^k = log(1-x)/(1-x)``.
    """
    if not -1.0 < x < 1.0:
        raise ValueError(f"series need |x| < 1, got {x}")
    if K < 1:
        raise ValueError("K must be >= 1")
    inv_sq, logs, harm = [], [], []
    h = 0.0
    xp = 1.0  # x^(k-1)
    for k in range(1, K + 1):
        h += 1.0 / k
        inv_sq.append(k * xp)
        xp *= x
        logs.append(xp / k)
        harm.append(h * xp)
    log1mx = math.log1p(-x)
    return max(
        abs(1.0 / (1.0 - x) ** 2 - math.fsum(inv_sq)),
        abs(log1mx + math.fsum(logs)),
        abs(log1mx / (1.0 - x) + math.fsum(harm)),
    )


def _groups(dist: CategoricalDistribution):
    return sorted(Counter(p for p in dist.probs if p > 0.0).items())


def _tail(kind, p, q, qK, K):
    """Upper bound on one class's contribution beyond term ``K`` (``qK = q**K``).

    Contributions include the outer weight ``p`` for h2 and m1. h2 uses
    ``h_{k-1} <= k-1`` and h1 uses ``1/(k-1) <= 1``; what remains are
    geometric or arithmetico-geometric tails summed in closed form.
    """
    if qK == 0.0:
        return 0.0
    if kind == "h2":
        # p^2 sum_{k>K} (k-1) q^(k-1) = q^K (K p + q)
        return qK * (K * p + q)
    if kind == "m1":
        # p^2 sum_{k>K} k q^(k-1) = q^K (1 + K p)
        return qK * (1.0 + K * p)
    # sum_{k>K} p q^(k-1) = q^K
    return qK


def _sum_class(kind, p, share, K, budget):
    """One class's weighted series, to ``K`` terms or until its tail is <= ``share``.

    Returns (value, tail bound, terms used, rounding allowance). Powers of
    ``q = 1 - p`` come from ``exp(k log1p(-p))`` so that ``q`` itself is never
    rounded; that costs about ``k |log q|`` ulps per term. The running
    harmonic number adds at most ``k/2`` ulps of relative error.
    """
    if p == 1.0:
        # the first draw settles everything: N = 1 surely
        return (1.0 if kind == "m1" else 0.0), 0.0, 1, 0.0
    q = 1.0 - p
    log_q = math.log1p(-p)

    def qpow(j):
        return 1.0 if j == 0 else math.exp(j * log_q)

    weight = p * p if kind in ("h2", "m1") else p
    terms = []
    slack = 0.0
    h = 0.0  # h_{k-1}
    k = 0
    while True:
        k += 1
        qk = qpow(k - 1)
        pow_err = 4.0 + (k - 1) * abs(log_q) if qk else 0.0
        if kind == "h2":
            t = h * qk
            slack += (pow_err + 0.5 * k) * t
            h += 1.0 / k
        elif kind == "m1":
            t = k * qk
            slack += pow_err * t
        else:
            t = qk / (k - 1) if k >= 2 else 0.0
            slack += pow_err * t
        terms.append(t)
        bound = _tail(kind, p, q, qpow(k), k) * (1.0 + (8.0 + k * abs(log_q)) * _EPS)
        if K is not None:
            if k >= K:
                break
        elif bound <= share or k >= budget:
            break
    value = weight * math.fsum(terms)
    return value, bound, k, weight * slack * _EPS + 2 * _EPS * value


def _expected(kind, dist, tol=None, K=None, budget=DEFAULT_TERM_BUDGET):
    if tol is not None and not tol > 0.0:
        raise ValueError("tol must be > 0")
    groups = _groups(dist)
    total_classes = sum(mult for _, mult in groups)
    # half the tolerance goes to truncation, spread evenly over classes
    share = None if tol is None else 0.5 * tol / total_classes
    values, bounds = [], []
    rounding = 0.0
    used = 0
    for p, mult in groups:
        v, b, k, err = _sum_class(kind, p, share, K, budget)
        values.append(mult * v)
        bounds.append(mult * b)
        rounding += mult * err
        used = max(used, k)
    value = math.fsum(values)
    rounding += 2 * len(groups) * _EPS * value
    return TruncationResult(value, math.fsum(bounds) + rounding, used)


def expected_h1(dist: CategoricalDistribution, tol: float = 1e-9,
                budget: int = DEFAULT_TERM_BUDGET) -> TruncationResult:
    """Expectation of the first-occurrence entropy estimator, summed with a certified tail."""
    return _expected("h1", dist, tol=tol, budget=budget)


def expected_h2(dist: CategoricalDistribution, tol: float = 1e-9,
                budget: int = DEFAULT_TERM_BUDGET) -> TruncationResult:
    """Expectation of ``h_{N-1}`` for the first return time ``N``."""
    return _expected("h2", dist, tol=tol, budget=budget)


def expected_m1(dist: CategoricalDistribution, tol: float = 1e-9,
                budget: int = DEFAULT_TERM_BUDGET) -> TruncationResult:
    """Expectation of the first return time ``N``."""
    return _expected("m1", dist, tol=tol, budget=budget)


def truncated_expectation(kind: str, dist: CategoricalDistribution, K: int) -> TruncationResult:
    """Same series as ``expected_<kind>`` but cut at a fixed ``K`` terms."""
    if kind not in ("h1", "h2", "m1"):
        raise ValueError(f"unknown series {kind!r}")
    return _expected(kind, dist, K=K)


# -- permutation enumeration ---------------------------------------------------

def distinct_orderings(counts: dict):
    """Yield each distinct ordering of the multiset ``{label: count}`` exactly once."""
    counts = {k: c for k, c in counts.items() if c > 0}
    total = sum(counts.values())
    labels = sorted(counts, key=repr)
    seq = []

    def rec():
        if len(seq) == total:
            yield tuple(seq)
            return
        for lab in labels:
            if counts[lab]:
                counts[lab] -= 1
                seq.append(lab)
                yield from rec()
                seq.pop()
                counts[lab] += 1

    yield from rec()


def _first_positions(order, classes):
    pos = {}
    for k, w in enumerate(order, start=1):
        if w in classes and w not in pos:
            pos[w] = k
    return pos


def _enumerate_offsets(n, r, m, s, consistent_only):
    r = _check_counts(n, r, m, s)
    if n + m > ENUMERATION_BUDGET:
        raise ValidationError(f"n + m = {n + m} exceeds the enumeration budget {ENUMERATION_BUDGET}")
    A = set(r)
    f_sums = [sum(_first_positions(o, A).values()) for o in distinct_orderings(dict(r))]
    l_sums = []
    for o in distinct_orderings(dict(s)):
        L = _first_positions(o, A)
        if consistent_only and max(L.values()) != m:
            continue
        l_sums.append(sum(L.values()))
    if not l_sums:
        raise PreconditionViolated("no ordering of the subsequent sample meets the stopping rule")
    total = 0
    for fs, ls in product(f_sums, l_sums):
        total += ls - fs
    return len(A) + Fraction(total, n * len(f_sums) * len(l_sums))


def m4_permutation_oracle(n: int, r: dict, m: int, s: dict) -> Fraction:
    """Average telescoped class-number estimate over all orderings of both samples.

    Both multisets are rearranged independently and every distinct pair of
    orderings counts once, whether or not the second ordering is one the
    stopping rule could have produced.
    """
    return _enumerate_offsets(n, r, m, s, consistent_only=False)


def m4_stopping_permutation_oracle(n: int, r: dict, m: int, s: dict) -> Fraction:
    """As :func:`m4_permutation_oracle`, restricted to second-sample orderings
    whose final draw completes the recollection."""
    return _enumerate_offsets(n, r, m, s, consistent_only=True)


def count_configurations(max_n=4, max_m=3, n_classes=3):
    """Every ``(n, r, m, s)`` with ``n <= max_n``, ``m <= max_m`` on ``n_classes`` labels
    where each class of the first sample is recollected at least once."""
    labels = range(1, n_classes + 1)
    for n in range(1, max_n + 1):
        for rv in product(range(n + 1), repeat=n_classes):
            if sum(rv) != n:
                continue
            r = {i: c for i, c in zip(labels, rv) if c}
            for m in range(1, max_m + 1):
                for sv in product(range(m + 1), repeat=n_classes):
                    if sum(sv) != m:
                        continue
                    s = dict(zip(labels, sv))
                    if all(s[i] >= 1 for i in r):
                        yield n, r, m, {i: c for i, c in s.items() if c}
