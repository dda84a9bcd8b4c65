"""Categorical population models and their ground-truth entropy and class number."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError

SUM_TOL = 1e-12


@dataclass(frozen=True)
class CategoricalDistribution:
    """Probabilities ``probs[i-1]`` for class labels ``1..len(probs)``.

    Entries are validated and then divided by their sum, so the stored vector
    sums to one to machine precision.
    """

    probs: tuple[float, ...]
    spec: str | None = None

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        if not probs:
            raise ValidationError("distribution needs at least one class")
        for p in probs:
            if not math.isfinite(p) or p < 0.0 or p > 1.0:
                raise ValidationError(f"probability {p!r} outside [0, 1]")
        total = math.fsum(probs)
        if total <= 0.0:
            raise ValidationError("distribution has no strictly positive entry")
        if abs(total - 1.0) > SUM_TOL:
            raise ValidationError(f"probabilities sum to {total!r}, not 1")
        if total != 1.0:
            probs = tuple(p / total for p in probs)
        object.__setattr__(self, "probs", probs)

    def __len__(self):
        return len(self.probs)

    @property
    def support(self) -> tuple[int, ...]:
        """Labels (1-based) of classes with strictly positive probability."""
        return tuple(i + 1 for i, p in enumerate(self.probs) if p > 0.0)

    def describe(self) -> str:
        if self.spec is not None:
            return self.spec
        return "probs:" + ",".join(repr(p) for p in self.probs)


def entropy(dist: CategoricalDistribution) -> float:
    """Shannon entropy in nats, with ``0 log 0 = 0``."""
    return -math.fsum(p * math.log(p) for p in dist.probs if p > 0.0)


def class_number(dist: CategoricalDistribution) -> int:
    """Number of classes with strictly positive probability."""
    return sum(1 for p in dist.probs if p > 0.0)


def make_uniform(M: int) -> CategoricalDistribution:
    if M < 1:
        raise ValidationError(f"class count must be >= 1, got {M}")
    return CategoricalDistribution((1.0 / M,) * M, spec=f"uniform:{M}")


def make_zipf(M: int, s: float) -> CategoricalDistribution:
    """Zipf law on ``1..M``: ``p_i`` proportional to ``i**-s``."""
    if M < 1:
        raise ValidationError(f"class count must be >= 1, got {M}")
    if not s >= 0.0:
        raise ValidationError(f"zipf exponent must be >= 0, got {s}")
    weights = [float(i) ** -s for i in range(1, M + 1)]
    total = math.fsum(weights)
    return CategoricalDistribution(
        tuple(w / total for w in weights), spec=f"zipf:{M}:{s:g}"
    )


def parse_dist_spec(text: str) -> CategoricalDistribution:
    """Parse ``uniform:M``, ``zipf:M:s`` or ``probs:p1,p2,...``."""
    kind, _, rest = text.strip().partition(":")
    try:
        if kind == "uniform":
            M = int(rest)
            dist = make_uniform(M)
        elif kind == "zipf":
            m_text, _, s_text = rest.partition(":")
            dist = make_zipf(int(m_text), float(s_text))
        elif kind == "probs":
            dist = CategoricalDistribution(
                tuple(float(x) for x in rest.split(",")), spec=text.strip()
            )
            return dist
        else:
            raise ValidationError(f"unknown distribution kind {kind!r}")
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed distribution spec {text!r}: {exc}") from exc
    return CategoricalDistribution(dist.probs, spec=text.strip())


def as_distribution(obj) -> CategoricalDistribution:
    if isinstance(obj, CategoricalDistribution):
        return obj
    if isinstance(obj, str):
        return parse_dist_spec(obj)
    return CategoricalDistribution(tuple(obj))
