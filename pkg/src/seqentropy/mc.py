"""Monte Carlo replication engine for bias certification.

Replication ``i`` always runs on a fresh stream seeded with
``derive_seed(master_seed, i)``, and results are reduced strictly in index
order, so a report does not depend on how many worker processes produced it.
"""

from __future__ import annotations

import math
import multiprocessing
import os
from dataclasses import dataclass

from .dist import CategoricalDistribution, as_distribution, class_number, entropy
from .errors import CapExceeded, ValidationError
from .estimators import ENTROPY_IDS, ESTIMATOR_IDS, UNBIASED_IDS, WINDOWED_IDS, evaluate
from .sampler import DEFAULT_MAX_DRAWS, GENERATOR, SampleStream, cumulative, derive_seed

DEFAULT_Z_THRESHOLD = 4.0


@dataclass(frozen=True)
class ExperimentConfig:
    dist: CategoricalDistribution
    estimator: str
    n: int | None = None
    replications: int = 1000
    seed: int = 0
    max_draws: int = DEFAULT_MAX_DRAWS
    z_threshold: float = DEFAULT_Z_THRESHOLD

    def __post_init__(self):
        object.__setattr__(self, "dist", as_distribution(self.dist))
        if self.estimator not in ESTIMATOR_IDS:
            raise ValidationError(f"unknown estimator {self.estimator!r}")
        if self.estimator in WINDOWED_IDS:
            if self.n is None or self.n < 1:
                raise ValidationError(f"estimator {self.estimator!r} needs n >= 1")
        else:
            object.__setattr__(self, "n", None)
        if self.replications < 2:
            raise ValidationError("need at least 2 replications")
        if not self.z_threshold > 0:
            raise ValidationError("z threshold must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be an unsigned 64-bit integer")
        if self.max_draws < 1:
            raise ValidationError("max_draws must be positive")

    @property
    def truth(self) -> float:
        if self.estimator in ENTROPY_IDS:
            return entropy(self.dist)
        return float(class_number(self.dist))


@dataclass(frozen=True)
class MonteCarloReport:
    config: ExperimentConfig
    completed: int
    failures: int
    mean: float
    stddev: float
    stderr: float
    truth: float
    bias: float
    z: float
    mean_draws: float
    generator: str = GENERATOR

    @property
    def failed(self) -> bool:
        """True when no replication finished."""
        return self.completed == 0

    @property
    def claims_unbiased(self) -> bool:
        return self.config.estimator in UNBIASED_IDS

    @property
    def certified(self) -> bool:
        """Zero cap failures and ``|z|`` within the configured threshold."""
        return self.failures == 0 and not math.isnan(self.z) and abs(self.z) <= self.config.z_threshold

    def row(self) -> dict:
        c = self.config
        return {
            "estimator": c.estimator,
            "dist": c.dist.describe(),
            "n": c.n,
            "reps": c.replications,
            "failures": self.failures,
            "mean": self.mean,
            "stddev": self.stddev,
            "stderr": self.stderr,
            "truth": self.truth,
            "bias": self.bias,
            "z": self.z,
            "mean_draws": self.mean_draws,
            "seed": c.seed,
            "generator": self.generator,
        }


def _run_chunk(args):
    config, start, stop = args
    dist = config.dist
    cdf = cumulative(dist)
    out = []
    for i in range(start, stop):
        stream = SampleStream(dist, derive_seed(config.seed, i), config.max_draws, cdf=cdf)
        try:
            rec = evaluate(config.estimator, stream, n=config.n)
        except CapExceeded:
            out.append(None)
        else:
            out.append((rec.value, rec.draws_consumed))
    return out


def _chunks(config, workers):
    reps = config.replications
    size = max(1, math.ceil(reps / (workers * 8)))
    return [(config, a, min(a + size, reps)) for a in range(0, reps, size)]


def _summarize(config, results):
    count = 0
    mean = m2 = 0.0
    draws = 0
    failures = 0
    for item in results:
        if item is None:
            failures += 1
            continue
        x, d = item
        count += 1
        delta = x - mean
        mean += delta / count
        m2 += delta * (x - mean)
        draws += d
    truth = config.truth
    nan = math.nan
    if count == 0:
        return MonteCarloReport(config, 0, failures, nan, nan, nan, truth, nan, nan, nan)
    bias = mean - truth
    if count < 2:
        stddev = stderr = z = nan
    else:
        stddev = math.sqrt(m2 / (count - 1))
        stderr = stddev / math.sqrt(count)
        if stddev > 0.0:
            z = bias / stderr
        elif bias == 0.0:
            z = 0.0
        else:
            z = math.copysign(math.inf, bias)
    return MonteCarloReport(config, count, failures, mean, stddev, stderr, truth, bias, z,
                            draws / count)


def default_workers() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def _collect(tasks, workers):
    if workers <= 1 or len(tasks) == 1:
        return [r for t in tasks for r in _run_chunk(t)]
    ctx = multiprocessing.get_context("fork" if "fork" in multiprocessing.get_all_start_methods() else "spawn")
    with ctx.Pool(workers) as pool:
        parts = pool.map(_run_chunk, tasks)
    return [r for part in parts for r in part]


def run_replications(config: ExperimentConfig, workers: int = 1) -> MonteCarloReport:
    """Run ``config.replications`` independent evaluations and summarize them."""
    return _summarize(config, _collect(_chunks(config, workers), workers))


def plugin_bias_experiment(dist, n: int, replications: int, seed: int = 0,
                           workers: int = 1) -> MonteCarloReport:
    """Plug-in entropy from ``n`` draws per replication, compared with the true entropy."""
    config = ExperimentConfig(dist, "plugin", n=n, replications=replications, seed=seed)
    return run_replications(config, workers=workers)


def compare(configs, workers: int = 1) -> list[MonteCarloReport]:
    """One report per config, in the given order."""
    configs = list(configs)
    if not configs:
        raise ValidationError("compare needs at least one experiment")
    if workers <= 1:
        return [run_replications(c) for c in configs]
    # one pool for the whole grid; chunks stay tagged by config position
    tasks, owners = [], []
    for k, c in enumerate(configs):
        for t in _chunks(c, workers):
            tasks.append(t)
            owners.append(k)
    ctx = multiprocessing.get_context("fork" if "fork" in multiprocessing.get_all_start_methods() else "spawn")
    with ctx.Pool(workers) as pool:
        parts = pool.map(_run_chunk, tasks)
    grouped = [[] for _ in configs]
    for k, part in zip(owners, parts):
        grouped[k].extend(part)
    return [_summarize(c, g) for c, g in zip(configs, grouped)]
