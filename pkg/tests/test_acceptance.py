"""Exit criteria for the package, one test per criterion.

A verdict line per criterion is printed in the pytest terminal summary.
"""

import math
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from seqentropy.cli import main
from seqentropy.dist import CategoricalDistribution, entropy, make_uniform, make_zipf
from seqentropy.estimators import capture_recapture, m2_direct, m2_telescoped, m2_telescoped_exact, \
    m4_from_counts, m4_from_counts_exact, return_times
from seqentropy.mc import ExperimentConfig, default_workers, plugin_bias_experiment, run_replications
from seqentropy.oracle import (count_configurations, expected_h1, expected_h2, expected_m1,
                               m4_permutation_oracle, series_identity_check)
from seqentropy.sampler import SampleStream

GRID = Path(__file__).resolve().parents[1] / "configs" / "standard_grid.jsonl"
THREE = CategoricalDistribution((0.5, 0.3, 0.2), spec="probs:0.5,0.3,0.2")


def test_1_analytic_certificates(criterion):
    t0 = time.perf_counter()
    H = entropy(THREE)
    h1, h2, m1 = expected_h1(THREE, 1e-9), expected_h2(THREE, 1e-9), expected_m1(THREE, 1e-9)
    elapsed = time.perf_counter() - t0
    errs = (abs(h1.value - H), abs(h2.value - H), abs(m1.value - 3))
    bounds = (h1.tail_bound, h2.tail_bound, m1.tail_bound)
    ok = max(errs) <= 1e-9 and max(bounds) <= 1e-9 and elapsed < 1.0
    criterion(1, ok, f"errors {max(errs):.2e}, max tail bound {max(bounds):.2e}, {elapsed * 1e3:.1f} ms")
    assert ok


def test_2_series_identities(criterion):
    xs = [s * v for v in (0.1, 0.3, 0.5, 0.7, 0.9) for s in (1, -1)]
    gaps = [series_identity_check(x, 2000) for x in xs]
    ok = max(gaps) <= 1e-8
    criterion(2, ok, f"max gap {max(gaps):.2e} over {len(xs)} points, K = 2000")
    assert ok


def test_3_telescoping_identity(criterion):
    rng = np.random.default_rng(20261014)
    dists = (make_uniform(4), make_zipf(5, 1))
    t0 = time.perf_counter()
    failures = 0
    for _ in range(10**4):
        dist = dists[int(rng.integers(2))]
        seed = int(rng.integers(0, 2**63))
        n = int(rng.integers(1, 21))
        rt = return_times(SampleStream(dist, seed), n)
        direct = m2_direct(SampleStream(dist, seed), n)
        rec = capture_recapture(SampleStream(dist, seed), n)
        exact_direct = sum(rt.times)
        exact_tele = n * m2_telescoped_exact(rec)
        if (Fraction(exact_direct) != exact_tele
                or abs(direct.value - m2_telescoped(rec)) > 1e-12
                or direct.draws_consumed != n + rec.m):
            failures += 1
    elapsed = time.perf_counter() - t0
    ok = failures == 0 and elapsed < 10.0
    criterion(3, ok, f"{failures} mismatches in 10^4 cases, {elapsed:.2f} s")
    assert ok


def test_4_rearrangement_identity(criterion):
    configs = list(count_configurations(max_n=4, max_m=3, n_classes=3))
    failures = 0
    for n, r, m, s in configs:
        enum = m4_permutation_oracle(n, r, m, s)
        if enum != m4_from_counts_exact(n, r, m, s) or abs(float(enum) - m4_from_counts(n, r, m, s)) > 1e-12:
            failures += 1
    ok = failures == 0 and len(configs) > 0
    criterion(4, ok, f"{failures} mismatches over {len(configs)} count configurations")
    assert ok


MC_ESTIMATORS = [("h1", None), ("h2", None), ("h3", 10), ("m1", None), ("m2", 10), ("m4", 10)]
MC_DISTS = [make_uniform(4), make_zipf(5, 1), THREE]


def test_5_monte_carlo_unbiasedness(criterion):
    workers = default_workers()
    bad = []
    for est, n in MC_ESTIMATORS:
        for dist in MC_DISTS:
            rep = run_replications(ExperimentConfig(dist, est, n=n, replications=10**5, seed=5,
                                                    max_draws=10**7), workers=workers)
            cell = f"{est}{'' if n is None else f'(n={n})'} on {dist.describe()}"
            passed = rep.failures == 0 and abs(rep.z) <= 4
            criterion(f"5[{cell}]", passed, f"z = {rep.z:+.2f}, failures = {rep.failures}, mean draws {rep.mean_draws:.1f}")
            if not passed:
                bad.append(cell)
    ok = not bad
    criterion(5, ok, f"{18 - len(bad)}/18 cells within |z| <= 4" + (f"; failing: {', '.join(bad)}" if bad else ""))
    assert ok, f"cells with |z| > 4 or cap failures: {bad}"


def test_6_plugin_negative_bias(criterion):
    rep = plugin_bias_experiment(make_uniform(10), n=10, replications=10**5, seed=6)
    ok = rep.mean < math.log(10) and rep.z <= -10
    criterion(6, ok, f"plug-in mean {rep.mean:.5f} vs ln 10 = {math.log(10):.5f}, "
                     f"bias {rep.bias:+.5f}, z = {rep.z:.1f}")
    assert ok


def test_7_compare_determinism(criterion, tmp_path):
    outputs = []
    for workers in (1, 1, 8, 8):
        out = tmp_path / f"grid-{workers}-{len(outputs)}.json"
        code = main(["compare", "--config", str(GRID), "--reps", "2000", "--seed", "7",
                     "--workers", str(workers), "--out", str(out)])
        assert code in (0, 3)
        outputs.append(out.read_bytes())
    ok = len(set(outputs)) == 1
    criterion(7, ok, f"4 runs (1, 1, 8, 8 workers) of {GRID.name}: "
                     f"{'identical' if ok else 'differing'} bytes ({len(outputs[0])} B)")
    assert ok
