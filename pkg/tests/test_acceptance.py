"""Acceptance suite: each test enforces one release criterion at its stated
tolerance and prints a PASS line (run with -s or -rA to see them)."""

import json
import math
import time

import numpy as np
import pytest

from traindyn import (
    MetricSeries,
    gaussian_tuning,
    gen_fgn,
    gen_trace,
    hurst_estimate,
    kuramoto_order,
    pearson,
    save_trace,
    separation_flag,
    threshold_crossing,
    zscore,
)
from traindyn.cli import main
from traindyn.taxonomy import (
    FLAT_NONCONVERGING,
    PERSISTENTLY_ELEVATED,
    RAPIDLY_COLLAPSING,
    SLOWLY_COLLAPSING,
    TaxonomySignature,
    classify_state,
)

M = MetricSeries
N_REALIZATIONS = 200


def _recover(h_target, length, pad, seed_base):
    estimates = []
    for i in range(N_REALIZATIONS):
        sample = gen_fgn(h_target, pad, seed_base + i)[:length]
        estimates.append(hurst_estimate(sample).hurst)
    return np.asarray(estimates)


def test_hurst_oracle_recovery():
    """Mean fitted H within 0.05 of target at length 1024; 95% within 0.15; < 10 s."""
    start = time.perf_counter()
    for h in (0.5, 0.7, 0.9):
        estimates = _recover(h, 1024, 1024, seed_base=1000)
        assert abs(estimates.mean() - h) <= 0.05, f"mean bias too large at H={h}"
        within = np.mean(np.abs(estimates - h) <= 0.15)
        assert within >= 0.95, f"only {within:.0%} within 0.15 at H={h}"
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"oracle recovery took {elapsed:.1f}s"
    print(f"\nPASS hurst-oracle-recovery ({elapsed:.2f}s)")


def test_short_series_caveat():
    """At 50 points (the realistic epoch count), mean fitted H within 0.15."""
    for h in (0.5, 0.7, 0.9):
        estimates = _recover(h, 50, 64, seed_base=3000)
        assert abs(estimates.mean() - h) <= 0.15, f"short-series bias too large at H={h}"
    print("\nPASS short-series-caveat")


def test_gaussian_tuning_exactness():
    assert gaussian_tuning(0.7, 0.7, 0.1) == 1.0
    assert abs(gaussian_tuning(0.6, 0.7, 0.1) - math.exp(-0.5)) <= 1e-12
    rng = np.random.default_rng(17)
    for _ in range(1000):
        h_opt = rng.uniform(0.1, 0.9)
        offset = rng.uniform(0.0, 0.5)
        sigma = rng.uniform(0.02, 0.3)
        up = gaussian_tuning(h_opt + offset, h_opt, sigma)
        down = gaussian_tuning(h_opt - offset, h_opt, sigma)
        assert abs(up - down) <= 1e-12
    print("\nPASS gaussian-tuning-exactness")


def test_kuramoto_properties():
    rng = np.random.default_rng(23)
    assert abs(kuramoto_order(np.full(6, 1.234)) - 1.0) <= 1e-12
    for n in range(2, 12):
        symmetric = 2 * math.pi * np.arange(n) / n
        assert kuramoto_order(symmetric) < 1e-9
    for _ in range(1000):
        theta = rng.uniform(-math.pi, math.pi, size=rng.integers(2, 16))
        r = kuramoto_order(theta)
        assert r <= 1.0
        assert abs(kuramoto_order(theta + rng.uniform(-20, 20)) - r) <= 1e-9
    print("\nPASS kuramoto-properties")


def test_sensitivity_reversal():
    """The separation between persistent and mid-range groups reverses when the
    tuning centre drops below the mid-range group's exponent."""
    start = time.perf_counter()
    high, low = 0.70, 0.42
    at_ref = (gaussian_tuning(high, 0.7, 0.10), gaussian_tuning(low, 0.7, 0.10))
    at_half = (gaussian_tuning(high, 0.5, 0.10), gaussian_tuning(low, 0.5, 0.10))
    assert separation_flag(at_ref[0], at_ref[1], 0.30) is True
    assert separation_flag(at_half[0], at_half[1], 0.30) is False
    assert at_half[1] > at_half[0], "ordering must reverse at the 0.5 centre"
    elapsed = time.perf_counter() - start
    assert elapsed < 0.001
    print("\nPASS sensitivity-reversal")


# Tabulated reference signatures: epoch-mean integration score, inter-field
# synchrony, accuracy correlation, and the volatility trend implied by each
# run's described trajectory. The last column is the published state; the two
# runs labelled outside the four-state scheme ("transitional") map to the
# documented neighbouring labels asserted here.
REFERENCE_ROWS = [
    ("resnet18_c10", 0.830, 0.777, -0.661, SLOWLY_COLLAPSING, "unclassified"),
    ("resnet34_c10", 0.852, 0.514, -0.342, FLAT_NONCONVERGING, "metastable_high_integration"),
    ("resnet152_c10", 0.931, 0.600, -0.436, PERSISTENTLY_ELEVATED, "metastable_high_integration"),
    ("densenet121_c10", 0.880, -0.371, 0.600, RAPIDLY_COLLAPSING, "stable_convergent"),
    ("mobilenetv2_c10", 0.951, 0.095, 0.313, PERSISTENTLY_ELEVATED, "metastable_high_integration"),
    ("vit_c10", 0.980, 0.036, -0.330, PERSISTENTLY_ELEVATED, "metastable_high_integration"),
    ("resnet50_c100", 0.057, 0.864, -0.760, FLAT_NONCONVERGING, "rigidly_synchronised"),
    ("resnet101_c100", 0.070, 0.885, -0.725, FLAT_NONCONVERGING, "rigidly_synchronised"),
    ("vgg16_c100", 0.303, 0.274, -0.396, SLOWLY_COLLAPSING, "partial_integration"),
]

# The seven rows whose published state belongs to the four-state scheme.
FOUR_STATE_ROWS = [r for r in REFERENCE_ROWS if r[0] not in ("resnet18_c10", "resnet34_c10")]


def test_taxonomy_reproduction():
    hits = 0
    for name, heff, r_hm, r_acc, trend, expected in REFERENCE_ROWS:
        sig = TaxonomySignature(heff_late=heff, trend=trend, r_hz_mz=r_hm, r_psi_acc=r_acc)
        state = classify_state(sig)
        assert state == expected, f"{name}: got {state}, expected {expected}"
        if (name, heff, r_hm, r_acc, trend, expected) in FOUR_STATE_ROWS:
            hits += 1
    assert hits == 7, f"only {hits}/7 four-state rows reproduced"
    print("\nPASS taxonomy-reproduction (7/7 + 2 documented)")


def test_pearson_affine_invariance():
    rng = np.random.default_rng(29)
    for _ in range(1000):
        n = rng.integers(5, 40)
        a = M(rng.normal(size=n))
        b_raw = rng.normal(size=n)
        c = rng.choice([-1.0, 1.0]) * rng.uniform(0.01, 100)
        d = rng.uniform(-50, 50)
        r_plain = pearson(a, M(b_raw))
        r_affine = pearson(a, M(c * b_raw + d))
        assert abs(r_affine - math.copysign(1.0, c) * r_plain) <= 1e-9
        assert abs(pearson(zscore(a), zscore(M(b_raw))) - r_plain) <= 1e-9
    print("\nPASS pearson-affine-invariance")


def test_end_to_end_determinism_and_speed(tmp_path):
    trace_path = tmp_path / "trace.csv"
    save_trace(gen_trace("metastable", 60, 2, n_layers=4), trace_path, "csv")
    flags = ["--h-opt", "0.7", "--sigma-h", "0.1", "--w-h", "0.5", "--window", "5"]
    outputs = []
    for tag in ("a", "b"):
        out = tmp_path / f"report_{tag}.json"
        start = time.perf_counter()
        assert main(["analyze", str(trace_path), *flags, "-o", str(out)]) == 0
        elapsed = time.perf_counter() - start
        assert elapsed < 1.0, f"analyze took {elapsed:.2f}s"
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1], "reports are not byte-identical"
    doc = json.loads(outputs[0])
    assert len(doc["series"]["psi"]) == 60
    print("\nPASS end-to-end-determinism-and-speed")


def test_rolling_threshold_machinery():
    decaying = M(np.linspace(0.8, 0.05, 40))
    crossings = [threshold_crossing(decaying, th) for th in (0.35, 0.30, 0.25)]
    assert all(c is not None for c in crossings)
    assert crossings == sorted(crossings), "crossing epochs must weakly increase"
    flat = M([0.9] * 40)
    assert all(threshold_crossing(flat, th) is None for th in (0.35, 0.30, 0.25))
    print("\nPASS rolling-threshold-machinery")
