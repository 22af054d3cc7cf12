import math

import numpy as np
import pytest

from traindyn import (
    ActivationTrace,
    DegenerateInput,
    DomainError,
    EpochRecord,
    analytic_phase,
    gen_fgn,
    kuramoto_order,
    metastability_series,
    synchrony_pipeline,
)


def wrap(theta):
    return np.angle(np.exp(1j * theta))


def trace_from(layers):
    arr = np.asarray(layers, dtype=float)
    n_layers, n = arr.shape
    return ActivationTrace(
        "t",
        [f"l{i}" for i in range(n_layers)],
        [EpochRecord(t + 1, [float(arr[l, t]) for l in range(n_layers)]) for t in range(n)],
    )


class TestAnalyticPhase:
    def test_pure_cosine_phase(self):
        n = 64
        k = np.arange(n)
        phases = analytic_phase(np.cos(2 * math.pi * k / n))
        expected = wrap(2 * math.pi * k / n)
        err = np.abs(wrap(phases - expected))
        assert err[4:-4].mean() < 0.05

    def test_constant_signal_degenerate(self):
        with pytest.raises(DegenerateInput):
            analytic_phase([2.0, 2.0, 2.0, 2.0])

    def test_too_short(self):
        with pytest.raises(DomainError):
            analytic_phase([1.0, 2.0, 1.0])

    def test_scale_invariance(self):
        x = gen_fgn(0.6, 64, 7)
        assert np.allclose(analytic_phase(x), analytic_phase(3.7 * x), atol=1e-9)

    def test_phases_in_principal_interval(self):
        phases = analytic_phase(gen_fgn(0.5, 128, 8))
        assert np.all(phases <= math.pi) and np.all(phases >= -math.pi)


class TestKuramotoOrder:
    def test_aligned_phases(self):
        assert kuramoto_order([0.7, 0.7, 0.7, 0.7]) == pytest.approx(1.0, abs=1e-12)

    def test_symmetric_cancellation(self):
        r = kuramoto_order([0.0, 2 * math.pi / 3, 4 * math.pi / 3])
        assert r == pytest.approx(0.0, abs=1e-12)

    def test_hand_computed_pair(self):
        # |(1 + i)/2| = sqrt(2)/2
        assert kuramoto_order([0.0, math.pi / 2]) == pytest.approx(math.sqrt(2) / 2, abs=1e-12)

    def test_needs_two_phases(self):
        with pytest.raises(DomainError):
            kuramoto_order([0.3])

    def test_bounds_and_shift_invariance(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            theta = rng.uniform(-math.pi, math.pi, size=rng.integers(2, 12))
            r = kuramoto_order(theta)
            assert 0.0 <= r <= 1.0
            shift = rng.uniform(-10, 10)
            assert kuramoto_order(theta + shift) == pytest.approx(r, abs=1e-9)


class TestMetastability:
    def test_constant_series(self):
        assert metastability_series([0.5, 0.5, 0.5]).values == [0.0, 0.0, 0.0]

    def test_population_std_of_two(self):
        m = metastability_series([0.0, 1.0])
        assert m[0] == 0.0
        assert m[1] == pytest.approx(0.5, abs=1e-12)

    def test_single_sample_convention(self):
        assert metastability_series([1.0]).values == [0.0]

    def test_zero_iff_constant_prefix(self):
        m = metastability_series([0.4, 0.4, 0.4, 0.9, 0.9])
        assert m[2] == 0.0
        assert all(v > 0 for v in m.values[3:])

    def test_r_out_of_range_rejected(self):
        with pytest.raises(DomainError):
            metastability_series([0.5, 1.2])


class TestSynchronyPipeline:
    def test_identical_layers_fully_synchronized(self):
        sig = gen_fgn(0.7, 64, 5)
        r, m = synchrony_pipeline(trace_from([sig, sig, sig]), "retrospective")
        assert all(v == pytest.approx(1.0, abs=1e-12) for v in r.values)
        assert all(v == pytest.approx(0.0, abs=1e-12) for v in m.values)

    def test_uniform_phase_spread_gives_low_r(self):
        n = 64
        t = np.arange(n)
        base = 2 * math.pi * 6 * t / n
        layers = [np.sin(base + 2 * math.pi * l / 16) for l in range(16)]
        r, _ = synchrony_pipeline(trace_from(layers), "retrospective")
        _, vals = r.present()
        assert np.mean(vals) < 0.25

    def test_regime_shift_raises_metastability(self):
        # aligned first half, anti-phase second half: cumulative std must rise
        n = 64
        t = np.arange(n)
        base = 2 * math.pi * 6 * t / n
        layers = []
        for l in range(4):
            x = np.sin(base).copy()
            x[n // 2 :] = np.sin(base[n // 2 :] + math.pi * l)
            layers.append(x)
        _, m = synchrony_pipeline(trace_from(layers), "retrospective")
        assert m[-1] > m[n // 2 - 1]

    def test_causal_prefix_missing_policy(self):
        layers = [gen_fgn(0.6, 64, i)[:32] for i in range(3)]
        r, m = synchrony_pipeline(trace_from(layers), "causal")
        assert r[0] is None and r[2] is None and m[2] is None
        assert all(v is not None for v in r.values[3:])

    def test_causal_matches_retrospective_at_final_epoch(self):
        layers = [gen_fgn(0.6, 64, 20 + i) for i in range(4)]
        r_retro, _ = synchrony_pipeline(trace_from(layers), "retrospective")
        r_causal, _ = synchrony_pipeline(trace_from(layers), "causal")
        assert r_causal[-1] == pytest.approx(r_retro[-1], abs=1e-12)

    def test_constant_layer_propagates_degenerate(self):
        layers = [np.ones(32), gen_fgn(0.5, 64, 1)[:32]]
        with pytest.raises(DegenerateInput, match="l0"):
            synchrony_pipeline(trace_from(layers), "retrospective")
