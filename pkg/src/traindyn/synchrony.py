"""Analytic-phase extraction, Kuramoto order parameter and metastability."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import hilbert

from .errors import DegenerateInput, DomainError
from .trace import ActivationTrace, MetricSeries

# The frequency-domain analytic signal is meaningless below 4 samples.
MIN_PHASE_SAMPLES = 4


@dataclass
class PhaseMatrix:
    """Per-epoch, per-layer analytic phases in (-pi, pi]."""

    phases: np.ndarray  # shape (epochs, layers)

    def __post_init__(self) -> None:
        if self.phases.ndim != 2:
            raise DomainError("phase matrix must be 2D (epochs x layers)")
        if not np.all(np.isfinite(self.phases)):
            raise DomainError("non-finite phase value")


def analytic_phase(signal) -> np.ndarray:
    """Instantaneous phase of the discrete analytic signal.

    The signal mean is removed, the analytic signal is built in the
    frequency domain (negative frequencies zeroed, positive doubled, DC
    and Nyquist kept unscaled) and the element-wise argument is returned.
    No windowing or padding is applied, so edge samples are distorted on
    short series.

    Raises DegenerateInput for a constant signal (phase undefined) and
    DomainError for non-finite values or fewer than 4 samples.
    """
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1 or x.size < MIN_PHASE_SAMPLES:
        raise DomainError(f"analytic phase needs >= {MIN_PHASE_SAMPLES} samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DomainError("non-finite value in signal")
    centered = x - x.mean()
    if np.all(centered == 0.0):
        raise DegenerateInput("constant signal has no defined phase")
    return np.angle(hilbert(centered))


def kuramoto_order(phases_at_t) -> float:
    """Magnitude of the mean unit phasor across layers, in [0, 1]."""
    theta = np.asarray(phases_at_t, dtype=float)
    if theta.ndim != 1 or theta.size < 2:
        raise DomainError("order parameter needs >= 2 phases")
    if not np.all(np.isfinite(theta)):
        raise DomainError("non-finite phase")
    r = float(np.abs(np.mean(np.exp(1j * theta))))
    return min(r, 1.0)


def metastability_series(r_series) -> MetricSeries:
    """Cumulative metastability: M(t) is the population std of R(1..t).

    M(1) = 0 by the single-sample convention; population (divide-by-t)
    std keeps M defined from the first epoch.
    """
    r = np.asarray(r_series, dtype=float)
    if r.size and (np.min(r) < 0.0 or np.max(r) > 1.0):
        raise DomainError("R values must lie in [0, 1]")
    k = np.arange(1, r.size + 1, dtype=float)
    mean = np.cumsum(r) / k
    mean_sq = np.cumsum(r * r) / k
    var = np.maximum(mean_sq - mean * mean, 0.0)
    return MetricSeries(np.sqrt(var))


def synchrony_pipeline(
    trace: ActivationTrace, mode: str = "retrospective"
) -> tuple[MetricSeries, MetricSeries]:
    """Order-parameter series R and cumulative metastability M for a trace.

    Retrospective mode extracts phases once from each full layer signal and
    evaluates R per epoch. Causal mode re-extracts the phase on each prefix
    x_l(1..t) and keeps the final phase sample, leaving epochs t < 4
    MISSING. M accumulates over the valid R epochs in either mode.
    """
    n = trace.n_epochs
    if mode == "retrospective":
        matrix = PhaseMatrix(
            np.column_stack(
                [_layer_phase(trace, i, n) for i in range(trace.n_layers)]
            )
        )
        r_values = [kuramoto_order(matrix.phases[t]) for t in range(n)]
        return MetricSeries(r_values), metastability_series(r_values)
    if mode == "causal":
        r_list: list[float | None] = [None] * n
        for t in range(MIN_PHASE_SAMPLES - 1, n):
            theta = [_layer_phase(trace, i, t + 1)[-1] for i in range(trace.n_layers)]
            r_list[t] = kuramoto_order(theta)
        valid_idx = [i for i, v in enumerate(r_list) if v is not None]
        m_valid = metastability_series([r_list[i] for i in valid_idx])
        m_list: list[float | None] = [None] * n
        for j, i in enumerate(valid_idx):
            m_list[i] = m_valid[j]
        return MetricSeries(r_list), MetricSeries(m_list)
    raise DomainError(f"unknown mode {mode!r}")


def _layer_phase(trace: ActivationTrace, layer: int, length: int) -> np.ndarray:
    sig = trace.layer_signal(layer)[:length]
    try:
        return analytic_phase(sig)
    except DegenerateInput:
        name = trace.layer_names[layer]
        raise DegenerateInput(
            f"layer '{name}': constant signal over epochs 1..{length}"
        ) from None
