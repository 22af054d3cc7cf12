"""Detrended fluctuation analysis and the effective integration score.

The chain per layer signal is: cumulative mean-removed profile, windowed
linear detrending to get the fluctuation function F(s), a log-log fit whose
slope is the Hurst exponent, the across-layer mean, and finally a Gaussian
tuning map that scores proximity to a target exponent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, DomainError, InsufficientData
from .trace import ActivationTrace, AnalysisConfig, MetricSeries

# A meaningful log-log fit needs at least this many scales.
MIN_FIT_SCALES = 4

# Cached per-scale linear-detrending operators: scale -> (X, P) with
# beta = P @ window and trend = X @ beta.
_DETREND_OPS: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _detrend_ops(s: int) -> tuple[np.ndarray, np.ndarray]:
    ops = _DETREND_OPS.get(s)
    if ops is None:
        x = np.arange(s, dtype=float)
        X = np.column_stack([np.ones(s), x])
        P = np.linalg.inv(X.T @ X) @ X.T
        ops = (X, P)
        _DETREND_OPS[s] = ops
    return ops


@dataclass
class FluctuationCurve:
    """Fluctuation function F(s) sampled on an increasing integer scale grid."""

    scales: list[int]
    fluctuations: list[float]

    def __post_init__(self) -> None:
        if len(self.scales) != len(self.fluctuations):
            raise DomainError("scales and fluctuations must have equal length")
        if any(b <= a for a, b in zip(self.scales, self.scales[1:])):
            raise DomainError("scales must be strictly increasing")
        if any(f <= 0 for f in self.fluctuations):
            raise DomainError("fluctuations must be positive")


@dataclass
class HurstEstimate:
    """Fitted scaling exponent with its log-log fit quality."""

    hurst: float
    fit_r_squared: float
    n_scales: int


def cumulative_profile(signal) -> np.ndarray:
    """Cumulative sum of the mean-removed signal.

    Parameters
    ----------
    signal : array-like
        Raw 1D signal, length >= 2, all finite.

    Returns
    -------
    np.ndarray
        Profile Y with Y[k] = sum of (x[i] - mean(x)) for i <= k. The last
        element is zero up to accumulated rounding.
    """
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise DomainError(f"profile needs a 1D signal of length >= 2, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError("non-finite value in signal")
    return np.cumsum(x - x.mean())


def dfa_scales(n: int, min_scale: int = 4, max_scales: int = 12) -> list[int]:
    """Integer scale grid for a length-n profile.

    Log-spaced between min_scale and n // 4, deduplicated, at most
    max_scales entries. Series shorter than 4 * min_scale yield no grid at
    all (too short for any estimate). When n // 4 leaves fewer than the
    four scales a fit needs, the grid extends to the minimal consecutive
    run {min_scale .. min_scale + 3}; every scale keeps at least two full
    windows per traversal direction since min_scale + 3 <= n // 2 whenever
    n >= 4 * min_scale >= 16.
    """
    if n < 4 * min_scale:
        return []
    hi = max(n // 4, min_scale + MIN_FIT_SCALES - 1)
    hi = min(hi, n // 2)
    n_points = min(max_scales, hi - min_scale + 1)
    grid = np.geomspace(min_scale, hi, num=n_points)
    return sorted(set(int(round(s)) for s in grid))


def fluctuation_function(profile, scales) -> FluctuationCurve:
    """Windowed-detrending fluctuation function over the given scales.

    For each scale s the profile is partitioned into non-overlapping
    length-s windows traversed from both the start and the end of the
    series (2 * floor(N/s) windows total), a degree-1 trend is fitted per
    window, and F(s) is the square root of the mean over all windows of
    the per-window mean squared residual. Scales producing zero windows,
    or zero fluctuation, are omitted from the returned curve.

    Raises
    ------
    InsufficientData
        If no scale yields at least one window.
    DegenerateInput
        If the profile detrends exactly to zero at every scale (constant
        or perfectly linear profile).
    """
    y = np.asarray(profile, dtype=float)
    n = y.size
    # Residuals of an exactly constant or linear profile are pure rounding
    # noise; treat them as zero relative to the profile's own magnitude.
    zero_tol = 1e-12 * max(1.0, float(np.abs(y).max()))
    out_scales: list[int] = []
    out_f: list[float] = []
    any_windows = False
    for s in sorted(set(int(v) for v in scales)):
        if s < 2 or s > n:
            continue
        nwin = n // s
        if nwin < 1:
            continue
        any_windows = True
        fwd = y[: nwin * s].reshape(nwin, s)
        bwd = y[n - nwin * s :].reshape(nwin, s)
        windows = np.vstack([fwd, bwd])
        X, P = _detrend_ops(s)
        beta = P @ windows.T          # (2, 2*nwin)
        resid = windows.T - X @ beta  # (s, 2*nwin)
        mses = np.mean(resid * resid, axis=0)
        f = math.sqrt(float(np.mean(mses)))
        if f > zero_tol:
            out_scales.append(s)
            out_f.append(f)
    if not any_windows:
        raise InsufficientData("no scale yields a single window")
    if not out_scales:
        raise DegenerateInput("zero fluctuation at every scale (constant or linear profile)")
    return FluctuationCurve(scales=out_scales, fluctuations=out_f)


def fit_hurst(curve: FluctuationCurve) -> HurstEstimate:
    """Least-squares fit of log F(s) against log s; the slope is the Hurst exponent."""
    if len(curve.scales) < MIN_FIT_SCALES:
        raise InsufficientData(
            f"log-log fit needs >= {MIN_FIT_SCALES} scales, got {len(curve.scales)}"
        )
    log_s = np.log(np.asarray(curve.scales, dtype=float))
    log_f = np.log(np.asarray(curve.fluctuations, dtype=float))
    slope, intercept = np.polyfit(log_s, log_f, 1)
    pred = slope * log_s + intercept
    ss_res = float(np.sum((log_f - pred) ** 2))
    ss_tot = float(np.sum((log_f - log_f.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return HurstEstimate(
        hurst=float(slope),
        fit_r_squared=float(min(max(r2, 0.0), 1.0)),
        n_scales=len(curve.scales),
    )


def hurst_estimate(signal, min_scale: int = 4) -> HurstEstimate:
    """Full DFA chain for one signal: profile, fluctuation curve, log-log fit."""
    y = cumulative_profile(signal)
    scales = dfa_scales(y.size, min_scale)
    if not scales:
        raise InsufficientData(
            f"series of length {y.size} is shorter than {4 * min_scale}"
        )
    return fit_hurst(fluctuation_function(y, scales))


def mean_hurst(per_layer: list[HurstEstimate]) -> float:
    """Arithmetic mean of per-layer Hurst exponents (the raw integration measure)."""
    if not per_layer:
        raise InsufficientData("no layer estimates")
    return float(np.mean([e.hurst for e in per_layer]))


def gaussian_tuning(h_raw: float, h_opt: float, sigma_h: float) -> float:
    """Gaussian score of proximity to the target exponent, in (0, 1].

    Equals 1 exactly when h_raw == h_opt, is symmetric about h_opt and
    strictly decreasing in |h_raw - h_opt|.
    """
    if sigma_h <= 0:
        raise DomainError(f"sigma_h must be positive, got {sigma_h}")
    d = h_raw - h_opt
    return math.exp(-(d * d) / (2.0 * sigma_h * sigma_h))


def heff_series(
    trace: ActivationTrace,
    config: AnalysisConfig,
    mode: str = "causal",
) -> tuple[MetricSeries, MetricSeries]:
    """Per-epoch effective integration and raw mean-Hurst series.

    Epoch t's estimate uses the signal prefix x_l(1..t); both modes share
    this prefix machinery (retrospective mode differs only in the
    full-series scalar summaries reported elsewhere, see
    layer_full_hurst). Epochs whose prefix is too short for a fit, or
    where any layer's fit is degenerate, are MISSING.
    """
    if mode not in ("causal", "retrospective"):
        raise DomainError(f"unknown mode {mode!r}")
    n = trace.n_epochs
    signals = [np.asarray(trace.layer_signal(i), dtype=float) for i in range(trace.n_layers)]
    h_eff: list[float | None] = [None] * n
    h_raw: list[float | None] = [None] * n
    min_prefix = 4 * config.dfa_min_scale
    for t in range(n):
        length = t + 1
        if length < min_prefix:
            continue
        scales = dfa_scales(length, config.dfa_min_scale)
        estimates = []
        for sig in signals:
            try:
                profile = np.cumsum(sig[:length] - sig[:length].mean())
                estimates.append(fit_hurst(fluctuation_function(profile, scales)))
            except (InsufficientData, DegenerateInput):
                estimates = []
                break
        if not estimates:
            continue
        raw = mean_hurst(estimates)
        h_raw[t] = raw
        h_eff[t] = gaussian_tuning(raw, config.h_opt, config.sigma_h)
    return MetricSeries(h_eff), MetricSeries(h_raw)


def layer_full_hurst(trace: ActivationTrace, config: AnalysisConfig) -> dict[str, HurstEstimate]:
    """Retrospective per-layer Hurst estimates from each full-length signal."""
    out = {}
    for name in trace.layer_names:
        out[name] = hurst_estimate(trace.layer_signal(name), config.dfa_min_scale)
    return out
