"""Composite stability index and the derived diagnostics of a full analysis.

Combines the integration and metastability series into the composite index,
tracks its rolling volatility, and assembles every series, summary scalar
and taxonomy decision into a serializable report.

Volatility convention: the rolling standard deviation is computed on the
z-scored composite field, so volatility values are comparable across runs
and against the reference thresholds (which live on that scale; raw
composite values are confined to [0, 1] and would compress the scale by
the field's own spread).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import dfa, synchrony, taxonomy
from .errors import DegenerateInput, DomainError, InsufficientData
from .trace import ActivationTrace, AnalysisConfig, MetricSeries, validate_trace


def minmax_normalize(series: MetricSeries) -> tuple[MetricSeries, bool]:
    """Min-max normalization over the full epoch sequence.

    MISSING entries pass through. Returns the normalized series and a
    degenerate-range flag: when max == min every non-MISSING output is 0.0
    and the flag is True (a constant field is a legitimate rigid outcome,
    not an error).
    """
    idx, values = series.present()
    if len(values) < 2:
        raise InsufficientData("min-max normalization needs >= 2 values")
    lo, hi = min(values), max(values)
    out: list[Optional[float]] = [None] * len(series)
    if hi == lo:
        for i in idx:
            out[i] = 0.0
        return MetricSeries(out), True
    span = hi - lo
    for i in idx:
        out[i] = (series[i] - lo) / span
    return MetricSeries(out), False


def psi_series(
    heff_norm: MetricSeries, m_norm: MetricSeries, w_h: float, w_m: float
) -> MetricSeries:
    """Composite stability index: convex combination of the normalized fields."""
    if abs(w_h + w_m - 1.0) > 1e-12:
        raise DomainError(f"weights must sum to 1, got {w_h} + {w_m}")
    if len(heff_norm) != len(m_norm):
        raise DomainError("series must be epoch-aligned")
    out: list[Optional[float]] = []
    for h, m in zip(heff_norm, m_norm):
        out.append(None if h is None or m is None else w_h * h + w_m * m)
    return MetricSeries(out)


def rolling_volatility(series: MetricSeries, window: int) -> MetricSeries:
    """Sample std of the most recent `window` non-MISSING values ending at t.

    MISSING epochs are excluded from the lookback (they do not break the
    window); the output is MISSING at MISSING input epochs and wherever
    fewer than `window` valid values have accumulated.
    """
    if window < 2:
        raise DomainError(f"window must be >= 2, got {window}")
    idx, values = series.present()
    out: list[Optional[float]] = [None] * len(series)
    for j, i in enumerate(idx):
        if j + 1 >= window:
            chunk = values[j + 1 - window : j + 1]
            out[i] = float(np.std(chunk, ddof=1))
    return MetricSeries(out)


def zscore(series: MetricSeries) -> MetricSeries:
    """Standardize the non-MISSING entries to mean 0, population std 1."""
    idx, values = series.present()
    if len(values) < 2:
        raise InsufficientData("z-score needs >= 2 values")
    arr = np.asarray(values)
    std = float(arr.std())
    if std == 0.0:
        raise DegenerateInput("constant series cannot be z-scored")
    mean = float(arr.mean())
    out: list[Optional[float]] = [None] * len(series)
    for i, v in zip(idx, values):
        out[i] = (v - mean) / std
    return MetricSeries(out)


def pearson(a: MetricSeries, b: MetricSeries) -> float:
    """Pearson correlation over pairwise-complete epochs, in [-1, 1]."""
    if len(a) != len(b):
        raise DomainError("series must be epoch-aligned")
    pairs = [(x, y) for x, y in zip(a, b) if x is not None and y is not None]
    if len(pairs) < 3:
        raise InsufficientData(f"correlation needs >= 3 complete pairs, got {len(pairs)}")
    xs = np.asarray([p[0] for p in pairs])
    ys = np.asarray([p[1] for p in pairs])
    sx, sy = float(xs.std()), float(ys.std())
    if sx == 0.0 or sy == 0.0:
        raise DegenerateInput("constant series have no defined correlation")
    r = float(np.mean((xs - xs.mean()) * (ys - ys.mean())) / (sx * sy))
    return min(max(r, -1.0), 1.0)


def threshold_crossing(
    volatility: MetricSeries,
    threshold: float,
    epochs: Optional[Sequence[int]] = None,
) -> Optional[int]:
    """First epoch whose non-MISSING volatility falls strictly below threshold.

    Leading MISSING entries are skipped. Returns None when the threshold is
    never crossed. Without an explicit epoch-index sequence, positions are
    reported 1-based.
    """
    for i, v in enumerate(volatility):
        if v is not None and v < threshold:
            return epochs[i] if epochs is not None else i + 1
    return None


def plateau_epoch(
    accuracy: MetricSeries,
    fraction: float,
    epochs: Optional[Sequence[int]] = None,
) -> Optional[int]:
    """First epoch reaching `fraction` of the maximum accuracy."""
    if not 0.0 < fraction <= 1.0:
        raise DomainError(f"fraction must lie in (0, 1], got {fraction}")
    _, values = accuracy.present()
    if not values:
        raise InsufficientData("no accuracy values")
    target = fraction * max(values)
    for i, v in enumerate(accuracy):
        if v is not None and v >= target:
            return epochs[i] if epochs is not None else i + 1
    return None


@dataclass
class DiagnosticSummary:
    """Scalar summary row of one analysis (means are over valid epochs)."""

    mean_heff: Optional[float]
    std_heff: Optional[float]
    mean_m: Optional[float]
    mean_psi: Optional[float]
    std_psi: Optional[float]
    r_hz_mz: Optional[float]
    r_psi_acc: Optional[float]
    volatility_crossing_epoch: Optional[int]
    accuracy_plateau_epoch: Optional[int]

    def to_json(self) -> dict:
        return {
            "mean_heff": self.mean_heff,
            "std_heff": self.std_heff,
            "mean_m": self.mean_m,
            "mean_psi": self.mean_psi,
            "std_psi": self.std_psi,
            "r_hz_mz": self.r_hz_mz,
            "r_psi_acc": self.r_psi_acc,
            "volatility_crossing_epoch": self.volatility_crossing_epoch,
            "accuracy_plateau_epoch": self.accuracy_plateau_epoch,
        }


@dataclass
class AnalysisReport:
    """Everything one analysis produced, serializable to a single JSON document."""

    run_id: str
    layer_names: list[str]
    epoch_indices: list[int]
    config: AnalysisConfig
    series: dict[str, MetricSeries]
    summary: DiagnosticSummary
    signature: Optional[taxonomy.TaxonomySignature]
    state: str
    flags: dict
    layer_hurst_full: dict[str, dict]

    def to_json(self) -> dict:
        tax: dict = {"state": self.state}
        if self.signature is not None:
            tax.update(
                heff_late=self.signature.heff_late,
                trend=self.signature.trend,
                r_hz_mz=self.signature.r_hz_mz,
                r_psi_acc=self.signature.r_psi_acc,
            )
        summary = self.summary.to_json()
        summary["layer_hurst_full"] = self.layer_hurst_full
        return {
            "trace": {
                "run_id": self.run_id,
                "layer_names": self.layer_names,
                "epochs": self.epoch_indices,
            },
            "config": self.config.to_json(),
            "series": {name: s.to_json() for name, s in self.series.items()},
            "summary": summary,
            "taxonomy": tax,
            "flags": self.flags,
        }

    def to_json_text(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_json_text(), encoding="utf-8")


def _stats(series: MetricSeries) -> tuple[Optional[float], Optional[float]]:
    _, values = series.present()
    if not values:
        return None, None
    arr = np.asarray(values)
    return float(arr.mean()), float(arr.std())


def _late_mean(series: MetricSeries, fraction: float) -> Optional[float]:
    n = len(series)
    start = n - max(1, int(math.floor(fraction * n)))
    late = [v for v in series.values[start:] if v is not None]
    if not late:
        return None
    return float(np.mean(late))


def analyze(trace: ActivationTrace, config: Optional[AnalysisConfig] = None) -> AnalysisReport:
    """Run the full pipeline on a trace and assemble the report.

    Computes the integration series (prefix DFA plus Gaussian tuning), the
    synchrony series (order parameter and cumulative metastability), the
    normalized fields and composite index, its rolling volatility,
    z-scored fields, the correlation and threshold diagnostics, and the
    taxonomy classification. The report records the configuration verbatim
    and the phase mode that produced it.
    """
    if config is None:
        config = AnalysisConfig()
    flags: dict = {"warnings": validate_trace(trace, config)}
    epochs = trace.epoch_indices

    h_eff, h_raw = dfa.heff_series(trace, config, mode=config.phase_mode)
    r_series, m_series = synchrony.synchrony_pipeline(trace, mode=config.phase_mode)

    heff_norm, heff_degenerate = minmax_normalize(h_eff)
    m_norm, m_degenerate = minmax_normalize(m_series)
    flags["degenerate_heff_range"] = heff_degenerate
    flags["degenerate_m_range"] = m_degenerate

    psi = psi_series(heff_norm, m_norm, config.w_h, config.w_m)

    try:
        psi_z = zscore(psi)
        vol_input = psi_z
        flags["degenerate_psi"] = False
    except DegenerateInput:
        psi_z = MetricSeries.full(len(psi))
        vol_input = psi
        flags["degenerate_psi"] = True
    sigma_psi = rolling_volatility(vol_input, config.rolling_window)

    h_field = h_eff if config.hz_field == "heff" else h_raw
    try:
        h_z = zscore(h_field)
        m_z = zscore(m_series)
    except (DegenerateInput, InsufficientData):
        h_z = MetricSeries.full(len(h_eff))
        m_z = MetricSeries.full(len(m_series))
    try:
        r_hz_mz: Optional[float] = pearson(h_field, m_series)
    except (DegenerateInput, InsufficientData) as exc:
        r_hz_mz = None
        flags["r_hz_mz_unavailable"] = str(exc)

    accuracy = trace.accuracy_series()
    r_psi_acc: Optional[float] = None
    plateau: Optional[int] = None
    if trace.has_accuracy():
        try:
            r_psi_acc = pearson(psi, accuracy)
        except (DegenerateInput, InsufficientData) as exc:
            flags["r_psi_acc_unavailable"] = str(exc)
        try:
            plateau = plateau_epoch(accuracy, config.plateau_fraction, epochs)
        except InsufficientData:
            pass

    crossing = threshold_crossing(sigma_psi, config.volatility_threshold, epochs)

    trend: Optional[str] = None
    try:
        trend = taxonomy.volatility_trend(
            sigma_psi,
            config.volatility_threshold,
            rapid_ratio=config.trend_rapid_ratio,
            slow_ratio=config.trend_slow_ratio,
            flat_tolerance=config.trend_flat_tolerance,
        )
    except InsufficientData as exc:
        flags["trend_unavailable"] = str(exc)

    if config.heff_summary == "late":
        heff_late = _late_mean(h_eff, config.late_window_fraction)
    else:
        heff_late, _ = _stats(h_eff)

    signature: Optional[taxonomy.TaxonomySignature] = None
    state = taxonomy.UNCLASSIFIED
    if trend is not None and heff_late is not None and r_hz_mz is not None:
        signature = taxonomy.TaxonomySignature(
            heff_late=min(max(heff_late, 0.0), 1.0),
            trend=trend,
            r_hz_mz=r_hz_mz,
            r_psi_acc=r_psi_acc,
        )
        state = taxonomy.classify_state(signature, config.partial_sync_bound)
    else:
        flags["signature_incomplete"] = True

    mean_heff, std_heff = _stats(h_eff)
    mean_m, _ = _stats(m_series)
    mean_psi, std_psi = _stats(psi)

    try:
        layer_hurst = {
            name: {"hurst": est.hurst, "r_squared": est.fit_r_squared}
            for name, est in dfa.layer_full_hurst(trace, config).items()
        }
    except (InsufficientData, DegenerateInput):
        layer_hurst = {}

    series = {
        "h_raw": h_raw,
        "h_eff": h_eff,
        "r": r_series,
        "m": m_series,
        "h_eff_norm": heff_norm,
        "m_norm": m_norm,
        "psi": psi,
        "psi_z": psi_z,
        "sigma_psi": sigma_psi,
        "h_z": h_z,
        "m_z": m_z,
    }
    if trace.has_accuracy():
        series["accuracy"] = accuracy

    summary = DiagnosticSummary(
        mean_heff=mean_heff,
        std_heff=std_heff,
        mean_m=mean_m,
        mean_psi=mean_psi,
        std_psi=std_psi,
        r_hz_mz=r_hz_mz,
        r_psi_acc=r_psi_acc,
        volatility_crossing_epoch=crossing,
        accuracy_plateau_epoch=plateau,
    )
    return AnalysisReport(
        run_id=trace.run_id,
        layer_names=list(trace.layer_names),
        epoch_indices=epochs,
        config=config,
        series=series,
        summary=summary,
        signature=signature,
        state=state,
        flags=flags,
        layer_hurst_full=layer_hurst,
    )
