"""Four-state classification of training dynamics.

A completed analysis is summarised by three signatures: the late-window
effective integration level, the volatility-trend label of the composite
index, and the inter-field synchrony coefficient. The classifier maps the
signature to one of four named states, or to ``unclassified`` when the
signature falls outside every band (the published bands are not
exhaustive; mid-range integration with no collapse, for instance, has no
state).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import DomainError, InsufficientData
from .trace import MetricSeries

RAPIDLY_COLLAPSING = "rapidly_collapsing"
SLOWLY_COLLAPSING = "slowly_collapsing"
PERSISTENTLY_ELEVATED = "persistently_elevated"
FLAT_NONCONVERGING = "flat_nonconverging"

TREND_NAMES = (
    RAPIDLY_COLLAPSING,
    SLOWLY_COLLAPSING,
    PERSISTENTLY_ELEVATED,
    FLAT_NONCONVERGING,
)

STABLE_CONVERGENT = "stable_convergent"
METASTABLE_HIGH_INTEGRATION = "metastable_high_integration"
PARTIAL_INTEGRATION = "partial_integration"
RIGIDLY_SYNCHRONISED = "rigidly_synchronised"
UNCLASSIFIED = "unclassified"

STATE_LABELS = (
    STABLE_CONVERGENT,
    METASTABLE_HIGH_INTEGRATION,
    PARTIAL_INTEGRATION,
    RIGIDLY_SYNCHRONISED,
    UNCLASSIFIED,
)

# Integration bands and the synchrony lock bound, per the published state table.
HEFF_LOW_BAND = 0.15
HEFF_PARTIAL_HIGH = 0.50
HEFF_HIGH_BAND = 0.85
SYNC_LOCK_BOUND = 0.80


@dataclass
class TaxonomySignature:
    """Inputs to the state classifier."""

    heff_late: float
    trend: str
    r_hz_mz: float
    r_psi_acc: Optional[float] = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.heff_late <= 1.0:
            raise DomainError(f"heff_late must lie in [0, 1], got {self.heff_late}")
        if self.trend not in TREND_NAMES:
            raise DomainError(f"unknown trend {self.trend!r}")
        if not -1.0 <= self.r_hz_mz <= 1.0:
            raise DomainError("r_hz_mz must lie in [-1, 1]")
        if self.r_psi_acc is not None and not -1.0 <= self.r_psi_acc <= 1.0:
            raise DomainError("r_psi_acc must lie in [-1, 1]")


def volatility_trend(
    sigma_psi: MetricSeries,
    threshold: float,
    rapid_ratio: float = 0.6,
    slow_ratio: float = 0.85,
    flat_tolerance: float = 0.15,
) -> str:
    """Deterministic trend label for a volatility series.

    With F the first-half mean, S the second-half mean and L the final
    value (all over non-MISSING entries): rapidly collapsing when L sits
    below the threshold and S < rapid_ratio * F; slowly collapsing when
    S < slow_ratio * F but L stays at or above the threshold; flat when
    |S - F| <= flat_tolerance * F with L at or above the threshold;
    persistently elevated otherwise.
    """
    _, values = sigma_psi.present()
    if len(values) < 6:
        raise InsufficientData(f"trend needs >= 6 volatility values, got {len(values)}")
    half = len(values) // 2
    first = sum(values[:half]) / half
    second = sum(values[half:]) / (len(values) - half)
    last = values[-1]
    if last < threshold and second < rapid_ratio * first:
        return RAPIDLY_COLLAPSING
    if second < slow_ratio * first and last >= threshold:
        return SLOWLY_COLLAPSING
    if abs(second - first) <= flat_tolerance * first and last >= threshold:
        return FLAT_NONCONVERGING
    return PERSISTENTLY_ELEVATED


def classify_state(sig: TaxonomySignature, partial_sync_bound: float = 0.5) -> str:
    """Map a signature to its dynamical state label (total function).

    Decision order: the rigidly-synchronised gate fires first (low
    integration locked to metastability), then stable convergence (high
    integration, rapid collapse, decoupled fields), then metastable
    high-integration, then partial integration; anything else is
    unclassified.
    """
    if (
        sig.heff_late < HEFF_LOW_BAND
        and sig.r_hz_mz > SYNC_LOCK_BOUND
        and sig.trend in (FLAT_NONCONVERGING, PERSISTENTLY_ELEVATED)
    ):
        return RIGIDLY_SYNCHRONISED
    if sig.heff_late > HEFF_HIGH_BAND and sig.trend == RAPIDLY_COLLAPSING and sig.r_hz_mz < 0:
        return STABLE_CONVERGENT
    if sig.heff_late > HEFF_HIGH_BAND and sig.trend in (
        PERSISTENTLY_ELEVATED,
        SLOWLY_COLLAPSING,
        FLAT_NONCONVERGING,
    ):
        return METASTABLE_HIGH_INTEGRATION
    if (
        HEFF_LOW_BAND <= sig.heff_late <= HEFF_PARTIAL_HIGH
        and sig.trend in (SLOWLY_COLLAPSING, RAPIDLY_COLLAPSING)
        and abs(sig.r_hz_mz) < partial_sync_bound
    ):
        return PARTIAL_INTEGRATION
    return UNCLASSIFIED
