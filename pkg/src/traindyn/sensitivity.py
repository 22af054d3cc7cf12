"""Parameter sweeps over stored metric series.

Every sweep consumes series already produced by an analysis (the stored
raw Hurst exponents, normalized fields and volatility); nothing here
re-runs DFA or phase extraction, which keeps a full sweep O(grid x epochs)
and guarantees the grid cell at the default parameters reproduces the
report's own summary value exactly.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .composite import pearson, plateau_epoch, psi_series, threshold_crossing
from .dfa import gaussian_tuning
from .errors import DegenerateInput, DomainError, InsufficientData
from .trace import MetricSeries

DEFAULT_H_OPT_GRID = (0.5, 0.6, 0.7, 0.8)
DEFAULT_SIGMA_GRID = (0.05, 0.10, 0.15, 0.20)
DEFAULT_WEIGHT_GRID = (0.3, 0.5, 0.7)
DEFAULT_THRESHOLD_GRID = (0.25, 0.30, 0.35)

DASH = "---"


def heff_grid(
    h_raw_series: MetricSeries,
    h_opt_values: Sequence[float] = DEFAULT_H_OPT_GRID,
    sigma_h_values: Sequence[float] = DEFAULT_SIGMA_GRID,
) -> list[dict]:
    """Mean effective integration for every (h_opt, sigma_h) pair.

    Applies the Gaussian tuning element-wise to the stored raw exponents
    and averages over non-MISSING epochs. Cells are returned row-major in
    grid order: one dict per (h_opt, sigma_h).
    """
    _, raw = h_raw_series.present()
    if not raw:
        raise InsufficientData("no raw Hurst values to sweep")
    if not h_opt_values or not sigma_h_values:
        raise DomainError("parameter grids must be non-empty")
    cells = []
    for h_opt in h_opt_values:
        for sigma_h in sigma_h_values:
            scores = [gaussian_tuning(h, h_opt, sigma_h) for h in raw]
            cells.append(
                {
                    "h_opt": float(h_opt),
                    "sigma_h": float(sigma_h),
                    "mean_heff": float(np.mean(scores)),
                }
            )
    return cells


def separation_flag(group_a_mean: float, group_b_mean: float, gap: float) -> bool:
    """True iff group A's mean exceeds group B's by strictly more than `gap`."""
    return group_a_mean - group_b_mean > gap


def weight_grid(
    heff_norm: MetricSeries,
    m_norm: MetricSeries,
    accuracy: MetricSeries,
    w_h_values: Sequence[float] = DEFAULT_WEIGHT_GRID,
) -> dict:
    """Accuracy correlation of the composite index under varied weights.

    Recomputes the composite per weight setting from the stored normalized
    fields and reports r(composite, accuracy) for each, plus whether the
    correlation's sign is constant across the grid.
    """
    if accuracy.n_valid() == 0:
        raise InsufficientData("accuracy required for the weight sweep")
    cells = []
    signs = set()
    for w_h in w_h_values:
        psi = psi_series(heff_norm, m_norm, w_h, 1.0 - w_h)
        try:
            r = pearson(psi, accuracy)
            signs.add(r > 0 if r != 0 else None)
        except (DegenerateInput, InsufficientData):
            r = None
        cells.append({"w_h": float(w_h), "r_psi_acc": r})
    available = [c for c in cells if c["r_psi_acc"] is not None]
    sign_stable = len(signs) == 1 and len(available) == len(cells) and bool(available)
    return {"cells": cells, "sign_stable": sign_stable}


def threshold_grid(
    sigma_psi: MetricSeries,
    thresholds: Sequence[float] = DEFAULT_THRESHOLD_GRID,
    accuracy: Optional[MetricSeries] = None,
    epochs: Optional[Sequence[int]] = None,
    plateau_fraction: float = 0.99,
) -> dict:
    """First-crossing epoch per volatility threshold, plus the accuracy plateau.

    Never-crossed thresholds carry None (rendered as dashes in text output).
    """
    cells = []
    for th in thresholds:
        cells.append(
            {
                "threshold": float(th),
                "crossing_epoch": threshold_crossing(sigma_psi, th, epochs),
            }
        )
    plateau = None
    if accuracy is not None and accuracy.n_valid() > 0:
        plateau = plateau_epoch(accuracy, plateau_fraction, epochs)
    return {"cells": cells, "accuracy_plateau_epoch": plateau}


def render_heff_grid(cells: list[dict]) -> str:
    lines = [f"{'H_opt':>6} {'sigma_H':>8} {'mean H_eff':>11}"]
    for c in cells:
        lines.append(f"{c['h_opt']:>6.2f} {c['sigma_h']:>8.2f} {c['mean_heff']:>11.3f}")
    return "\n".join(lines)


def render_weight_grid(result: dict) -> str:
    lines = [f"{'w_H':>6} {'r(Psi,acc)':>11}"]
    for c in result["cells"]:
        r = c["r_psi_acc"]
        lines.append(f"{c['w_h']:>6.2f} {DASH if r is None else format(r, '+.3f'):>11}")
    lines.append(f"sign stable across grid: {'yes' if result['sign_stable'] else 'no'}")
    return "\n".join(lines)


def render_threshold_grid(result: dict) -> str:
    header = " ".join(f"{'<' + format(c['threshold'], '.2f'):>8}" for c in result["cells"])
    row = " ".join(
        f"{DASH if c['crossing_epoch'] is None else c['crossing_epoch']:>8}"
        for c in result["cells"]
    )
    plateau = result["accuracy_plateau_epoch"]
    lines = [header + f" {'acc. plateau':>13}", row + f" {DASH if plateau is None else plateau:>13}"]
    return "\n".join(lines)
