"""Trace data model: epoch-indexed per-layer activation signals.

A trace is the pipeline's sole input: one record per training epoch holding
the batch-mean activation of each hooked layer, plus optional validation
accuracy. Two file formats are supported:

* CSV: UTF-8, header ``epoch,acc,<layer_1>,...,<layer_n>`` (the ``acc``
  column is optional), rows sorted by epoch, ``.`` decimal point. Leading
  lines starting with ``#`` are treated as comments.
* JSONL: one object per epoch with keys ``epoch`` (integer), ``acc``
  (number, optional) and ``signals`` (object mapping layer name to number).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Iterator, Optional, Sequence

from .errors import DomainError, InsufficientData, ParseError, SchemaError

MISSING = None


@dataclass
class EpochRecord:
    """One epoch's worth of per-layer signals plus optional validation stats."""

    epoch: int
    signals: list[float]
    val_accuracy: Optional[float] = None
    val_loss: Optional[float] = None

    def __post_init__(self) -> None:
        if self.epoch < 1:
            raise DomainError(f"epoch index must be a positive integer, got {self.epoch}")
        if any(not math.isfinite(v) for v in self.signals):
            raise DomainError(f"epoch {self.epoch}: non-finite signal value")
        if self.val_accuracy is not None and not 0.0 <= self.val_accuracy <= 1.0:
            raise DomainError(
                f"epoch {self.epoch}: accuracy {self.val_accuracy} outside [0, 1]"
            )
        if self.val_loss is not None and (not math.isfinite(self.val_loss) or self.val_loss < 0):
            raise DomainError(f"epoch {self.epoch}: loss must be finite and nonnegative")


@dataclass
class ActivationTrace:
    """Epoch-ordered per-layer scalar signals for one training run.

    Invariants enforced on construction: at least two layers, every record
    carries exactly one signal per layer, and epoch indices are strictly
    increasing positive integers (gaps are allowed; a skipped epoch in a
    crash-safe partial trace must remain loadable).
    """

    run_id: str
    layer_names: list[str]
    epochs: list[EpochRecord]

    def __post_init__(self) -> None:
        n_layers = len(self.layer_names)
        if n_layers < 2:
            raise SchemaError("a trace needs at least 2 layers (phase synchrony is undefined for one)")
        if len(set(self.layer_names)) != n_layers:
            raise SchemaError("duplicate layer names")
        last = 0
        for rec in self.epochs:
            if len(rec.signals) != n_layers:
                raise SchemaError(
                    f"epoch {rec.epoch}: {len(rec.signals)} signals for {n_layers} layers"
                )
            if rec.epoch <= last:
                raise SchemaError(f"epoch indices not strictly increasing at {rec.epoch}")
            last = rec.epoch

    @property
    def n_epochs(self) -> int:
        return len(self.epochs)

    @property
    def n_layers(self) -> int:
        return len(self.layer_names)

    @property
    def epoch_indices(self) -> list[int]:
        return [rec.epoch for rec in self.epochs]

    def layer_signal(self, layer: int | str) -> list[float]:
        """Signal x_l(t) of one layer across all epochs, by index or name."""
        idx = self.layer_names.index(layer) if isinstance(layer, str) else layer
        return [rec.signals[idx] for rec in self.epochs]

    def accuracy_series(self) -> "MetricSeries":
        return MetricSeries([rec.val_accuracy for rec in self.epochs])

    def has_accuracy(self) -> bool:
        return any(rec.val_accuracy is not None for rec in self.epochs)


class MetricSeries:
    """Epoch-aligned sequence of optionally-missing real values.

    Entries are floats or MISSING (None). NaN inputs coerce to MISSING,
    the convention every downstream statistic honours. Length always
    equals the epoch count of the trace the series was derived from.
    """

    __slots__ = ("values",)

    def __init__(self, values: Sequence[Optional[float]]):
        self.values = [self._norm(v) for v in values]

    @staticmethod
    def _norm(v) -> Optional[float]:
        if v is None:
            return None
        f = float(v)
        return None if math.isnan(f) else f

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i: int) -> Optional[float]:
        return self.values[i]

    def __iter__(self) -> Iterator[Optional[float]]:
        return iter(self.values)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, MetricSeries) and self.values == other.values

    def __repr__(self) -> str:
        return f"MetricSeries({self.values!r})"

    def present(self) -> tuple[list[int], list[float]]:
        """Positions and values of the non-MISSING entries, in order."""
        idx = [i for i, v in enumerate(self.values) if v is not None]
        return idx, [self.values[i] for i in idx]

    def n_valid(self) -> int:
        return sum(1 for v in self.values if v is not None)

    def to_json(self) -> list[Optional[float]]:
        return list(self.values)

    @classmethod
    def full(cls, length: int) -> "MetricSeries":
        return cls([None] * length)


@dataclass
class AnalysisConfig:
    """All tunable parameters of the pipeline.

    Defaults reproduce the reference configuration: integration target 0.7
    with tuning width 0.1, equal composite weights, a five-epoch rolling
    window and a 0.30 volatility threshold. The taxonomy gates (trend
    ratios, the decoupling bound and the late-window fraction) are artifact
    calibrations, exposed here rather than hard-coded.
    """

    h_opt: float = 0.7
    sigma_h: float = 0.1
    w_h: float = 0.5
    rolling_window: int = 5
    volatility_threshold: float = 0.30
    phase_mode: str = "retrospective"  # or "causal"
    dfa_min_scale: int = 4
    plateau_fraction: float = 0.99
    hz_field: str = "heff"  # integration field for r(H_z, M_z): "heff" or "hraw"
    late_window_fraction: float = 0.25
    heff_summary: str = "late"  # taxonomy uses late-window mean; "full" for full-trace mean
    trend_rapid_ratio: float = 0.6
    trend_slow_ratio: float = 0.85
    trend_flat_tolerance: float = 0.15
    partial_sync_bound: float = 0.5

    @property
    def w_m(self) -> float:
        # Derived, so w_h + w_m = 1 holds exactly.
        return 1.0 - self.w_h

    def __post_init__(self) -> None:
        if not 0.0 <= self.w_h <= 1.0:
            raise DomainError(f"w_h must lie in [0, 1], got {self.w_h}")
        if self.sigma_h <= 0:
            raise DomainError(f"sigma_h must be positive, got {self.sigma_h}")
        if self.rolling_window < 2:
            raise DomainError(f"rolling_window must be >= 2, got {self.rolling_window}")
        if self.dfa_min_scale < 4:
            raise DomainError(f"dfa_min_scale must be >= 4, got {self.dfa_min_scale}")
        if self.volatility_threshold <= 0:
            raise DomainError("volatility_threshold must be positive")
        if not 0.0 < self.plateau_fraction <= 1.0:
            raise DomainError(f"plateau_fraction must lie in (0, 1], got {self.plateau_fraction}")
        if self.phase_mode not in ("retrospective", "causal"):
            raise DomainError(f"phase_mode must be 'retrospective' or 'causal', got {self.phase_mode!r}")
        if self.hz_field not in ("heff", "hraw"):
            raise DomainError(f"hz_field must be 'heff' or 'hraw', got {self.hz_field!r}")
        if not 0.0 < self.late_window_fraction <= 1.0:
            raise DomainError("late_window_fraction must lie in (0, 1]")
        if self.heff_summary not in ("late", "full"):
            raise DomainError("heff_summary must be 'late' or 'full'")

    def to_json(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["w_m"] = self.w_m
        # The per-epoch integration series is prefix-based in either phase
        # mode; recorded so a report is self-describing.
        out["dfa_mode"] = "prefix"
        return out


def load_trace(path: str | Path, format: str = "csv") -> ActivationTrace:
    """Load a trace file, preserving epoch order from the file.

    Raises ParseError for malformed rows (with line number), SchemaError for
    column/record inconsistencies and DomainError for out-of-domain values.
    No row is ever silently dropped.
    """
    path = Path(path)
    if format == "csv":
        return _load_csv(path)
    if format == "jsonl":
        return _load_jsonl(path)
    raise DomainError(f"unknown trace format {format!r}")


def _parse_float(text: str, lineno: int, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"line {lineno}: cannot parse {what} value {text!r}") from None


def _load_csv(path: Path) -> ActivationTrace:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()

    header = None
    header_line = 0
    for lineno, line in enumerate(lines, start=1):
        if line.startswith("#") or not line.strip():
            continue
        header = [c.strip() for c in line.split(",")]
        header_line = lineno
        break
    if header is None:
        raise SchemaError(f"{path}: no header row found")
    if header[0] != "epoch":
        raise SchemaError(f"line {header_line}: first column must be 'epoch', got {header[0]!r}")
    has_acc = len(header) > 1 and header[1] == "acc"
    layer_names = header[2:] if has_acc else header[1:]
    if len(layer_names) < 2:
        raise SchemaError(f"line {header_line}: at least 2 layer columns required")

    records = []
    for lineno, line in enumerate(lines, start=1):
        if lineno <= header_line or line.startswith("#") or not line.strip():
            continue
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != len(header):
            raise SchemaError(
                f"line {lineno}: expected {len(header)} columns, got {len(cells)}"
            )
        try:
            epoch = int(cells[0])
        except ValueError:
            raise ParseError(f"line {lineno}: cannot parse epoch index {cells[0]!r}") from None
        acc = None
        if has_acc and cells[1] != "":
            acc = _parse_float(cells[1], lineno, "acc")
        sig_cells = cells[2:] if has_acc else cells[1:]
        signals = [_parse_float(c, lineno, "signal") for c in sig_cells]
        records.append(EpochRecord(epoch=epoch, signals=signals, val_accuracy=acc))

    return ActivationTrace(run_id=path.stem, layer_names=layer_names, epochs=records)


def _load_jsonl(path: Path) -> ActivationTrace:
    layer_names: Optional[list[str]] = None
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"line {lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict) or "epoch" not in obj or "signals" not in obj:
                raise SchemaError(f"line {lineno}: record needs 'epoch' and 'signals' keys")
            signals_obj = obj["signals"]
            if not isinstance(signals_obj, dict):
                raise SchemaError(f"line {lineno}: 'signals' must be an object")
            if layer_names is None:
                layer_names = list(signals_obj.keys())
                if len(layer_names) < 2:
                    raise SchemaError(f"line {lineno}: at least 2 layers required")
            if set(signals_obj.keys()) != set(layer_names):
                raise SchemaError(f"line {lineno}: layer set differs from first record")
            if not isinstance(obj["epoch"], int):
                raise ParseError(f"line {lineno}: 'epoch' must be an integer")
            records.append(
                EpochRecord(
                    epoch=obj["epoch"],
                    signals=[float(signals_obj[name]) for name in layer_names],
                    val_accuracy=obj.get("acc"),
                )
            )
    if layer_names is None:
        raise SchemaError(f"{path}: empty JSONL trace")
    return ActivationTrace(run_id=path.stem, layer_names=layer_names, epochs=records)


def save_trace(trace: ActivationTrace, path: str | Path, format: str = "csv") -> None:
    """Write a trace in one of the interchange formats (round-trip exact).

    The acc column/key is emitted only when at least one epoch carries
    accuracy, so an accuracy-free trace reloads as accuracy-free.
    """
    path = Path(path)
    with_acc = trace.has_accuracy()
    if format == "csv":
        lines = []
        header = ["epoch"] + (["acc"] if with_acc else []) + list(trace.layer_names)
        lines.append(",".join(header))
        for rec in trace.epochs:
            cells = [str(rec.epoch)]
            if with_acc:
                cells.append("" if rec.val_accuracy is None else repr(rec.val_accuracy))
            cells.extend(repr(v) for v in rec.signals)
            lines.append(",".join(cells))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    elif format == "jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            for rec in trace.epochs:
                obj: dict = {"epoch": rec.epoch}
                if with_acc and rec.val_accuracy is not None:
                    obj["acc"] = rec.val_accuracy
                obj["signals"] = {n: v for n, v in zip(trace.layer_names, rec.signals)}
                fh.write(json.dumps(obj) + "\n")
    else:
        raise DomainError(f"unknown trace format {format!r}")


def validate_trace(trace: ActivationTrace, config: AnalysisConfig) -> list[str]:
    """Advisory diagnostics for a loaded trace. Returns warnings, never raises."""
    warnings = []
    min_epochs = 4 * config.dfa_min_scale
    if trace.n_epochs < min_epochs:
        warnings.append(
            f"series too short for any DFA estimate before epoch {min_epochs}"
        )
    for i, name in enumerate(trace.layer_names):
        sig = trace.layer_signal(i)
        if len(set(sig)) <= 1:
            warnings.append(f"layer '{name}' signal is constant")
    if not trace.has_accuracy():
        warnings.append("accuracy-dependent diagnostics disabled (no accuracy values)")
    return warnings
