"""Forward-hook registration and per-epoch trace recording."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import torch

logger = logging.getLogger(__name__)


class CaptureError(Exception):
    """Base class for capture-side errors."""


class LayerNotFound(CaptureError):
    """A layer path does not resolve inside the model."""


class DuplicateHook(CaptureError):
    """The same layer path was requested twice."""


@dataclass
class ActivationBatch:
    """One hooked layer's activation tensor for one forward pass."""

    layer: str
    values: torch.Tensor  # batch x features (original shape preserved)

    def scalar_mean(self) -> float:
        # Mean over every element (batch and features); float64 accumulation
        # keeps the reduction within tolerance for large tensors.
        return float(self.values.double().mean().item())


class HookSet:
    """Handles for a set of registered forward hooks plus their last captures.

    Hooks are observers only: they detach and store each layer's output
    without modifying the forward result. Use as a context manager or call
    detach() for clean removal.
    """

    def __init__(self, layer_names: Sequence[str]):
        self.layer_names = list(layer_names)
        self._handles: list = []
        self._captured: dict[str, torch.Tensor] = {}

    def _make_hook(self, name: str):
        def hook(module, inputs, output):
            self._captured[name] = output.detach()

        return hook

    def captured(self) -> dict[str, ActivationBatch]:
        return {
            name: ActivationBatch(name, self._captured[name])
            for name in self.layer_names
            if name in self._captured
        }

    def clear(self) -> None:
        self._captured.clear()

    def detach(self) -> None:
        for handle in self._handles:
            handle.remove()
        self._handles.clear()

    def __enter__(self) -> "HookSet":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.detach()

    def __len__(self) -> int:
        return len(self._handles)


def register_hooks(model: torch.nn.Module, layer_specs: Sequence[str]) -> HookSet:
    """Attach observer hooks at the given dotted module paths.

    Each path must resolve inside the model (LayerNotFound otherwise) and may
    appear only once (DuplicateHook). Subsequent forward passes record each
    hooked layer's output; the returned handle set supports clean detach.
    """
    seen = set()
    for spec in layer_specs:
        if spec in seen:
            raise DuplicateHook(f"layer {spec!r} requested twice")
        seen.add(spec)
    hook_set = HookSet(layer_specs)
    for spec in layer_specs:
        try:
            module = model.get_submodule(spec)
        except AttributeError:
            hook_set.detach()
            raise LayerNotFound(f"no module at path {spec!r}") from None
        hook_set._handles.append(module.register_forward_hook(hook_set._make_hook(spec)))
    return hook_set


class TraceWriter:
    """Append-only CSV writer in the trace interchange format.

    Writes an optional leading comment line, then the header
    ``epoch,acc,<layers...>``; every appended row is flushed immediately so a
    crash leaves a loadable partial trace.
    """

    def __init__(self, path, layer_names: Sequence[str], comment: Optional[str] = None):
        self.path = Path(path)
        self.layer_names = list(layer_names)
        self._fh = open(self.path, "w", encoding="utf-8")
        if comment:
            self._fh.write(f"# {comment}\n")
        self._fh.write(",".join(["epoch", "acc"] + self.layer_names) + "\n")
        self._fh.flush()

    def append(self, epoch: int, accuracy: Optional[float], means: Sequence[float]) -> None:
        acc_cell = "" if accuracy is None else repr(float(accuracy))
        cells = [str(epoch), acc_cell] + [repr(float(v)) for v in means]
        self._fh.write(",".join(cells) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "TraceWriter":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.close()


def record_epoch(
    model: torch.nn.Module,
    hooks: HookSet,
    validation_batch: torch.Tensor,
    epoch: int,
    accuracy: Optional[float],
    writer: TraceWriter,
) -> bool:
    """Run the validation batch and append one trace row.

    The pass runs in inference mode with gradients disabled (the model's
    training flag is restored afterwards). Each hooked layer's activation
    tensor is reduced to the mean over all of its elements. A non-finite
    mean rejects the whole row with a logged warning and returns False; the
    epoch gap stays visible downstream.
    """
    was_training = model.training
    model.eval()
    hooks.clear()
    try:
        with torch.no_grad():
            model(validation_batch)
    finally:
        if was_training:
            model.train()
    captured = hooks.captured()
    missing = [name for name in hooks.layer_names if name not in captured]
    if missing:
        raise CaptureError(f"no activations captured for {missing} (did the forward run?)")
    means = [captured[name].scalar_mean() for name in hooks.layer_names]
    bad = [name for name, m in zip(hooks.layer_names, means) if not math.isfinite(m)]
    if bad:
        logger.warning("epoch %d: non-finite activation mean in %s; row skipped", epoch, bad)
        return False
    writer.append(epoch, accuracy, means)
    return True
