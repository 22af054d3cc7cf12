"""Training-side adapter that records per-epoch activation traces.

Registers forward hooks at configured (post-nonlinearity) layers, reduces
each validation-batch activation tensor to its scalar mean, and appends one
CSV row per epoch in the trace interchange format consumed by the analysis
tooling (header ``epoch,acc,<layers...>``, optional leading ``#`` comment).
"""

from .hooks import (
    ActivationBatch,
    CaptureError,
    DuplicateHook,
    HookSet,
    LayerNotFound,
    TraceWriter,
    record_epoch,
    register_hooks,
)

__version__ = "0.1.0"
