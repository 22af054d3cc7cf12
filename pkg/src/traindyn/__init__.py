"""Dynamical training diagnostics from epoch-indexed layer-activation traces.

The pipeline ingests a per-epoch trace of layer-mean activations, estimates
long-range correlation strength per layer (DFA/Hurst), phase synchrony
across layers (Kuramoto order parameter and cumulative metastability),
combines both into a composite stability index with rolling volatility,
and classifies the run into a four-state dynamical taxonomy.
"""

from .composite import (
    AnalysisReport,
    DiagnosticSummary,
    analyze,
    minmax_normalize,
    pearson,
    plateau_epoch,
    psi_series,
    rolling_volatility,
    threshold_crossing,
    zscore,
)
from .dfa import (
    FluctuationCurve,
    HurstEstimate,
    cumulative_profile,
    dfa_scales,
    fit_hurst,
    fluctuation_function,
    gaussian_tuning,
    heff_series,
    hurst_estimate,
    mean_hurst,
)
from .errors import (
    DegenerateInput,
    DomainError,
    GenerationError,
    InsufficientData,
    NumericalError,
    ParseError,
    SchemaError,
    TrainDynError,
)
from .sensitivity import heff_grid, separation_flag, threshold_grid, weight_grid
from .synchrony import (
    PhaseMatrix,
    analytic_phase,
    kuramoto_order,
    metastability_series,
    synchrony_pipeline,
)
from .synthgen import gen_coupled_phases, gen_fgn, gen_trace
from .taxonomy import TaxonomySignature, classify_state, volatility_trend
from .trace import (
    ActivationTrace,
    AnalysisConfig,
    EpochRecord,
    MetricSeries,
    load_trace,
    save_trace,
    validate_trace,
)

__version__ = "0.1.0"
