"""comd: variational mode decomposition with exact inter-mode orthogonality.

Decomposes a real signal into K narrowband modes by an ADMM scheme (Wiener
mode updates, center-frequency updates, dual ascent) and enforces exact
orthogonality between modes with a Newton-Schulz projection applied across
frequency bins.
"""
from .bench import BenchCell, BenchResult, bench_matrix, snr_sweep
from .errors import (
    ComdError,
    ConvergenceError,
    DegenerateInputError,
    DegenerateModesError,
    FormatError,
    InvalidInputError,
    InvalidRecipeError,
    SchemaError,
    TraceParseError,
    UsageError,
)
from .metrics import (
    AccuracyScore,
    DecompositionReport,
    accuracy,
    inject_noise,
    match_modes,
    narrowband_noise,
    recon_error,
)
from .ortho import (
    GramMatrix,
    ProjectionOutcome,
    gram,
    newton_schulz_project,
    per_frequency_orthogonalize,
)
from .signalio import (
    Component,
    HapticTrace,
    SynthRecipe,
    TraceSide,
    load_recipe,
    read_channels,
    read_modes,
    read_report,
    read_trace,
    synthesize,
    write_channels,
    write_modes,
    write_report,
)
from .solver import (
    KSelectionEntry,
    ModeKind,
    ModeSet,
    OmegaInit,
    SolverConfig,
    SweepOrder,
    WienerForm,
    decompose,
    select_k_grid,
    selection_score,
)
from .spectral import (
    BandwidthValue,
    HalfSpectrum,
    SampledSignal,
    analytic_spectrum,
    bandwidth,
    center_frequency,
    inner_product,
    inverse_to_signal,
)

__version__ = "0.1.0"
