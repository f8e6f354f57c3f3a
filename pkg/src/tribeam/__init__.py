"""Three-beam interferometer simulator with weak path marking.

Evolves spin-path-energy wave-function components through a four-plate
interferometer, synthesizes time-oscillating detector intensities, and
extracts path information from the peaks of a windowed magnitude spectrum.
"""

__version__ = "0.1.0"

from .amplitudes import (
    DOWN,
    EXACT,
    FIRST_ORDER,
    UP,
    AmplitudeComponent,
    BeamState,
    InvalidStateError,
    apply_phase,
    instantaneous_amplitude,
    overlap,
    project_up,
    prune_merge,
    rotate_spin,
    superpose,
)
from .beamline import (
    ANALYTIC,
    UNITARY,
    ConfigurationError,
    ContrastMatrix,
    PortStates,
    ScenarioConfig,
    closed_form_intensity,
    intensity_at,
    mean_intensity,
    propagate,
)
from .acquisition import (
    FoldedHistogram,
    IntensitySeries,
    TimeGrid,
    delta_histogram,
    folding_period_s,
    simulate_counts,
    synthesize_series,
)
from .spectral import (
    MagnitudeSpectrum,
    PeakReport,
    SineFitResult,
    SingularFitError,
    fit_sines,
    magnitude_spectrum,
    peak_heights,
    preprocess,
)

__all__ = [
    "__version__",
    "UP", "DOWN", "EXACT", "FIRST_ORDER",
    "AmplitudeComponent", "BeamState", "InvalidStateError",
    "rotate_spin", "apply_phase", "superpose", "project_up",
    "instantaneous_amplitude", "overlap", "prune_merge",
    "ANALYTIC", "UNITARY", "ConfigurationError", "ContrastMatrix",
    "ScenarioConfig", "PortStates", "propagate",
    "intensity_at", "mean_intensity", "closed_form_intensity",
    "TimeGrid", "IntensitySeries", "FoldedHistogram",
    "folding_period_s", "synthesize_series", "simulate_counts",
    "delta_histogram",
    "MagnitudeSpectrum", "PeakReport", "SineFitResult", "SingularFitError",
    "preprocess", "magnitude_spectrum", "peak_heights", "fit_sines",
]
