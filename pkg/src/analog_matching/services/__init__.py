"""Services - filter design, codec, simulation and robustness analysis."""

from .codec import (
    ChannelBlock,
    Decoder,
    DecoderFilters,
    Encoder,
    FailureMode,
    GenieReport,
    ModInput,
    StreamConfig,
    TestTaps,
    auto_init_repeats,
    genie_check,
    initialize,
)
from .design import (
    DesignMode,
    IdentityReport,
    MatchingFilterSet,
    design,
    design_matching,
    design_zero_forcing,
    mod_input_variance,
    predicted_distortion,
    predicted_sdr,
    verify_exact_identities,
)
from .records import read_provenance
from .robustness import (
    PassbandSet,
    RobustnessCurve,
    Scheme,
    comparison_curves,
    cor1_curve,
    distortion_slope,
    mismatched_curve,
    mismatched_decoder,
    mismatched_distortion_spectrum,
    robustness_curve,
    universal_design_snr,
)
from .simulator import SimReport, SimulationConfig, run_end_to_end, sweep

__all__ = [
    "ChannelBlock",
    "Decoder",
    "DecoderFilters",
    "Encoder",
    "FailureMode",
    "GenieReport",
    "ModInput",
    "StreamConfig",
    "TestTaps",
    "auto_init_repeats",
    "genie_check",
    "initialize",
    "DesignMode",
    "IdentityReport",
    "MatchingFilterSet",
    "design",
    "design_matching",
    "design_zero_forcing",
    "mod_input_variance",
    "predicted_distortion",
    "predicted_sdr",
    "verify_exact_identities",
    "read_provenance",
    "PassbandSet",
    "RobustnessCurve",
    "Scheme",
    "comparison_curves",
    "cor1_curve",
    "distortion_slope",
    "mismatched_curve",
    "mismatched_decoder",
    "mismatched_distortion_spectrum",
    "robustness_curve",
    "universal_design_snr",
    "SimReport",
    "SimulationConfig",
    "run_end_to_end",
    "sweep",
]
