"""Core components - spectra, water-filling, prediction, lattices, channel."""

from .channel import ChannelInstance, generate_noise, isi_to_colored
from .factorization import (
    FirFilter,
    optimal_predictor,
    prediction_residual,
    spectral_factorize,
    whitening_filter,
    zero_phase_fir,
)
from .lattice import (
    DitherStream,
    Lattice,
    LatticeKind,
    dither_draw,
    estimate_second_moment,
    goodness_probe,
    mod_lattice,
    nearest_point,
)
from .spectrum import (
    Spectrum,
    entropy_power,
    noisy_prediction_error,
    prediction_gain,
)
from .waterfill import (
    Opta,
    ShannonBounds,
    SystemSpec,
    WaterfillKind,
    WaterfillSolution,
    opta,
    reverse_waterfill,
    shannon_bounds,
    waterfill,
)

__all__ = [
    "ChannelInstance",
    "generate_noise",
    "isi_to_colored",
    "FirFilter",
    "optimal_predictor",
    "prediction_residual",
    "spectral_factorize",
    "whitening_filter",
    "zero_phase_fir",
    "DitherStream",
    "Lattice",
    "LatticeKind",
    "dither_draw",
    "estimate_second_moment",
    "goodness_probe",
    "mod_lattice",
    "nearest_point",
    "Spectrum",
    "entropy_power",
    "noisy_prediction_error",
    "prediction_gain",
    "Opta",
    "ShannonBounds",
    "SystemSpec",
    "WaterfillKind",
    "WaterfillSolution",
    "opta",
    "reverse_waterfill",
    "shannon_bounds",
    "waterfill",
]
