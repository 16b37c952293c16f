"""Power spectra on a uniform frequency grid."""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from analog_matching.exceptions import DomainError

logger = logging.getLogger(__name__)

DEFAULT_GRID_SIZE = 4096

# In-band densities are floored at this fraction of the in-band maximum before taking logs.
EPSILON_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Nonnegative, even power spectral density sampled at f_m = m/M.

    Bin m is read as the signed frequency m/M folded into [-1/2, 1/2).
    With ``band_limit`` B set, the density vanishes outside |f| <= B/2; a
    bin straddling the band edge carries the fraction of its width that
    lies inside the band, so band integrals equal B times a flat level
    exactly.
    """

    values: np.ndarray
    band_limit: float | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)

        size = values.size
        if values.ndim != 1 or size < 4 or size & (size - 1):
            raise DomainError(f"spectrum grid size must be a power of two, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DomainError("spectrum values must be finite")
        if np.any(values < 0):
            raise DomainError("spectrum values must be nonnegative")
        if not np.allclose(values[1:], values[:0:-1], rtol=1e-9, atol=0.0):
            raise DomainError("spectrum must be even symmetric around f=0")

        if self.band_limit is not None:
            if not 0 < self.band_limit <= 1:
                raise DomainError(f"band_limit must lie in (0, 1], got {self.band_limit}")
            if np.any(values[self.weights == 0] != 0):
                raise DomainError("band-limited spectrum must vanish outside its band")

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def frequencies(self) -> np.ndarray:
        """Signed bin frequencies in [-1/2, 1/2)."""
        return np.fft.fftfreq(self.size)

    @property
    def bandwidth(self) -> float:
        return 1.0 if self.band_limit is None else float(self.band_limit)

    @property
    def weights(self) -> np.ndarray:
        """Fraction of each bin lying inside the band."""
        return band_weights(self.size, self.band_limit)

    @property
    def in_band(self) -> np.ndarray:
        return self.weights > 0

    @property
    def variance(self) -> float:
        """Band integral of the density (the process variance for a source)."""
        return float(np.dot(self.weights, self.values) / self.size)

    @property
    def band_mean(self) -> float:
        weights = self.weights
        return float(np.dot(weights, self.values) / weights.sum())

    def floored(self) -> np.ndarray:
        """In-band values floored at EPSILON_FLOOR times the in-band maximum."""
        in_band = self.in_band
        peak = self.values[in_band].max()
        if peak <= 0:
            raise DomainError("spectrum has no positive in-band density")
        return np.where(in_band, np.maximum(self.values, EPSILON_FLOOR * peak), 0.0)

    def scaled(self, factor: float) -> "Spectrum":
        if factor < 0:
            raise DomainError(f"scale factor must be nonnegative, got {factor}")
        return Spectrum(self.values * factor, self.band_limit)

    def mirrored(self) -> "Spectrum":
        """Reverse the order of the in-band frequencies (|f| -> B/2 - |f|)."""
        half = self.bandwidth / 2
        grid = np.abs(self.frequencies)
        order = np.argsort(grid[: self.size // 2 + 1])
        source_f = grid[: self.size // 2 + 1][order]
        source_v = self.values[: self.size // 2 + 1][order]
        target = np.clip(half - grid, 0.0, half)
        values = np.where(self.in_band, np.interp(target, source_f, source_v), 0.0)
        return Spectrum(_symmetrize(values), self.band_limit)


def band_weights(size: int, band_limit: float | None) -> np.ndarray:
    """Overlap of each unit-width bin with the band [-B M/2, B M/2]."""
    if band_limit is None or band_limit >= 1:
        return np.ones(size)
    index = np.abs(np.fft.fftfreq(size) * size)
    return np.clip(band_limit * size / 2 + 0.5 - index, 0.0, 1.0)


def _symmetrize(values: np.ndarray) -> np.ndarray:
    # Averaging with the mirrored copy removes round-off asymmetry.
    mirrored = np.concatenate([values[:1], values[:0:-1]])
    return 0.5 * (values + mirrored)


def _band(values: np.ndarray, band_limit: float | None) -> Spectrum:
    if band_limit is not None and band_limit < 1:
        values = np.where(band_weights(values.size, band_limit) > 0, values, 0.0)
    else:
        band_limit = None
    return Spectrum(_symmetrize(values), band_limit)


def _response_squared(taps, size: int) -> np.ndarray:
    return np.abs(np.fft.fft(np.asarray(taps, dtype=float), size)) ** 2


def flat(level: float, size: int = DEFAULT_GRID_SIZE, band_limit: float | None = None) -> Spectrum:
    """White (in-band) spectrum of the given density."""
    if level <= 0:
        raise DomainError(f"flat spectrum level must be positive, got {level}")
    return _band(np.full(size, float(level)), band_limit)


def two_level(
    high: float,
    low: float,
    split: float = 0.25,
    size: int = DEFAULT_GRID_SIZE,
    band_limit: float | None = None,
) -> Spectrum:
    """``high`` for |f| < split, ``low`` above it; the split bin takes the midpoint."""
    if high < 0 or low < 0:
        raise DomainError("two-level spectrum levels must be nonnegative")
    if not 0 < split < 0.5:
        raise DomainError(f"split frequency must lie in (0, 1/2), got {split}")
    index = np.abs(np.fft.fftfreq(size) * size)
    edge = split * size
    values = np.where(index < edge, high, low).astype(float)
    values[np.isclose(index, edge)] = 0.5 * (high + low)
    return _band(values, band_limit)


def ar1(
    a: float,
    innovation_var: float = 1.0,
    size: int = DEFAULT_GRID_SIZE,
    band_limit: float | None = None,
) -> Spectrum:
    """First-order autoregressive density innovation_var / |1 - a e^{-j2pi f}|^2."""
    if not -1 < a < 1:
        raise DomainError(f"AR(1) coefficient must satisfy |a| < 1, got {a}")
    if innovation_var <= 0:
        raise DomainError("innovation variance must be positive")
    return _band(innovation_var / _response_squared([1.0, -a], size), band_limit)


def moving_average(
    taps,
    innovation_var: float = 1.0,
    size: int = DEFAULT_GRID_SIZE,
    band_limit: float | None = None,
) -> Spectrum:
    """Moving-average density innovation_var * |sum_n taps[n] e^{-j2pi f n}|^2."""
    if innovation_var <= 0:
        raise DomainError("innovation variance must be positive")
    return _band(innovation_var * _response_squared(taps, size), band_limit)


def from_csv(
    path: str | Path,
    size: int = DEFAULT_GRID_SIZE,
    band_limit: float | None = None,
) -> Spectrum:
    """Load a spectrum from a two-column CSV (f in [0, 1/2], density).

    Values are linearly interpolated onto |f_m|.
    """
    path = Path(path)
    if not path.exists():
        raise DomainError(f"spectrum file not found: {path}")
    table = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    if table.shape[1] != 2:
        raise DomainError(f"{path}: expected two columns (f, density), got {table.shape[1]}")
    order = np.argsort(table[:, 0])
    freq, density = table[order, 0], table[order, 1]
    if freq[0] < 0 or freq[-1] > 0.5:
        raise DomainError(f"{path}: frequencies must lie in [0, 0.5]")
    values = np.interp(np.abs(np.fft.fftfreq(size)), freq, density)
    logger.info(f"Loaded spectrum from {path} ({len(freq)} points onto {size} bins)")
    return _band(values, band_limit)


def entropy_power(s: Spectrum) -> float:
    """exp of the band-mean log density (downsampled convention when band-limited)."""
    weights = s.weights
    logs = np.log(s.floored(), where=weights > 0, out=np.zeros(s.size))
    return float(np.exp(np.dot(weights, logs) / weights.sum()))


def prediction_gain(s: Spectrum) -> float:
    """Band-mean density over entropy power; equals one only for a flat spectrum."""
    return s.band_mean / entropy_power(s)


def noisy_prediction_error(s: Spectrum, theta: float) -> float:
    """Prediction error of a process observed in white noise of level theta.

    Computes P_e(S + theta) - theta with theta added over the full unit band;
    a band edge bin counts its in-band fraction at S + theta and the rest at
    theta.
    """
    if theta < 0:
        raise DomainError(f"noise level must be nonnegative, got {theta}")
    if theta == 0:
        return entropy_power(s)
    weights = s.weights
    logs = weights * np.log(s.values + theta) + (1 - weights) * np.log(theta)
    return float(np.exp(logs.mean()) - theta)
