"""Colored Gaussian channel simulation and ISI conversion."""

import logging

import numpy as np
from scipy import signal

from analog_matching.core.factorization import FirFilter, spectral_factorize
from analog_matching.core.spectrum import DEFAULT_GRID_SIZE, Spectrum, band_weights
from analog_matching.exceptions import DomainError

logger = logging.getLogger(__name__)

WARMUP_FACTOR = 4

# |H|^2 below this fraction of its in-band peak counts as a zero of the ISI filter.
ISI_ZERO_TOLERANCE = 1e-10


class ChannelInstance:
    """Additive noise Y = X + Z with Z drawn from a stationary Gaussian process.

    Noise is white Gaussian innovations of variance pe filtered through the
    monic minimum-phase factor of the noise spectrum; the first
    ``WARMUP_FACTOR`` filter lengths of every draw are discarded.
    """

    def __init__(self, noise_spectrum: Spectrum, seed: int = 0, factor_length: int | None = None):
        self.noise_spectrum = noise_spectrum
        self.seed = seed
        if factor_length is None:
            factor_length = noise_spectrum.size // 4
        self.noise_factor, self.innovation_var = spectral_factorize(noise_spectrum, factor_length)
        self.warmup = WARMUP_FACTOR * self.noise_factor.length
        self._rng = np.random.default_rng(seed)
        logger.debug(
            f"Channel initialized: noise variance {noise_spectrum.variance:.6g}, "
            f"{self.noise_factor.length} factor taps, seed {seed}"
        )

    @property
    def noise_power(self) -> float:
        return self.noise_spectrum.variance

    def snr(self, power: float) -> float:
        return power / self.noise_power

    def generate_noise(self, n: int) -> np.ndarray:
        """n consecutive noise samples."""
        if n < 0:
            raise DomainError(f"sample count must be nonnegative, got {n}")
        total = n + self.warmup
        innovations = np.sqrt(self.innovation_var) * self._rng.standard_normal(total)
        q = self.noise_factor.taps
        if q.size == 1:
            return innovations[self.warmup :]
        colored = signal.oaconvolve(innovations, q)[:total]
        return colored[self.warmup :]

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Add one noise stream laid out in the row-major order of ``x``."""
        x = np.asarray(x, dtype=float)
        return x + self.generate_noise(x.size).reshape(x.shape)


def generate_noise(ch: ChannelInstance, n: int) -> np.ndarray:
    return ch.generate_noise(n)


def isi_to_colored(
    h: FirFilter,
    innovation_var: float,
    size: int = DEFAULT_GRID_SIZE,
    band_limit: float | None = None,
) -> Spectrum:
    """Noise spectrum of the zero-forced channel Y = h * X + W.

    Inverting h turns white innovations W into colored noise of density
    innovation_var / |H(f)|^2 on the channel band.
    """
    if innovation_var <= 0:
        raise DomainError(f"innovation variance must be positive, got {innovation_var}")
    power = h.power_response(size)
    in_band = band_weights(size, band_limit) > 0
    if band_limit is not None and band_limit >= 1:
        band_limit = None
    if np.min(power[in_band]) <= ISI_ZERO_TOLERANCE * np.max(power[in_band]):
        raise DomainError("ISI filter has a zero inside the channel band and cannot be inverted")
    values = np.where(in_band, innovation_var / np.where(in_band, power, 1.0), 0.0)
    # Round-off from the complex response can break exact even symmetry.
    values = 0.5 * (values + np.concatenate([values[:1], values[:0:-1]]))
    return Spectrum(values, band_limit)
