"""Spectral factorization, optimal prediction and FIR filter design.

Minimum-phase factors are obtained with the homomorphic (cepstral) method
on the spectrum grid: the real cepstrum of the log density is folded onto
positive quefrencies and exponentiated back.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import signal

from analog_matching.core.spectrum import Spectrum
from analog_matching.exceptions import DomainError

logger = logging.getLogger(__name__)

# Taps below this magnitude (relative to one) are treated as zero.
ZERO_TAP_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class FirFilter:
    """Finite impulse response.

    For a causal filter ``taps[0]`` applies at lag ``delay``. A ``centered``
    filter has an odd number of symmetric taps centered on lag zero
    (zero-phase, with its group delay compensated when applied).
    """

    taps: np.ndarray
    delay: int = 0
    centered: bool = False

    def __post_init__(self):
        taps = np.atleast_1d(np.asarray(self.taps, dtype=float))
        object.__setattr__(self, "taps", taps)
        if self.delay < 0:
            raise DomainError(f"filter delay must be nonnegative, got {self.delay}")
        if self.centered and (taps.size % 2 == 0 or self.delay != 0):
            raise DomainError("centered filters need an odd number of taps and zero delay")

    @classmethod
    def identity(cls) -> "FirFilter":
        return cls(np.ones(1), centered=True)

    @classmethod
    def gain(cls, value: float) -> "FirFilter":
        return cls(np.array([value]), centered=True)

    @property
    def length(self) -> int:
        return self.taps.size

    @property
    def is_zero(self) -> bool:
        return bool(np.all(np.abs(self.taps) <= ZERO_TAP_TOLERANCE))

    @property
    def is_scalar(self) -> bool:
        """A single centered tap: the filter is a plain gain."""
        return self.centered and self.length == 1

    @property
    def half_length(self) -> int:
        return self.length // 2 if self.centered else 0

    def frequency_response(self, size: int) -> np.ndarray:
        """Response H(e^{j2pi m/size}) on the grid."""
        if self.centered:
            lags = np.arange(self.length) - self.length // 2
        else:
            lags = np.arange(self.length) + self.delay
        phase = np.exp(-2j * np.pi * np.outer(np.fft.fftfreq(size), lags))
        response = phase @ self.taps
        return response.real if self.centered else response

    def power_response(self, size: int) -> np.ndarray:
        return np.abs(self.frequency_response(size)) ** 2

    def apply(self, x: np.ndarray, axis: int = -1) -> np.ndarray:
        """Filter ``x`` along ``axis`` (zero initial state; centered filters keep alignment)."""
        x = np.asarray(x, dtype=float)
        if self.is_scalar:
            return self.taps[0] * x
        if self.centered:
            shape = [1] * x.ndim
            shape[axis] = self.length
            return signal.oaconvolve(x, self.taps.reshape(shape), mode="same", axes=axis)
        taps = np.concatenate([np.zeros(self.delay), self.taps])
        return signal.lfilter(taps, [1.0], x, axis=axis)

    def to_dict(self) -> dict:
        return {"taps": self.taps.tolist(), "delay": self.delay, "centered": self.centered}

    @classmethod
    def from_dict(cls, data: dict) -> "FirFilter":
        return cls(np.array(data["taps"], dtype=float), int(data["delay"]), bool(data["centered"]))


def _check_length(s: Spectrum, length: int) -> None:
    if length < 0:
        raise DomainError(f"filter length must be nonnegative, got {length}")
    if length > s.size // 4:
        raise DomainError(f"filter length {length} exceeds a quarter of the grid ({s.size})")


def _folded_cepstrum(s: Spectrum) -> tuple[np.ndarray, float]:
    """Causal half of the real cepstrum of log S, and the mean log density."""
    floored = s.floored()
    peak = floored.max()
    # Out-of-band bins of a band-limited spectrum sit at the floor as well.
    floored = np.maximum(floored, peak * 1e-12)
    cepstrum = np.fft.ifft(np.log(floored)).real
    size = s.size
    folded = np.zeros(size)
    folded[1 : size // 2] = cepstrum[1 : size // 2]
    folded[size // 2] = 0.5 * cepstrum[size // 2]
    return folded, float(cepstrum[0])


def _monic(sequence: np.ndarray) -> np.ndarray:
    return sequence / sequence[0]


def spectral_factorize(s: Spectrum, length: int) -> tuple[FirFilter, float]:
    """Monic minimum-phase Q and innovation variance pe with |Q|^2 pe ~ S.

    Args:
        s: Spectrum, floored as described in :meth:`Spectrum.floored`
        length: Number of taps kept from the minimum-phase response

    Returns:
        (q, pe): the causal monic factor and exp of the full-band mean log density
    """
    _check_length(s, length)
    folded, mean_log = _folded_cepstrum(s)
    response = np.fft.ifft(np.exp(np.fft.fft(folded))).real
    q = _monic(response)[: max(length, 1)]
    logger.debug(f"Spectral factor: {q.size} taps, pe={np.exp(mean_log):.6g}")
    return FirFilter(q), float(np.exp(mean_log))


def whitening_filter(s: Spectrum, length: int) -> FirFilter:
    """Monic inverse factor A = 1/Q truncated to ``length`` + 1 taps."""
    _check_length(s, length)
    folded, _ = _folded_cepstrum(s)
    response = np.fft.ifft(np.exp(-np.fft.fft(folded))).real
    return FirFilter(_monic(response)[: length + 1])


def optimal_predictor(s: Spectrum, length: int) -> FirFilter:
    """Strictly causal predictor P = 1 - 1/Q with ``length`` taps starting at lag one."""
    a = whitening_filter(s, length).taps
    taps = -a[1:]
    taps[np.abs(taps) <= ZERO_TAP_TOLERANCE] = 0.0
    return FirFilter(taps, delay=1)


def prediction_residual(p: FirFilter, s: Spectrum) -> float:
    """Grid variance of (1 - P) applied to a process of spectrum S."""
    error = 1.0 - p.frequency_response(s.size)
    return float(np.mean(np.abs(error) ** 2 * s.values))


def zero_phase_fir(amplitude: np.ndarray, numtaps: int) -> FirFilter:
    """Centered FIR whose amplitude response samples ``amplitude`` on the grid.

    Frequency sampling without a window; a constant amplitude collapses to a
    single-tap gain.
    """
    amplitude = np.asarray(amplitude, dtype=float)
    if numtaps < 1 or numtaps % 2 == 0:
        raise DomainError(f"zero-phase filters need an odd number of taps, got {numtaps}")
    if np.ptp(amplitude) <= ZERO_TAP_TOLERANCE * max(1.0, np.abs(amplitude).max()):
        return FirFilter.gain(float(amplitude[0]))

    size = amplitude.size
    if numtaps >= size // 2 + 1:
        raise DomainError(f"{numtaps} taps do not fit a grid of {size} bins")
    freq = np.linspace(0.0, 1.0, size // 2 + 1)
    gain = np.abs(amplitude[: size // 2 + 1])
    taps = signal.firwin2(numtaps, freq, gain, nfreqs=size // 2 + 1, window=None)
    return FirFilter(taps, centered=True)
