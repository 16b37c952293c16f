"""Water-filling solvers, Shannon bounds and the R(D) = C optimum."""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy import optimize

from analog_matching.core.spectrum import DEFAULT_GRID_SIZE, Spectrum, flat, prediction_gain
from analog_matching.exceptions import DomainError, SolverError

logger = logging.getLogger(__name__)

RELATIVE_TOLERANCE = 1e-9
MAX_ITERATIONS = 200


class WaterfillKind(Enum):
    """Which water-filling problem a solution belongs to."""

    SOURCE = "source"  # reverse water-filling of the rate-distortion function
    CHANNEL = "channel"  # forward water-filling of the capacity


@dataclass(frozen=True, eq=False)
class WaterfillSolution:
    """Water level, per-bin allocation and rate (nats per sample)."""

    water_level: float
    allocation: np.ndarray
    rate: float
    kind: WaterfillKind

    @property
    def total(self) -> float:
        """Riemann integral of the allocation (D or P)."""
        return float(self.allocation.sum() / self.allocation.size)


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """A source/channel pair with an average transmit power constraint."""

    source: Spectrum
    noise: Spectrum
    power: float

    def __post_init__(self):
        if self.power <= 0:
            raise DomainError(f"power must be positive, got {self.power}")
        if self.source.size != self.noise.size:
            raise DomainError(
                f"source and noise grids differ ({self.source.size} vs {self.noise.size})"
            )

    @property
    def rho(self) -> float:
        """Bandwidth ratio B_C / B_S (channel uses per source sample)."""
        return self.noise.bandwidth / self.source.bandwidth

    @property
    def noise_power(self) -> float:
        """In-band noise power N."""
        return self.noise.variance

    @property
    def snr(self) -> float:
        return self.power / self.noise_power

    @classmethod
    def white(
        cls, snr: float, rho: float = 1.0, variance: float = 1.0, size: int = DEFAULT_GRID_SIZE
    ) -> "SystemSpec":
        """Flat in-band source and noise with unit noise power.

        The wider of the two occupies the full band; the other gets
        bandwidth 1/rho (expansion) or rho (compression).
        """
        if rho <= 0 or rho > 1e3:
            raise DomainError(f"bandwidth ratio must lie in (0, 1000], got {rho}")
        source_band, noise_band = (1.0 / rho, None) if rho >= 1 else (None, rho)
        source = flat(1.0, size, source_band)
        noise = flat(1.0, size, noise_band)
        return cls(source.scaled(variance / source.variance), noise.scaled(1 / noise.variance), snr)

    def with_power(self, power: float) -> "SystemSpec":
        return SystemSpec(self.source, self.noise, power)

    def with_snr(self, snr: float) -> "SystemSpec":
        return SystemSpec(self.source, self.noise, snr * self.noise_power)


class Opta(NamedTuple):
    d_opt: float
    sdr_opt: float


@dataclass(frozen=True)
class ShannonBounds:
    """Shannon lower bound on R(D) and upper bound on C, in nats."""

    slb: float
    sub: float
    rate: float  # R(D) at the evaluated SDR
    capacity: float
    sdr: float
    snr: float


def _bisect(func, lower: float, upper: float, xtol: float, what: str) -> float:
    try:
        root, result = optimize.bisect(
            func, lower, upper, xtol=xtol, maxiter=MAX_ITERATIONS, full_output=True, disp=False
        )
    except ValueError as e:
        raise SolverError(f"{what}: root not bracketed in [{lower}, {upper}]") from e
    if not result.converged:
        raise SolverError(f"{what}: bisection did not converge in {MAX_ITERATIONS} iterations")
    logger.debug(f"{what}: converged in {result.iterations} iterations to {root:.12g}")
    return root


def _source_distortion(source: Spectrum, theta: float) -> np.ndarray:
    return source.weights * np.minimum(theta, source.values)


def _source_rate(source: Spectrum, theta: float) -> float:
    values = source.values
    active = values > theta
    logs = np.log(values[active] / theta)
    return float(0.5 * np.dot(source.weights[active], logs) / source.size)


def reverse_waterfill(source: Spectrum, target_distortion: float) -> WaterfillSolution:
    """Reverse water-filling: D(f) = min(theta_S, S_S(f)) integrating to the target."""
    if target_distortion <= 0:
        raise DomainError(f"target distortion must be positive, got {target_distortion}")

    variance = source.variance
    peak = float(source.values.max())
    if target_distortion >= variance:
        logger.debug(f"Target distortion {target_distortion:.6g} >= variance: zero rate")
        return WaterfillSolution(peak, _source_distortion(source, peak), 0.0, WaterfillKind.SOURCE)

    def excess(theta: float) -> float:
        return _source_distortion(source, theta).sum() / source.size - target_distortion

    theta = _bisect(excess, 0.0, peak, 1e-12 * target_distortion, "reverse water-filling")
    allocation = _source_distortion(source, theta)
    missed = abs(allocation.sum() / source.size - target_distortion)
    if missed > RELATIVE_TOLERANCE * target_distortion:
        raise SolverError("reverse water-filling missed its distortion target")
    return WaterfillSolution(theta, allocation, _source_rate(source, theta), WaterfillKind.SOURCE)


def _channel_allocation(noise: Spectrum, theta: float) -> np.ndarray:
    return noise.weights * np.maximum(theta - noise.values, 0.0)


def waterfill(noise: Spectrum, power: float) -> WaterfillSolution:
    """Forward water-filling: P(f) = max(theta_C - S_Z(f), 0) inside the channel band."""
    if power <= 0:
        raise DomainError(f"power must be positive, got {power}")
    in_band = noise.in_band
    if not np.any(in_band):
        raise DomainError("noise spectrum has an empty band")
    levels = noise.values[in_band]
    if np.any(levels <= 0):
        raise DomainError("noise density must be strictly positive inside the channel band")

    occupancy = noise.weights.sum() / noise.size
    lower = float(levels.min())
    upper = float(levels.max()) + 2 * power / occupancy

    def excess(theta: float) -> float:
        return _channel_allocation(noise, theta).sum() / noise.size - power

    theta = _bisect(excess, lower, upper, 1e-12 * power, "water-filling")
    allocation = _channel_allocation(noise, theta)
    if abs(allocation.sum() / noise.size - power) > RELATIVE_TOLERANCE * power:
        raise SolverError("water-filling missed its power target")

    used = allocation > 0
    logs = np.log(theta / noise.values[used])
    capacity = float(0.5 * np.dot(noise.weights[used], logs) / noise.size)
    return WaterfillSolution(theta, allocation, capacity, WaterfillKind.CHANNEL)


def opta(spec: SystemSpec) -> Opta:
    """Optimum distortion solving R(D) = C.

    The source water level is bisected in log domain; D follows as the band
    integral of min(theta_S, S_S).
    """
    capacity = waterfill(spec.noise, spec.power).rate
    source = spec.source
    variance = source.variance
    if capacity <= 0:
        return Opta(variance, 1.0)

    peak = float(source.values.max())
    upper = np.log(peak)
    lower = upper - 1.0
    while _source_rate(source, np.exp(lower)) <= capacity:
        lower -= 2 * (upper - lower)
        if upper - lower > 1500:
            raise SolverError("R(D) = C: could not bracket the source water level")

    log_theta = _bisect(
        lambda t: _source_rate(source, np.exp(t)) - capacity, lower, upper, 1e-14, "R(D) = C"
    )
    d_opt = float(_source_distortion(source, np.exp(log_theta)).sum() / source.size)
    return Opta(d_opt, variance / d_opt)


def shannon_bounds(spec: SystemSpec, sdr: float | None = None) -> ShannonBounds:
    """SLB at the given SDR (default: the optimum) and SUB at the system SNR."""
    if sdr is None:
        sdr = opta(spec).sdr_opt
    gamma_s = prediction_gain(spec.source)
    gamma_c = prediction_gain(spec.noise)
    slb = 0.5 * spec.source.bandwidth * np.log(sdr / gamma_s)
    sub = 0.5 * spec.noise.bandwidth * np.log(gamma_c * (1 + spec.snr))
    rate = reverse_waterfill(spec.source, spec.source.variance / sdr).rate
    capacity = waterfill(spec.noise, spec.power).rate
    return ShannonBounds(float(slb), float(sub), rate, capacity, float(sdr), spec.snr)
