"""Filter design for the Analog Matching scheme.

The matching design follows the water-filling solutions of the source and
the channel: the source pre-filter keeps the frequencies above the reverse
water level, the channel shaping filter spreads power where the forward
water level exceeds the noise, and the predictors are the optimal
predictors of the processes seen at the decoder.
"""

import json
import logging
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np

from analog_matching import __version__
from analog_matching.core.factorization import FirFilter, optimal_predictor, zero_phase_fir
from analog_matching.core.spectrum import Spectrum, entropy_power, noisy_prediction_error
from analog_matching.core.waterfill import SystemSpec, opta, reverse_waterfill, waterfill
from analog_matching.exceptions import ConfigError, DomainError

logger = logging.getLogger(__name__)

DEFAULT_PREDICTOR_TAPS = 128
DEFAULT_PREFILTER_TAPS = 257
DEFAULT_MARGIN = 0.05


class DesignMode(Enum):
    MATCHING = "matching"
    ZERO_FORCING = "zero_forcing"


@dataclass(frozen=True, eq=False)
class MatchingFilterSet:
    """Designed filters, scalars and the spectra they were derived from.

    ``noise_floor`` is the variance of the equivalent decoder noise Z_eq:
    (1 - alpha) theta_C for the matching design, the entropy power of the
    channel noise for zero forcing. ``beta`` is the operating gain
    beta0 / (1 + margin).
    """

    mode: DesignMode
    f1: FirFilter
    f2: FirFilter
    g1: FirFilter
    g2: FirFilter
    p_s: FirFilter
    p_c: FirFilter
    alpha: float
    beta0: float
    beta: float
    margin: float
    theta_s: float
    theta_c: float
    capacity: float
    d_opt: float
    source_variance: float
    noise_floor: float
    s_u: Spectrum
    s_v: Spectrum
    s_tilde_z: Spectrum

    @property
    def length(self) -> int:
        return self.p_s.length

    @property
    def sdr_opt(self) -> float:
        return self.source_variance / self.d_opt

    def with_margin(self, margin: float) -> "MatchingFilterSet":
        """Same filters with the gain rescaled to beta0 / (1 + margin).

        Predictors are kept; only the analytic spectra that depend on the
        operating gain are refreshed.
        """
        beta = _operating_beta(self.beta0, margin)
        s_v = _s_v(self.s_u, self.noise_floor, beta)
        return replace(self, beta=beta, margin=margin, s_v=s_v)

    def to_dict(self) -> dict:
        def spectrum_dict(s: Spectrum) -> dict:
            return {"values": s.values.tolist(), "band_limit": s.band_limit}

        filters = ("f1", "f2", "g1", "g2", "p_s", "p_c")
        scalars = (
            "alpha",
            "beta0",
            "beta",
            "margin",
            "theta_s",
            "theta_c",
            "capacity",
            "d_opt",
            "source_variance",
            "noise_floor",
        )
        return {
            "version": __version__,
            "mode": self.mode.value,
            "filters": {name: getattr(self, name).to_dict() for name in filters},
            "scalars": {name: float(getattr(self, name)) for name in scalars},
            "spectra": {
                name: spectrum_dict(getattr(self, name)) for name in ("s_u", "s_v", "s_tilde_z")
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MatchingFilterSet":
        filters = {name: FirFilter.from_dict(d) for name, d in data["filters"].items()}
        spectra = {
            name: Spectrum(np.array(d["values"], dtype=float), d["band_limit"])
            for name, d in data["spectra"].items()
        }
        return cls(DesignMode(data["mode"]), **filters, **data["scalars"], **spectra)

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)
        logger.info(f"Filter set saved to {path}")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "MatchingFilterSet":
        path = Path(path)
        if not path.exists():
            raise ConfigError("filter set file not found", str(path))
        try:
            with open(path) as f:
                return cls.from_dict(json.load(f))
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise ConfigError(f"invalid filter set file: {e}", str(path)) from e


@dataclass(frozen=True)
class IdentityReport:
    """Relative errors of the closed-form variance identities of a design."""

    source_lhs: float
    source_rhs: float
    channel_lhs: float
    channel_rhs: float
    unbiased_lhs: float
    unbiased_rhs: float
    boundary_variance: float
    theta_c: float

    @staticmethod
    def _relative(lhs: float, rhs: float) -> float:
        if rhs == 0:
            return abs(lhs)
        return abs(lhs - rhs) / abs(rhs)

    @property
    def source_error(self) -> float:
        return self._relative(self.source_lhs, self.source_rhs)

    @property
    def channel_error(self) -> float:
        return self._relative(self.channel_lhs, self.channel_rhs)

    @property
    def unbiased_error(self) -> float:
        return self._relative(self.unbiased_lhs, self.unbiased_rhs)

    @property
    def boundary_error(self) -> float:
        return self._relative(self.boundary_variance, self.theta_c)

    @property
    def max_error(self) -> float:
        return max(self.source_error, self.channel_error, self.boundary_error)

    def to_dict(self) -> dict:
        return {
            "source": {"lhs": self.source_lhs, "rhs": self.source_rhs, "error": self.source_error},
            "channel": {
                "lhs": self.channel_lhs,
                "rhs": self.channel_rhs,
                "error": self.channel_error,
            },
            "channel_unbiased": {
                "lhs": self.unbiased_lhs,
                "rhs": self.unbiased_rhs,
                "error": self.unbiased_error,
            },
            "boundary": {
                "variance": self.boundary_variance,
                "theta_c": self.theta_c,
                "error": self.boundary_error,
            },
        }


def _operating_beta(beta0: float, margin: float) -> float:
    if margin <= -1:
        raise DomainError(f"margin must exceed -1, got {margin}")
    return beta0 / (1.0 + margin)


def _s_v(s_u: Spectrum, noise_floor: float, beta: float) -> Spectrum:
    return Spectrum(s_u.values + noise_floor / beta**2)


def _s_tilde_z(noise: Spectrum, theta_c: float) -> Spectrum:
    """min(S_Z, theta_C) inside the channel band, theta_C outside.

    An edge bin blends the two geometrically by its in-band fraction, so the
    full-band entropy power stays exact.
    """
    weights = noise.weights
    inside = np.minimum(noise.values, theta_c)
    blended = np.exp(
        weights * np.log(np.where(weights > 0, inside, theta_c)) + (1 - weights) * np.log(theta_c)
    )
    return Spectrum(blended)


def design_matching(
    spec: SystemSpec,
    length: int = DEFAULT_PREDICTOR_TAPS,
    prefilter_taps: int = DEFAULT_PREFILTER_TAPS,
    margin: float = DEFAULT_MARGIN,
) -> MatchingFilterSet:
    """Design the Analog Matching filters for a source/channel pair.

    Args:
        spec: Source spectrum, noise spectrum and power
        length: Number of predictor taps
        prefilter_taps: Odd number of taps of the zero-phase pre/post filters
        margin: Gain shrink factor, beta = beta0 / (1 + margin)

    Returns:
        MatchingFilterSet with F2 = F1 and G2 = G1
    """
    source, noise = spec.source, spec.noise
    channel = waterfill(noise, spec.power)
    theta_c, capacity = channel.water_level, channel.rate
    d_opt = opta(spec).d_opt
    theta_s = reverse_waterfill(source, d_opt).water_level
    alpha = -np.expm1(-2.0 * capacity)
    if alpha <= 0:
        raise DomainError("channel capacity is zero; nothing can be transmitted")

    s = source.values
    f1_squared = np.where(s > theta_s, 1.0 - theta_s / np.where(s > 0, s, 1.0), 0.0)
    f1 = zero_phase_fir(np.sqrt(f1_squared), prefilter_taps)

    g1_squared = np.where(noise.in_band, np.maximum(theta_c - noise.values, 0.0), 0.0) / theta_c
    g1 = zero_phase_fir(np.sqrt(g1_squared), prefilter_taps)

    noise_floor = (1.0 - alpha) * theta_c
    beta0 = float(np.sqrt(noise_floor / theta_s))
    beta = _operating_beta(beta0, margin)

    s_u = Spectrum(f1_squared * s, source.band_limit)
    s_v = _s_v(s_u, noise_floor, beta)
    s_tilde_z = _s_tilde_z(noise, theta_c)
    p_s = optimal_predictor(s_v, length)
    p_c = optimal_predictor(s_tilde_z, length)

    logger.info(
        f"Matching design: C={capacity:.4f} nats, alpha={alpha:.4f}, theta_C={theta_c:.4g}, "
        f"theta_S={theta_s:.4g}, beta0={beta0:.4g}, margin={margin}"
    )
    fs = MatchingFilterSet(
        DesignMode.MATCHING,
        f1,
        f1,
        g1,
        g1,
        p_s,
        p_c,
        float(alpha),
        beta0,
        beta,
        margin,
        float(theta_s),
        float(theta_c),
        float(capacity),
        float(d_opt),
        source.variance,
        float(noise_floor),
        s_u,
        s_v,
        s_tilde_z,
    )
    return fs


def design_zero_forcing(
    spec: SystemSpec,
    length: int = DEFAULT_PREDICTOR_TAPS,
    margin: float = DEFAULT_MARGIN,
) -> MatchingFilterSet:
    """High-SNR variant: no pre/post filtering, predictors of the raw spectra.

    The lattice carries the full power (theta_C = P), beta0^2 = P / P_e(S_S).
    """
    if not np.isclose(spec.rho, 1.0):
        raise DomainError(f"zero-forcing design requires rho = 1, got {spec.rho:.6g}")
    source, noise = spec.source, spec.noise
    channel = waterfill(noise, spec.power)
    capacity = channel.rate
    d_opt = opta(spec).d_opt

    pe_source = entropy_power(source)
    noise_floor = entropy_power(noise)
    beta0 = float(np.sqrt(spec.power / pe_source))
    beta = _operating_beta(beta0, margin)
    identity = FirFilter.identity()

    s_u = source
    s_v = _s_v(s_u, noise_floor, beta)
    logger.info(
        f"Zero-forcing design: P={spec.power:.4g}, Pe(S)={pe_source:.4g}, "
        f"Pe(Z)={noise_floor:.4g}, beta0={beta0:.4g}"
    )
    fs = MatchingFilterSet(
        DesignMode.ZERO_FORCING,
        identity,
        identity,
        identity,
        identity,
        optimal_predictor(source, length),
        optimal_predictor(noise, length),
        float(-np.expm1(-2.0 * capacity)),
        beta0,
        beta,
        margin,
        noise_floor / beta0**2,
        float(spec.power),
        float(capacity),
        float(d_opt),
        source.variance,
        float(noise_floor),
        s_u,
        s_v,
        noise,
    )
    return fs


def mod_input_variance(fs: MatchingFilterSet, beta: float | None = None) -> float:
    """Analytic Var{T} at gain beta: beta^2 times the noisy prediction error of U plus Var{Z_eq}.

    Equals theta_C at beta0 for the matching design and grows with beta.
    """
    if beta is None:
        beta = fs.beta
    if beta <= 0:
        raise DomainError(f"beta must be positive, got {beta}")
    residual = noisy_prediction_error(fs.s_u, fs.noise_floor / beta**2)
    return float(beta**2 * residual + fs.noise_floor)


def predicted_distortion(fs: MatchingFilterSet, spec: SystemSpec) -> float:
    """Distortion reached by the designed FIR filters when decoding never fails.

    D = integral of |1 - F2 F1|^2 S_S + |F2|^2 Var{Z_eq} / beta^2.
    """
    size = spec.source.size
    f1 = fs.f1.frequency_response(size)
    f2 = fs.f2.frequency_response(size)
    signal_term = spec.source.weights * np.abs(1.0 - f2 * f1) ** 2 * spec.source.values
    noise_term = np.abs(f2) ** 2 * fs.noise_floor / fs.beta**2
    if fs.mode is DesignMode.ZERO_FORCING:
        noise_term = spec.source.weights * noise_term
    return float(np.sum(signal_term + noise_term) / size)


def predicted_sdr(fs: MatchingFilterSet, spec: SystemSpec) -> float:
    return spec.source.variance / predicted_distortion(fs, spec)


def verify_exact_identities(fs: MatchingFilterSet, spec: SystemSpec) -> IdentityReport:
    """Check the closed-form variance identities of a matching design.

    Source: the noisy prediction error of U at (1 - alpha) theta_C / beta0^2
    equals alpha / (1 - alpha) theta_S. Channel: the prediction error of the
    equivalent noise equals (1 - alpha) theta_C (biased estimator) or
    (1 - alpha) / alpha theta_C after removing the alpha bias. Boundary: the
    mod-input variance at beta0 equals theta_C.
    """
    if fs.mode is not DesignMode.MATCHING:
        raise DomainError("exact identities hold for the matching design only")
    alpha = fs.alpha
    source_lhs = noisy_prediction_error(fs.s_u, fs.noise_floor / fs.beta0**2)
    source_rhs = alpha / (1.0 - alpha) * fs.theta_s
    channel_lhs = entropy_power(fs.s_tilde_z)
    channel_rhs = (1.0 - alpha) * fs.theta_c
    report = IdentityReport(
        source_lhs=source_lhs,
        source_rhs=source_rhs,
        channel_lhs=channel_lhs,
        channel_rhs=channel_rhs,
        unbiased_lhs=channel_lhs / alpha,
        unbiased_rhs=(1.0 - alpha) / alpha * fs.theta_c,
        boundary_variance=mod_input_variance(fs, fs.beta0),
        theta_c=fs.theta_c,
    )
    if report.max_error > 1e-4:
        logger.warning(f"Identity mismatch above 1e-4: {report.to_dict()}")
    return report


def design(spec: SystemSpec, mode: DesignMode | str = DesignMode.MATCHING, **kwargs):
    """Dispatch to the matching or zero-forcing design."""
    mode = DesignMode(mode)
    if mode is DesignMode.ZERO_FORCING:
        kwargs.pop("prefilter_taps", None)
        return design_zero_forcing(spec, **kwargs)
    return design_matching(spec, **kwargs)
