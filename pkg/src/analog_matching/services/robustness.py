"""Unknown-SNR behaviour: mismatched decoding and robustness curves.

The encoder stays designed for the noise spectrum S_Z0 while the channel
noise is S_Z. Inside the source-channel passband F0 (S_S > theta_S and
S_Z0 < theta_C) the decoder turns a less noisy channel into lower
distortion; elsewhere the distortion stays at the water-filling value.
"""

import csv
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import NamedTuple

import numpy as np

from analog_matching.core.factorization import zero_phase_fir
from analog_matching.core.spectrum import Spectrum, prediction_gain
from analog_matching.core.waterfill import SystemSpec, opta
from analog_matching.exceptions import ConfigError, DomainError
from analog_matching.services.codec import DecoderFilters
from analog_matching.services.design import (
    DEFAULT_PREFILTER_TAPS,
    DesignMode,
    MatchingFilterSet,
    design_matching,
)
from analog_matching.services.records import table_lines, write_provenance

logger = logging.getLogger(__name__)

POINTS_PER_DECADE = 10


class Scheme(Enum):
    AM = "am"
    REPORTED = "reported"
    OUTER = "outer"
    HIGH_SNR = "high_snr"
    OPTA = "opta"
    MISMATCHED = "mismatched"


@dataclass(frozen=True, eq=False)
class PassbandSet:
    """Source, channel and joint passband masks over the grid."""

    f_s: np.ndarray
    f_c: np.ndarray

    @property
    def f_0(self) -> np.ndarray:
        return self.f_s & self.f_c


@dataclass(frozen=True, eq=False)
class RobustnessCurve:
    rho: float
    snr0: float
    snr_points: np.ndarray
    sdr_points: np.ndarray
    scheme: Scheme

    def rows(self) -> list[dict]:
        return [
            {"scheme": self.scheme.value, "rho": self.rho, "snr0": self.snr0, "snr": s, "sdr": d}
            for s, d in zip(self.snr_points.tolist(), self.sdr_points.tolist(), strict=True)
        ]


class ComparisonPoint(NamedTuple):
    am: float
    reported: float
    outer: float | None  # only defined for bandwidth expansion
    high_snr: float
    with_gains: float


def _check_matching(fs: MatchingFilterSet) -> None:
    if fs.mode is not DesignMode.MATCHING:
        raise DomainError("mismatched decoding is defined for the matching design only")


def passbands(s_s: Spectrum, s_z0: Spectrum, fs: MatchingFilterSet) -> PassbandSet:
    return PassbandSet(
        f_s=s_s.in_band & (s_s.values > fs.theta_s),
        f_c=s_z0.in_band & (s_z0.values < fs.theta_c),
    )


def equivalent_noise_spectrum(
    s_z0: np.ndarray, s_z: np.ndarray, f_c: np.ndarray, fs: MatchingFilterSet
) -> np.ndarray:
    """Spectrum of Z_eq once G2 is the Wiener filter for the actual noise.

    Matched noise gives the flat (1 - alpha) theta_C; less noise lowers it
    inside F_C only.
    """
    theta = fs.theta_c
    s0 = fs.noise_floor
    with np.errstate(divide="ignore", invalid="ignore"):
        inside = s0 * theta * s_z / (s_z0 * (theta - s_z0 + s_z))
    return np.where(f_c, inside, s0)


def _gate(s_z0, s_z, f_c, s_eq, fs: MatchingFilterSet) -> None:
    if np.any(s_z[f_c] < 0):
        raise DomainError("actual noise spectrum must be nonnegative")
    if np.all(s_z[f_c] <= s_z0[f_c] * (1 + 1e-12)):
        return
    if np.mean(s_eq) <= fs.noise_floor * (1 + 1e-12):
        logger.warning(
            "Actual noise is not degraded with respect to the design; "
            "accepting it on the integral of the equivalent noise (heuristic)"
        )
        return
    raise DomainError(
        f"equivalent noise power {np.mean(s_eq):.6g} exceeds the matched value "
        f"{fs.noise_floor:.6g}; correct decoding is not guaranteed"
    )


def mismatched_distortion_spectrum(
    s_s: Spectrum,
    s_z0: Spectrum,
    s_z: Spectrum,
    design: MatchingFilterSet,
    beta: float | None = None,
) -> tuple[Spectrum, float]:
    """Distortion spectrum of the encoder designed for S_Z0 on a channel with noise S_Z.

    D = S_S / (1 + Phi (beta / beta0)^2) on the source passband and S_S
    elsewhere, with Phi = (S_S / theta_S - 1) (1 - alpha) theta_C / S_eq.

    Returns:
        (distortion spectrum, its band integral)
    """
    _check_matching(design)
    if beta is None:
        beta = design.beta
    bands = passbands(s_s, s_z0, design)
    s_eq = equivalent_noise_spectrum(s_z0.values, s_z.values, bands.f_c, design)
    _gate(s_z0.values, s_z.values, bands.f_c, s_eq, design)

    s = s_s.values
    scale = (beta / design.beta0) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = (s / design.theta_s - 1.0) * design.noise_floor / s_eq * scale
        shrunk = np.where(np.isinf(phi), 0.0, s / (1.0 + phi))
    values = np.where(bands.f_s, shrunk, s)
    distortion = Spectrum(values, s_s.band_limit)
    total = float(np.sum(s_s.weights * values) / s_s.size)
    logger.debug(f"Mismatched distortion {total:.6g} (matched water level {design.theta_s:.6g})")
    return distortion, total


def mismatched_decoder(
    design: MatchingFilterSet,
    s_z: Spectrum,
    prefilter_taps: int = DEFAULT_PREFILTER_TAPS,
    beta: float | None = None,
) -> DecoderFilters:
    """Wiener replacements for G2 and F2 when the channel noise is S_Z.

    The encoder is untouched. P_C keeps its design value: it must cancel the
    interference term the encoder subtracted. F2 is the Wiener filter at
    ``beta`` (default: the operating beta); the design F2 is the one at beta0,
    so matched noise returns the design filters only when ``beta`` is beta0 or
    the design margin is zero.
    """
    _check_matching(design)
    if beta is None:
        beta = design.beta
    theta = design.theta_c
    s_z0 = design.s_tilde_z.values
    f_c = s_z0 < theta * (1 - 1e-12)
    s_eq = equivalent_noise_spectrum(s_z0, s_z.values, f_c, design)
    _gate(s_z0, s_z.values, f_c, s_eq, design)

    g1 = np.sqrt(np.where(f_c, (theta - s_z0) / theta, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        g2 = np.where(f_c, g1 * theta / (theta - s_z0 + s_z.values), 0.0)

    s_u = design.s_u.values
    f_s = s_u > 0
    s = s_u + design.theta_s
    f1 = np.sqrt(np.where(f_s, s_u / s, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        f2 = np.where(f_s, f1 * s / (s_u + s_eq / beta**2), 0.0)

    logger.info(f"Mismatched decoder: {prefilter_taps} taps, actual noise {s_z.variance:.6g}")
    return DecoderFilters(
        g2=zero_phase_fir(g2, prefilter_taps),
        p_c=design.p_c,
        f2=zero_phase_fir(f2, prefilter_taps),
    )


def _check_snr(snr0: float, snr: float) -> None:
    if snr0 <= 0:
        raise DomainError(f"design SNR must be positive, got {snr0}")
    if snr < snr0:
        raise DomainError(f"SNR {snr} is below the design SNR {snr0}")


def _sdr(rho: float, snr0: float, phi: float) -> float:
    share = min(1.0, rho)
    return 1.0 / ((1.0 - share) / (1.0 + snr0) ** rho + share / (1.0 + phi))


def cor1_curve(rho: float, snr0: float, snr: float) -> float:
    """SDR of a white Analog Matching encoder built for snr0, decoded at snr >= snr0."""
    _check_snr(snr0, snr)
    phi = (1.0 + snr) / (1.0 + snr0) * ((1.0 + snr0) ** rho - 1.0)
    return _sdr(rho, snr0, phi)


def reported_sdr(rho: float, snr0: float, snr: float) -> float:
    """Best previously reported hybrid digital-analog performance."""
    _check_snr(snr0, snr)
    return _sdr(rho, snr0, (1.0 + snr) * (1.0 + snr0) ** (rho - 1.0) - 1.0)


def outer_bound_sdr(rho: float, snr0: float, snr: float) -> float:
    """Outer bound for bandwidth expansion on schemes optimal at snr0."""
    _check_snr(snr0, snr)
    if rho <= 1:
        raise DomainError(f"the outer bound holds for bandwidth expansion only, got rho = {rho}")
    return _sdr(rho, snr0, snr / snr0 * ((1.0 + snr0) ** rho - 1.0))


def high_snr_sdr(rho: float, snr0: float, snr: float) -> float:
    _check_snr(snr0, snr)
    share = min(1.0, rho)
    return 1.0 / ((1.0 - share) / snr0**rho + share / (snr * snr0 ** (rho - 1.0)))


def comparison_curves(
    rho: float, snr0: float, snr: float, gamma_s: float = 1.0, gamma_c: float = 1.0
) -> ComparisonPoint:
    """All comparison values at one point; ``with_gains`` is the colored high-SNR limit."""
    high = high_snr_sdr(rho, snr0, snr)
    return ComparisonPoint(
        am=cor1_curve(rho, snr0, snr),
        reported=reported_sdr(rho, snr0, snr),
        outer=outer_bound_sdr(rho, snr0, snr) if rho > 1 else None,
        high_snr=high,
        with_gains=high * gamma_s * gamma_c,
    )


def colored_gains(spec: SystemSpec) -> tuple[float, float]:
    return prediction_gain(spec.source), prediction_gain(spec.noise)


_SCHEMES = {
    Scheme.AM: cor1_curve,
    Scheme.REPORTED: reported_sdr,
    Scheme.OUTER: outer_bound_sdr,
    Scheme.HIGH_SNR: high_snr_sdr,
}


def snr_grid(start_db: float, stop_db: float, points_per_decade: int = POINTS_PER_DECADE):
    """Log-spaced SNRs (linear scale) from start_db to stop_db inclusive."""
    if stop_db < start_db:
        raise DomainError(f"empty SNR range [{start_db}, {stop_db}] dB")
    count = int(round((stop_db - start_db) / 10 * points_per_decade)) + 1
    return 10 ** (np.linspace(start_db, stop_db, count) / 10)


def robustness_curve(
    scheme: Scheme | str, rho: float, snr0: float, snr_points: np.ndarray
) -> RobustnessCurve:
    scheme = Scheme(scheme)
    snr_points = np.asarray(snr_points, dtype=float)
    if scheme is Scheme.OPTA:
        sdr = (1.0 + snr_points) ** rho
    else:
        evaluate = _SCHEMES.get(scheme)
        if evaluate is None:
            raise DomainError(f"{scheme.value} curves need system spectra (see mismatched_curve)")
        sdr = np.array([evaluate(rho, snr0, s) for s in snr_points])
    return RobustnessCurve(rho, snr0, snr_points, sdr, scheme)


def distortion_slope(curve: RobustnessCurve) -> float:
    """Log-log slope of SDR against SNR over the top decade of the curve."""
    snr = curve.snr_points
    if snr.size < 3 or np.log10(snr.max() / snr.min()) < 2 - 1e-9:
        raise DomainError("slope needs at least 3 points spanning two decades of SNR")
    top = snr >= snr.max() / 10 * (1 - 1e-12)
    if np.count_nonzero(top) < 2:
        raise DomainError("slope needs at least 2 points in the top decade")
    slope, _ = np.polyfit(np.log10(snr[top]), np.log10(curve.sdr_points[top]), 1)
    return float(slope)


def mismatched_curve(
    spec: SystemSpec, snr0: float, snr_points: np.ndarray, length: int = 16
) -> RobustnessCurve:
    """One encoder designed at snr0, evaluated as the noise shrinks to each SNR.

    The noise keeps its shape; the decoder adapts through the Wiener filters.
    """
    snr_points = np.asarray(snr_points, dtype=float)
    design_spec = spec.with_snr(snr0)
    fs = design_matching(design_spec, length=length, margin=0.0)
    variance = spec.source.variance
    sdr = []
    for snr in snr_points:
        _check_snr(snr0, snr)
        actual = design_spec.noise.scaled(snr0 / snr)
        _, d = mismatched_distortion_spectrum(spec.source, design_spec.noise, actual, fs)
        sdr.append(variance / d)
    return RobustnessCurve(spec.rho, snr0, snr_points, np.array(sdr), Scheme.MISMATCHED)


def universal_design_snr(
    spec: SystemSpec,
    delta: float = 0.1,
    snr_db: np.ndarray | None = None,
    length: int = 16,
) -> float:
    """Smallest design SNR whose single encoder stays within (1 - delta) of the optimum.

    Candidates and test points both come from ``snr_db``.
    """
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    if not np.isclose(spec.rho, 1.0):
        raise DomainError("universal encoder search is defined for rho = 1")
    if snr_db is None:
        snr_db = np.arange(0.0, 61.0)
    snrs = 10 ** (np.asarray(snr_db, dtype=float) / 10)
    optimum = np.array([opta(spec.with_snr(s)).sdr_opt for s in snrs])

    for i, snr0 in enumerate(snrs):
        curve = mismatched_curve(spec, snr0, snrs[i:], length)
        if np.all(curve.sdr_points >= (1 - delta) * optimum[i:]):
            logger.info(f"Universal encoder found at SNR0 = {10 * np.log10(snr0):.2f} dB")
            return float(snr0)
    raise DomainError(f"no design SNR on the grid stays within {delta} of the optimum")


CURVE_FIELDS = ["scheme", "rho", "snr0", "snr", "sdr"]


def write_curve_csv(curves: list[RobustnessCurve], path: str | Path, config: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        write_provenance(f, config)
        writer = csv.DictWriter(f, fieldnames=CURVE_FIELDS)
        writer.writeheader()
        for curve in curves:
            writer.writerows(curve.rows())
    logger.info(f"Wrote {len(curves)} curves to {path}")
    return path


def read_curve_csv(path: str | Path) -> list[RobustnessCurve]:
    """Curves in file order, one per (scheme, rho, snr0)."""
    path = Path(path)
    if not path.exists():
        raise ConfigError("curve file not found", str(path))
    grouped: dict[tuple, list[tuple[float, float]]] = {}
    with open(path, newline="") as f:
        reader = csv.DictReader(table_lines(f))
        if reader.fieldnames != CURVE_FIELDS:
            raise ConfigError("unexpected curve header", str(path))
        for row in reader:
            key = (row["scheme"], float(row["rho"]), float(row["snr0"]))
            grouped.setdefault(key, []).append((float(row["snr"]), float(row["sdr"])))
    curves = []
    for (scheme, rho, snr0), points in grouped.items():
        snr, sdr = (np.array(column) for column in zip(*points, strict=True))
        curves.append(RobustnessCurve(rho, snr0, snr, sdr, Scheme(scheme)))
    return curves
