"""Unknown-SNR curves: Analog Matching versus reported schemes and bounds."""

import logging
from pathlib import Path

import numpy as np

from analog_matching import __version__
from analog_matching.commands import banner, setup, write_json
from analog_matching.exceptions import DomainError
from analog_matching.services.robustness import (
    Scheme,
    distortion_slope,
    mismatched_curve,
    robustness_curve,
    snr_grid,
    write_curve_csv,
)

logger = logging.getLogger(__name__)

CURVE_SPAN_DB = 60.0


def main(
    config_path: str,
    log_level: str | None = None,
    out: str | None = None,
    compare: bool = False,
) -> bool:
    """Write robustness.csv and robustness.json.

    Without ``--compare`` only the Analog Matching curve is emitted; with it
    the reported, outer-bound (bandwidth expansion only) and high-SNR curves
    follow. In ``robustness`` mode the configured spectra add the curve of a
    single encoder designed at SNR0.

    Returns:
        True if successful, False otherwise
    """
    config = setup(config_path, log_level)
    out_dir = Path(out) if out else config.output_dir
    rho = config.robustness_rho
    snr0_db = config.robustness_snr0_db
    snr0 = 10 ** (snr0_db / 10)
    if config.robustness_snr_db:
        snr_points = 10 ** (np.array(config.robustness_snr_db) / 10)
    else:
        snr_points = snr_grid(snr0_db, snr0_db + CURVE_SPAN_DB, config.points_per_decade)

    schemes = [Scheme.AM]
    if compare:
        schemes += [Scheme.REPORTED, Scheme.OUTER, Scheme.HIGH_SNR]
        if rho <= 1:
            logger.info("Outer bound skipped: it holds for bandwidth expansion only")
            schemes.remove(Scheme.OUTER)
    curves = [robustness_curve(scheme, rho, snr0, snr_points) for scheme in schemes]
    if config.mode == "robustness":
        curves.append(mismatched_curve(config.system_spec(), snr0, snr_points))

    slopes = {}
    for curve in curves:
        try:
            slopes[curve.scheme.value] = distortion_slope(curve)
        except DomainError as e:
            logger.warning(f"No slope for {curve.scheme.value}: {e}")

    resolved = config.resolved()
    csv_path = write_curve_csv(curves, out_dir / "robustness.csv", resolved)
    json_path = write_json(
        {
            "version": __version__,
            "config": resolved,
            "rho": rho,
            "snr0": snr0,
            "schemes": [c.scheme.value for c in curves],
            "slopes": slopes,
        },
        out_dir / "robustness.json",
    )

    banner("ANALOG MATCHING - UNKNOWN SNR")
    print(f"rho = {rho:.4g}, SNR0 = {snr0_db:.2f} dB, {snr_points.size} SNR points")
    for curve in curves:
        slope = slopes.get(curve.scheme.value)
        slope_text = f"{slope:.3f}" if slope is not None else "n/a"
        top = 10 * np.log10(curve.sdr_points[-1])
        print(f"  {curve.scheme.value:<12} SDR at top SNR {top:8.3f} dB, slope {slope_text}")
    print(f"Output: {csv_path}, {json_path}")
    print("=" * 70)
    return True
