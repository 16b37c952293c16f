"""Analyze a source/channel pair: entropy powers, water-filling, OPTA and bounds."""

import logging
from pathlib import Path

import numpy as np

from analog_matching import __version__
from analog_matching.commands import banner, setup, write_json
from analog_matching.core import (
    entropy_power,
    opta,
    prediction_gain,
    reverse_waterfill,
    shannon_bounds,
    waterfill,
)

logger = logging.getLogger(__name__)


def main(config_path: str, log_level: str | None = None, out: str | None = None) -> bool:
    """Write analyze.json for the configured system.

    Returns:
        True if successful, False otherwise
    """
    config = setup(config_path, log_level)
    spec = config.system_spec()
    out_dir = Path(out) if out else config.output_dir

    channel = waterfill(spec.noise, spec.power)
    best = opta(spec)
    source = reverse_waterfill(spec.source, best.d_opt)
    bounds = shannon_bounds(spec)
    result = {
        "version": __version__,
        "config": config.resolved(),
        "rho": spec.rho,
        "snr": spec.snr,
        "source": {
            "variance": spec.source.variance,
            "entropy_power": entropy_power(spec.source),
            "prediction_gain": prediction_gain(spec.source),
            "water_level": source.water_level,
        },
        "noise": {
            "power": spec.noise_power,
            "entropy_power": entropy_power(spec.noise),
            "prediction_gain": prediction_gain(spec.noise),
        },
        "channel": {"water_level": channel.water_level, "capacity": channel.rate},
        "opta": {"d_opt": best.d_opt, "sdr_opt": best.sdr_opt},
        "bounds": {"slb": bounds.slb, "sub": bounds.sub, "rate": bounds.rate},
    }
    path = write_json(result, out_dir / "analyze.json")
    logger.info(f"Analysis written to {path}")

    banner("ANALOG MATCHING - SYSTEM ANALYSIS")
    print(f"rho = {spec.rho:.4g}, SNR = {10 * np.log10(spec.snr):.2f} dB")
    print(f"Capacity: {channel.rate:.6f} nats/channel use (theta_C = {channel.water_level:.6g})")
    print(f"OPTA SDR: {10 * np.log10(best.sdr_opt):.4f} dB (theta_S = {source.water_level:.6g})")
    gammas = (prediction_gain(spec.source), prediction_gain(spec.noise))
    print(f"Gamma_S = {gammas[0]:.4f}, Gamma_C = {gammas[1]:.4f}")
    print(f"Output: {path}")
    print("=" * 70)
    return True
