"""Design the Analog Matching filters and store them as JSON."""

import logging
from pathlib import Path

from analog_matching.commands import banner, setup, write_json
from analog_matching.services.design import DesignMode, design, verify_exact_identities

logger = logging.getLogger(__name__)


def main(config_path: str, log_level: str | None = None, out: str | None = None) -> bool:
    """Write filterset.json; it can be fed back through ``stream.filterset``.

    Returns:
        True if successful, False otherwise
    """
    config = setup(config_path, log_level)
    spec = config.system_spec()
    out_dir = Path(out) if out else config.output_dir

    fs = design(
        spec,
        config.design_mode,
        length=config.predictor_length,
        prefilter_taps=config.prefilter_taps,
        margin=config.margin,
    )
    data = fs.to_dict()
    data["config"] = config.resolved()
    identities_ok = True
    if fs.mode is DesignMode.MATCHING:
        report = verify_exact_identities(fs, spec)
        data["identities"] = report.to_dict()
        identities_ok = report.max_error <= 1e-4
    path = write_json(data, out_dir / "filterset.json")
    logger.info(f"Filter set written to {path}")

    banner("ANALOG MATCHING - FILTER DESIGN")
    print(f"Mode: {fs.mode.value}, L = {fs.length}")
    print(f"alpha = {fs.alpha:.6f}, beta0 = {fs.beta0:.6g}, beta = {fs.beta:.6g}")
    print(f"theta_S = {fs.theta_s:.6g}, theta_C = {fs.theta_c:.6g}")
    print(f"F1: {fs.f1.length} taps, G1: {fs.g1.length} taps")
    print(f"Source predictor: {'absent' if fs.p_s.is_zero else 'active'}")
    print(f"Channel predictor: {'absent' if fs.p_c.is_zero else 'active'}")
    if fs.mode is DesignMode.MATCHING:
        mark = "✓" if identities_ok else "✗"
        print(f"{mark} Exact identities, max relative error {report.max_error:.2e}")
    print(f"Output: {path}")
    print("=" * 70)
    return identities_ok
