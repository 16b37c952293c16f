"""Run the Monte Carlo simulation for one SNR or a sweep."""

import logging
from pathlib import Path

from analog_matching.commands import banner, setup, write_json
from analog_matching.services.design import MatchingFilterSet
from analog_matching.services.simulator import run_end_to_end, summary, sweep, write_report_csv

logger = logging.getLogger(__name__)


def main(
    config_path: str,
    log_level: str | None = None,
    out: str | None = None,
    seed: int | None = None,
    threads: int | None = None,
) -> bool:
    """Write simulate.csv (one row per SNR) and simulate.json.

    Returns:
        True if successful, False otherwise
    """
    config = setup(config_path, log_level)
    out_dir = Path(out) if out else config.output_dir
    sim_config = config.simulation_config(seed=seed, threads=threads)

    snr_list = config.sweep_snr_db
    if snr_list:
        if config.filterset_path is not None:
            logger.warning("stream.filterset is ignored for sweeps; every point is redesigned")
        reports = sweep(config.system_spec(snr_db=snr_list[0]), snr_list, sim_config)
    else:
        spec = config.system_spec()
        filterset = None
        if config.filterset_path is not None:
            filterset = MatchingFilterSet.load(config.filterset_path)
            logger.info(f"Using stored filter set {config.filterset_path}")
        reports = [run_end_to_end(spec, sim_config, filterset=filterset)]

    resolved = config.resolved(seed=seed, threads=threads)
    csv_path = write_report_csv(reports, out_dir / "simulate.csv", resolved)
    json_path = write_json(summary(reports, sim_config, resolved), out_dir / "simulate.json")

    banner("ANALOG MATCHING - SIMULATION")
    print(f"{'SNR [dB]':>9} {'SDR [dB]':>9} {'OPTA [dB]':>10} {'gap [dB]':>9} {'failures':>10}")
    for r in reports:
        print(
            f"{r.snr_db:9.2f} {r.empirical_sdr_db:9.3f} {r.theory_sdr_db:10.3f} "
            f"{r.gap_db:9.3f} {r.failure_rate:10.3g}"
        )
    print(f"Output: {csv_path}, {json_path}")
    print("=" * 70)
    return True
