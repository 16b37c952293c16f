"""Display current configuration."""

import yaml

from analog_matching.config import ExperimentConfig


def main(config_path: str) -> bool:
    """Display the resolved configuration.

    Returns:
        True if successful, False otherwise
    """
    config = ExperimentConfig(config_path)
    spec = config.system_spec()

    print("Current Configuration")
    print("=" * 60)
    print(f"Mode: {config.mode}")
    print(f"Grid: {config.grid_size} bins, rho = {spec.rho:.4g}, SNR = {spec.snr:.6g}")
    print(f"Lattice: {config.lattice_kind.value}")
    print(f"Stream: N = {config.columns}, L = {config.predictor_length}, margin = {config.margin}")
    print(f"Threads: {config.threads()}")
    print("-" * 60)
    print(yaml.safe_dump(config.resolved(), sort_keys=False).rstrip())
    print("=" * 60)
    return True
