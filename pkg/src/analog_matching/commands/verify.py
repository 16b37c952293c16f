"""Verify the installation with analytic self-checks."""

import logging

import numpy as np
from scipy.stats import norm

logger = logging.getLogger(__name__)

PROBE_TRIALS = 200_000


def main() -> bool:
    """Run closed-form checks of the design chain.

    Returns:
        True if all checks pass, False otherwise
    """
    print("Verifying Analog Matching Installation")
    print("=" * 60)
    print()

    all_checks_passed = True

    # Check 1: OPTA of a white system
    print("1. White OPTA")
    try:
        from analog_matching.core import SystemSpec, opta

        for rho in (0.5, 1.0, 2.0):
            sdr = opta(SystemSpec.white(100.0, rho)).sdr_opt
            expected = 101.0**rho
            if abs(sdr - expected) <= 1e-4 * expected:
                print(f"   ✓ rho = {rho}: SDR {sdr:.6g} = (1 + SNR)^rho")
            else:
                print(f"   ✗ rho = {rho}: SDR {sdr:.6g}, expected {expected:.6g}")
                all_checks_passed = False
    except Exception as e:
        print(f"   ✗ OPTA failed: {e}")
        all_checks_passed = False
    print()

    # Check 2: Exact variance identities on a colored pair
    print("2. Matching Identities (AR(1) 0.9 source, two-level noise)")
    try:
        from analog_matching.core import SystemSpec, spectrum
        from analog_matching.services.design import design_matching, verify_exact_identities

        spec = SystemSpec(spectrum.ar1(0.9), spectrum.two_level(1.0, 3.0), 20.0)
        report = verify_exact_identities(design_matching(spec, margin=0.0), spec)
        for name in ("source", "channel", "boundary"):
            error = getattr(report, f"{name}_error")
            mark = "✓" if error <= 1e-4 else "✗"
            print(f"   {mark} {name}: relative error {error:.2e}")
        if report.max_error > 1e-4:
            all_checks_passed = False
    except Exception as e:
        print(f"   ✗ Design failed: {e}")
        all_checks_passed = False
    print()

    # Check 3: Scalar lattice with Gaussian noise at the cell second moment
    print("3. Scalar Lattice Goodness Probe")
    try:
        from analog_matching.core import Lattice, goodness_probe

        rate = goodness_probe(Lattice.create("scalar"), [1.0], PROBE_TRIALS)
        expected = 2 * norm.sf(np.sqrt(3.0))
        if abs(rate - expected) <= 5e-3:
            print(f"   ✓ Failure rate {rate:.4f} (expected {expected:.4f})")
        else:
            print(f"   ✗ Failure rate {rate:.4f}, expected {expected:.4f}")
            all_checks_passed = False
    except Exception as e:
        print(f"   ✗ Probe failed: {e}")
        all_checks_passed = False
    print()

    print("=" * 60)
    if all_checks_passed:
        print("✓ All checks passed! Ready to use.")
    else:
        print("✗ Some checks failed.")
    print()
    return all_checks_passed
