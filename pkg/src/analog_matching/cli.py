"""Command-line interface for the Analog Matching simulator."""

import argparse
import sys

from analog_matching.config import DEFAULT_CONFIG_PATH
from analog_matching.exceptions import ConfigError, ContractError, DomainError, SolverError

EXIT_CONFIG_ERROR = 2
EXIT_NUMERIC_ERROR = 3


def _add_common(parser: argparse.ArgumentParser, out: bool = True) -> None:
    parser.add_argument(
        "--config",
        type=str,
        default=DEFAULT_CONFIG_PATH,
        help=f"Experiment configuration file (default: {DEFAULT_CONFIG_PATH})",
    )
    if out:
        parser.add_argument(
            "--out",
            type=str,
            default=None,
            help="Output directory (overrides output.dir)",
        )
        parser.add_argument(
            "--log-level",
            type=str,
            default=None,
            choices=["DEBUG", "INFO", "WARNING", "ERROR"],
            help="Logging level (overrides config.yaml setting)",
        )


def main(argv: list[str] | None = None):
    """Main CLI entry point."""
    parser = argparse.ArgumentParser(
        description="Analog Matching - joint source-channel coding simulator",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  analog-matching analyze                       # Entropy powers, water-filling, OPTA
  analog-matching design                        # Design filters into filterset.json
  analog-matching simulate --seed 7 --threads 4 # Monte Carlo run or SNR sweep
  analog-matching robustness --compare          # Unknown-SNR curves and bounds
  analog-matching config                        # Show resolved configuration
  analog-matching verify                        # Analytic self-checks
        """,
    )

    # Create subparsers for commands
    subparsers = parser.add_subparsers(
        dest="command",
        help="Available commands",
        required=True,
    )

    # Analyze command
    analyze_parser = subparsers.add_parser("analyze", help="Analyze the source/channel pair")
    _add_common(analyze_parser)

    # Design command
    design_parser = subparsers.add_parser("design", help="Design the matching filters")
    _add_common(design_parser)

    # Simulate command
    simulate_parser = subparsers.add_parser("simulate", help="Run the Monte Carlo simulation")
    _add_common(simulate_parser)
    simulate_parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="Master seed (overrides stream.seed)",
    )
    simulate_parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="Worker threads (overrides config and AM_THREADS)",
    )

    # Robustness command
    robustness_parser = subparsers.add_parser(
        "robustness", help="Compute SDR versus SNR for a design at SNR0"
    )
    _add_common(robustness_parser)
    robustness_parser.add_argument(
        "--compare",
        action="store_true",
        help="Add the reported scheme, the outer bound and the high-SNR curve",
    )

    # Config command
    config_parser = subparsers.add_parser("config", help="Show current configuration")
    _add_common(config_parser, out=False)

    # Verify command
    subparsers.add_parser("verify", help="Run analytic self-checks")

    args = parser.parse_args(argv)

    # Route to appropriate command
    try:
        if args.command == "analyze":
            from analog_matching.commands.analyze import main as analyze_main

            ok = analyze_main(args.config, log_level=args.log_level, out=args.out)
            sys.exit(0 if ok else 1)

        elif args.command == "design":
            from analog_matching.commands.design import main as design_main

            ok = design_main(args.config, log_level=args.log_level, out=args.out)
            sys.exit(0 if ok else 1)

        elif args.command == "simulate":
            from analog_matching.commands.simulate import main as simulate_main

            ok = simulate_main(
                args.config,
                log_level=args.log_level,
                out=args.out,
                seed=args.seed,
                threads=args.threads,
            )
            sys.exit(0 if ok else 1)

        elif args.command == "robustness":
            from analog_matching.commands.robustness import main as robustness_main

            ok = robustness_main(
                args.config, log_level=args.log_level, out=args.out, compare=args.compare
            )
            sys.exit(0 if ok else 1)

        elif args.command == "config":
            from analog_matching.commands.show_config import main as show_config_main

            sys.exit(0 if show_config_main(args.config) else 1)

        elif args.command == "verify":
            from analog_matching.commands.verify import main as verify_main

            sys.exit(0 if verify_main() else 1)

        else:
            parser.print_help()
            sys.exit(1)

    except KeyboardInterrupt:
        print("\n\nInterrupted by user")
        sys.exit(130)
    except ConfigError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        sys.exit(EXIT_CONFIG_ERROR)
    except (DomainError, SolverError, ContractError) as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(EXIT_NUMERIC_ERROR)
    except Exception as e:
        print(f"Error: {e}")
        import traceback

        traceback.print_exc()
        sys.exit(1)


if __name__ == "__main__":
    main()
