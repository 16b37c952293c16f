"""Entry point for the analog matching simulator."""

from analog_matching.cli import main

if __name__ == "__main__":
    main()
