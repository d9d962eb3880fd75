#!/usr/bin/env python3
"""Command-line utility for impact resonance analysis and simulation."""
import sys


def main():
    """Run a toolkit subcommand."""
    try:
        from vibroimpact.cli import main as run_command
    except ImportError as exc:
        raise ImportError(
            "Couldn't import the toolkit's dependencies. Are numpy, scipy and "
            "python-dotenv installed and available on your PYTHONPATH? Did you "
            "forget to activate a virtual environment?"
        ) from exc
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
