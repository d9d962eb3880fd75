#!/usr/bin/env python3
"""
Run configuration generator for the Impact Resonance Toolkit.
This script writes preset run configurations as JSON files and shows the
IMPACTRES_* settings currently in effect.
"""

import os
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from impact_resonance import presets  # noqa: E402
from vibroimpact.exceptions import ConfigError  # noqa: E402
from vibroimpact.serializers import parse_config, save_config  # noqa: E402

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

ENV_VARS = {
    "IMPACTRES_LOG": "warn",
    "IMPACTRES_JOBS": "1",
    "IMPACTRES_OUT": "results",
    "IMPACTRES_TAU_GRID": "256",
    "IMPACTRES_QUAD_NODES": "64",
    "IMPACTRES_METHOD": "DOP853",
    "IMPACTRES_MAX_SILENT": "50",
}


def print_available_presets():
    """Print all available presets."""
    print("\n📋 AVAILABLE PRESETS:")
    print("=" * 50)
    for name in presets.get_preset_names():
        info = presets.get_preset_info(name)
        print(f"\n🔹 {name}: {info['description']}")
        data = presets.get_preset(name)
        osc, forcing = data["oscillator"], data["forcing"]
        print(
            f"   Ω={osc['big_omega']} Δ={osc['delta']} γ={osc['gamma']} "
            f"ε={osc['epsilon']} ν={forcing['nu']} ({forcing['kind']})"
        )


def print_current_settings():
    """Print the IMPACTRES_* environment settings."""
    print("\n🔍 CURRENT SETTINGS:")
    print("=" * 50)
    for env_var, default in ENV_VARS.items():
        value = os.getenv(env_var)
        shown = value if value is not None else f"{default} (default)"
        print(f"   {env_var}: {shown}")


def write_preset(preset_name, path=None):
    """Validate a preset and write it as a JSON configuration."""
    try:
        run = parse_config(presets.get_preset(preset_name))
    except KeyError as e:
        print(f"❌ Error: {e.args[0]}")
        return False
    except ConfigError as e:
        print(f"❌ Error: preset '{preset_name}' is invalid: {e}")
        return False

    target = Path(path) if path else CONFIG_DIR / f"{preset_name}.json"
    target.parent.mkdir(parents=True, exist_ok=True)
    save_config(run, target)
    print(f"✅ Wrote {preset_name} to {target}")
    return True


def write_all_presets():
    """Write every preset into the configs directory."""
    results = [write_preset(name) for name in presets.get_preset_names()]
    return all(results)


def create_env_template():
    """Create a template .env file with every setting and its default."""
    env_file = Path(".env.template")

    lines = [
        "# Impact Resonance Toolkit settings",
        "# Copy this file to .env and modify as needed",
        "",
    ]
    lines.extend(f"{name}={default}" for name, default in ENV_VARS.items())

    env_file.write_text("\n".join(lines) + "\n")
    print("✅ Created .env.template file")


def print_usage():
    print("\n📖 USAGE:")
    print("   python scripts/make_config.py [command] [path]")
    print("\n🔧 COMMANDS:")
    print("   list          - Show available presets")
    print("   current       - Show current IMPACTRES_* settings")
    print("   all           - Write every preset into configs/")
    print("   <preset>      - Write one preset, optionally to [path]")
    print("   template      - Create .env template file")
    print("   help          - Show this help message")


def main():
    """Main function."""
    print("⚙️  Run Configuration Generator")
    print("=" * 50)

    if len(sys.argv) < 2:
        print_usage()
        return 0

    command = sys.argv[1].lower()

    if command == "list":
        print_available_presets()
    elif command == "current":
        print_current_settings()
    elif command == "template":
        create_env_template()
    elif command == "all":
        return 0 if write_all_presets() else 1
    elif command == "help":
        print_usage()
    elif command in presets.get_preset_names():
        path = sys.argv[2] if len(sys.argv) > 2 else None
        return 0 if write_preset(command, path) else 1
    else:
        print(f"❌ Unknown command: {command}")
        print("Use 'python scripts/make_config.py help' for usage information")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
