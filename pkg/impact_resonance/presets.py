"""
Parameter presets for the impact oscillator.

Each preset is a complete run configuration in the JSON shape accepted by
`vibroimpact.serializers`. The canonical preset is also the source of the
defaults used when a configuration omits a section.
"""

import copy
import math
from typing import Any, Dict, List

from impact_resonance import settings

CANONICAL = {
    "oscillator": {"big_omega": 1.0, "delta": 1.0, "gamma": 0.1, "epsilon": 0.005},
    "forcing": {
        "kind": "close",
        "a1": 1.0,
        "a2": 0.5,
        "nu": 1.5,
        "big_gamma": 1.0,
    },
    "resonance": {"q": 1, "p": 1, "n_max": 6, "damping_average": "exact"},
    "simulation": {
        "horizon": None,
        "max_impacts": 2000,
        "initial": {"mode": "branch", "branch": "stable", "phase_offset": 0.0},
        "rtol": 1e-10,
        "atol": 1e-12,
        "graze_tol": 1e-8,
        "warmup": 0.2,
        "lock_threshold": 0.15,
    },
    "output": {"dir": settings.OUTPUT_DIR, "samples_stride": 0},
}

PRESETS = {
    "canonical": CANONICAL,
    # Second-harmonic resonance, ν = 2 ω₀(J)
    "second_harmonic": {
        "oscillator": {"big_omega": 1.0, "delta": 1.0, "gamma": 0.05, "epsilon": 0.005},
        "forcing": {"kind": "close", "a1": 1.0, "a2": 0.5, "nu": 3.0, "big_gamma": 1.0},
        "resonance": {"q": 1, "p": 2, "n_max": 6, "damping_average": "exact"},
    },
    "distinct": {
        "forcing": {
            "kind": "distinct",
            "amp_a": 1.5,
            "amp_b": 1.0,
            "nu": 1.5,
            "big_gamma": 1.0,
            "theta": 0.3,
        },
    },
    # Limiter on the far side of the equilibrium; ν = 4 resonates at J = 2
    "negative_limiter": {
        "oscillator": {"big_omega": 1.0, "delta": -1.0, "gamma": 0.1, "epsilon": 0.005},
        "forcing": {"kind": "close", "a1": 1.0, "a2": 0.5, "nu": 4.0, "big_gamma": 1.0},
    },
    "conservative_positive": {
        "oscillator": {"big_omega": 1.0, "delta": 1.0, "gamma": 0.1, "epsilon": 0.0},
        "simulation": {
            "max_impacts": 20,
            "initial": {"mode": "state", "t": 0.0, "x": 1.0, "v": -math.sqrt(3.0)},
        },
    },
    "conservative_negative": {
        "oscillator": {"big_omega": 1.0, "delta": -1.0, "gamma": 0.1, "epsilon": 0.0},
        "forcing": {"kind": "close", "a1": 1.0, "a2": 0.5, "nu": 4.0, "big_gamma": 1.0},
        "simulation": {
            "max_impacts": 20,
            "initial": {"mode": "state", "t": 0.0, "x": -1.0, "v": -1.0},
        },
    },
    "conservative_zero": {
        "oscillator": {"big_omega": 1.0, "delta": 0.0, "gamma": 0.1, "epsilon": 0.0},
        "simulation": {
            "max_impacts": 20,
            "initial": {"mode": "state", "t": 0.0, "x": 0.0, "v": -1.0},
        },
    },
}

PRESET_METADATA = {
    "canonical": {
        "description": "Close frequencies, first-order resonance at J = 2√3",
        "resonance_order": 1,
    },
    "second_harmonic": {
        "description": "Close frequencies, ν = 2ω₀ at J = 2√3",
        "resonance_order": 2,
    },
    "distinct": {
        "description": "Distinct frequencies with a constant resonant amplitude",
        "resonance_order": 1,
    },
    "negative_limiter": {
        "description": "Limiter at Δ = -1, where the frequency falls with J",
        "resonance_order": 1,
    },
    "conservative_positive": {
        "description": "ε = 0, Δ = 1: exact impact period 2π/ω₀",
        "resonance_order": None,
    },
    "conservative_negative": {
        "description": "ε = 0, Δ = -1: exact impact period 2π/ω₀",
        "resonance_order": None,
    },
    "conservative_zero": {
        "description": "ε = 0, Δ = 0: half-period bouncing",
        "resonance_order": None,
    },
}


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            # keys of `initial` depend on its mode, keys of `forcing` on its kind
            if key == "initial" or (
                key == "forcing" and value.get("kind") != merged[key].get("kind")
            ):
                merged[key] = copy.deepcopy(value)
            else:
                merged[key] = _merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def get_preset_names() -> List[str]:
    """Get the names of all available presets."""
    return list(PRESETS.keys())


def get_preset(name: str) -> Dict[str, Any]:
    """
    Get a complete run configuration for a preset.

    Args:
        name: Preset name, see get_preset_names()

    Returns:
        A fresh dictionary; callers may mutate it freely

    Raises:
        KeyError: If the preset does not exist
    """
    if name not in PRESETS:
        raise KeyError(
            f"Unknown preset '{name}'. Available: {', '.join(get_preset_names())}"
        )
    return _merge(CANONICAL, PRESETS[name])


def get_default_section(section: str) -> Dict[str, Any]:
    """Get the canonical defaults for one top-level configuration section."""
    return copy.deepcopy(CANONICAL[section])


def get_preset_info(name: str) -> Dict[str, Any]:
    """Get descriptive metadata for a preset."""
    return PRESET_METADATA.get(
        name, {"description": "Unknown preset", "resonance_order": None}
    )
