"""Project-level settings, presets and execution helpers for the toolkit."""
