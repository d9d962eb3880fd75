"""
Impact oscillator resonance toolkit.

Averaged-field analysis and event-driven simulation of a weakly damped,
weakly forced linear oscillator with a rigid one-sided limiter.
"""

__version__ = "1.0.0"
