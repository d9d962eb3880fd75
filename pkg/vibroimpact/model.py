"""
Physical parameters and biharmonic forcing.

Holds the oscillator configuration, the two forcing variants and the
envelope form of the close-frequency excitation,

    a1 sin(νt) + a2 sin(νt + Γτ) = E(τ) sin(νt + β(τ)).

Slow time τ is always passed explicitly; callers derive it as τ = εt.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Tuple, Union

import numpy as np

from impact_resonance import settings

from .exceptions import DomainError, VariantError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


def _require_finite(name: str, value: float):
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value}")


@dataclass(frozen=True)
class OscillatorConfig:
    """
    Linear oscillator with a rigid limiter at x = Δ.

    Attributes:
        big_omega: natural frequency Ω > 0
        delta: limiter position Δ, either sign
        gamma: viscous damping γ ≥ 0
        epsilon: perturbation scale ε ≥ 0 (0 gives the conservative system)
    """

    big_omega: float
    delta: float
    gamma: float
    epsilon: float

    def __post_init__(self):
        for name in ("big_omega", "delta", "gamma", "epsilon"):
            _require_finite(name, getattr(self, name))
        if self.big_omega <= 0:
            raise DomainError(f"big_omega must be > 0, got {self.big_omega}")
        if self.gamma < 0:
            raise DomainError(f"gamma must be >= 0, got {self.gamma}")
        if self.epsilon < 0:
            raise DomainError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.epsilon > settings.EPSILON_SOFT_MAX:
            logger.warning(
                f"epsilon={self.epsilon} exceeds {settings.EPSILON_SOFT_MAX}; "
                f"averaging predictions may be inaccurate"
            )


@dataclass(frozen=True)
class CloseFrequencies:
    """Two forcing harmonics at ν and ν + εΓ, producing a slow beat."""

    a1: float
    a2: float
    nu: float
    big_gamma: float

    def __post_init__(self):
        for name in ("a1", "a2", "nu", "big_gamma"):
            _require_finite(name, getattr(self, name))
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.a1 == self.a2:
            raise DomainError(
                f"a1 and a2 must differ (got {self.a1}); the envelope would vanish"
            )

    @property
    def slow_period(self) -> float:
        return 2.0 * math.pi / self.big_gamma


@dataclass(frozen=True)
class DistinctFrequencies:
    """A fast harmonic A sin(νt + θ) plus a slow one B sin(Γτ)."""

    amp_a: float
    amp_b: float
    nu: float
    big_gamma: float
    theta: float = 0.0

    def __post_init__(self):
        for name in ("amp_a", "amp_b", "nu", "big_gamma", "theta"):
            _require_finite(name, getattr(self, name))
        for name in ("nu", "big_gamma"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be > 0, got {getattr(self, name)}")

    @property
    def slow_period(self) -> float:
        return 2.0 * math.pi / self.big_gamma


ForcingSpec = Union[CloseFrequencies, DistinctFrequencies]


@dataclass(frozen=True)
class Envelope:
    """Beat amplitude E(τ) and phase β(τ) ∈ [0, 2π)."""

    e_val: ArrayLike
    beta_val: ArrayLike


def envelope(forcing: ForcingSpec, tau: ArrayLike) -> Envelope:
    """
    Envelope of the close-frequency forcing at slow time tau.

    Args:
        forcing: CloseFrequencies forcing
        tau: slow time, scalar or array

    Returns:
        Envelope with E(τ) and β(τ) reduced to [0, 2π)

    Raises:
        VariantError: If forcing is not CloseFrequencies
    """
    if not isinstance(forcing, CloseFrequencies):
        raise VariantError(
            f"envelope requires CloseFrequencies forcing, got {type(forcing).__name__}"
        )
    phase = forcing.big_gamma * np.asarray(tau, dtype=float)
    cos_part = forcing.a1 + forcing.a2 * np.cos(phase)
    sin_part = forcing.a2 * np.sin(phase)
    e_val = np.hypot(cos_part, sin_part)
    beta_val = np.mod(np.arctan2(sin_part, cos_part), 2.0 * math.pi)
    if np.ndim(e_val) == 0:
        return Envelope(float(e_val), float(beta_val))
    return Envelope(e_val, beta_val)


def resonant_amplitude_phase(
    forcing: ForcingSpec, tau: ArrayLike
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Amplitude and phase of the fast harmonic, with the phase lifted continuously.

    For CloseFrequencies this is (E(τ), β(τ)) with β unwrapped in τ: it stays
    bounded when a1 > a2 and winds once per beat period when a2 > a1. For
    DistinctFrequencies it is the constant pair (A, θ).

    Args:
        forcing: Either forcing variant
        tau: slow time, scalar or array

    Returns:
        Tuple of arrays (amplitude, lifted phase) broadcast to tau's shape
    """
    tau = np.asarray(tau, dtype=float)
    if isinstance(forcing, DistinctFrequencies):
        return (
            np.full(tau.shape, float(forcing.amp_a)),
            np.full(tau.shape, float(forcing.theta)),
        )
    if not isinstance(forcing, CloseFrequencies):
        raise VariantError(f"Unknown forcing variant {type(forcing).__name__}")

    phase = forcing.big_gamma * tau
    amplitude = np.hypot(
        forcing.a1 + forcing.a2 * np.cos(phase), forcing.a2 * np.sin(phase)
    )
    if forcing.a1 > forcing.a2:
        beta = np.arctan2(
            forcing.a2 * np.sin(phase), forcing.a1 + forcing.a2 * np.cos(phase)
        )
    else:
        beta = phase + np.arctan2(
            -forcing.a1 * np.sin(phase), forcing.a2 + forcing.a1 * np.cos(phase)
        )
    return amplitude, beta


def force(forcing: ForcingSpec, t: ArrayLike, tau: ArrayLike) -> ArrayLike:
    """
    Evaluate the forcing f(t, τ).

    Args:
        forcing: Either forcing variant
        t: fast time
        tau: slow time

    Returns:
        Force value with numpy broadcasting over t and tau
    """
    t = np.asarray(t, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if isinstance(forcing, CloseFrequencies):
        value = forcing.a1 * np.sin(forcing.nu * t) + forcing.a2 * np.sin(
            forcing.nu * t + forcing.big_gamma * tau
        )
    elif isinstance(forcing, DistinctFrequencies):
        value = forcing.amp_a * np.sin(
            forcing.nu * t + forcing.theta
        ) + forcing.amp_b * np.sin(forcing.big_gamma * tau)
    else:
        raise VariantError(f"Unknown forcing variant {type(forcing).__name__}")
    if np.ndim(value) == 0:
        return float(value)
    return value


def scalar_force(forcing: ForcingSpec) -> Callable[[float, float], float]:
    """Scalar f(t, τ) built on the math module, for use inside ODE right-hand sides."""
    sin = math.sin
    if isinstance(forcing, CloseFrequencies):
        a1, a2, nu, big_gamma = forcing.a1, forcing.a2, forcing.nu, forcing.big_gamma

        def close(t: float, tau: float) -> float:
            return a1 * sin(nu * t) + a2 * sin(nu * t + big_gamma * tau)

        return close

    if isinstance(forcing, DistinctFrequencies):
        amp_a, amp_b = forcing.amp_a, forcing.amp_b
        nu, big_gamma, theta = forcing.nu, forcing.big_gamma, forcing.theta

        def distinct(t: float, tau: float) -> float:
            return amp_a * sin(nu * t + theta) + amp_b * sin(big_gamma * tau)

        return distinct

    raise VariantError(f"Unknown forcing variant {type(forcing).__name__}")
