"""
Conservative impact motion and its periodic Green's function.

The unforced oscillator with an elastic limiter at x = Δ moves periodically
once its energy is large enough to reach the limiter. Writing that motion as
x = -J κ(ψ, J), with impulse J = 2ẋ₋ and a phase ψ that advances by 2π per
impact period, everything downstream needs only:

    ω₀(J)          impact-mode frequency, with Ω₀ = Ω/ω₀ ∈ (0, 1)
    κ(ψ, J)        (1/2Ω) cos(Ω₀(ψ̃ - π)) / sin(πΩ₀),  ψ̃ = ψ mod 2π
    κ_ψ(ψ, J)      -(1/2ω₀) sin(Ω₀(ψ̃ - π)) / sin(πΩ₀), jumps by 1/ω₀ at ψ̃ = 0
    κ_J, κ_ψJ      J-derivatives at fixed ψ, through Ω₀(J)

Closed forms are used for evaluation; the Fourier series are kept as
cross-checks only.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from impact_resonance import settings

from .exceptions import (
    DegenerateError,
    DomainError,
    InconsistentStateError,
    JumpPointError,
    NonImpactingError,
)
from .model import OscillatorConfig

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

ArrayLike = Union[float, np.ndarray]


def _scalar_or_array(value: np.ndarray) -> ArrayLike:
    if np.ndim(value) == 0:
        return float(value)
    return value


def _validate_impulse(j_val: ArrayLike, config: OscillatorConfig) -> np.ndarray:
    j_arr = np.asarray(j_val, dtype=float)
    if np.any(~np.isfinite(j_arr)):
        raise DomainError(f"impulse must be finite, got {j_val}")
    if np.any(j_arr < 0):
        raise DomainError(f"impulse must be >= 0, got {j_val}")
    if config.delta < 0 and np.any(j_arr == 0):
        raise DomainError("impulse J=0 with delta < 0: impact frequency is unbounded")
    return j_arr


def omega0(j_val: ArrayLike, config: OscillatorConfig) -> ArrayLike:
    """
    Frequency of the conservative impacting motion with impulse J.

    Args:
        j_val: impulse J, scalar or array
        config: oscillator parameters

    Returns:
        ω₀(J); Ω < ω₀ < 2Ω for Δ > 0, ω₀ > 2Ω for Δ < 0, ω₀ = 2Ω for Δ = 0

    Raises:
        DomainError: If J < 0, or J = 0 with Δ < 0
    """
    j_arr = _validate_impulse(j_val, config)
    big_omega, delta = config.big_omega, config.delta
    if delta == 0:
        return _scalar_or_array(np.full(j_arr.shape, 2.0 * big_omega))
    u = j_arr / (2.0 * big_omega * delta)
    if delta > 0:
        result = math.pi * big_omega / (math.pi - np.arctan(u))
    else:
        result = -math.pi * big_omega / np.arctan(u)
    return _scalar_or_array(result)


def frequency_band(config: OscillatorConfig) -> Tuple[float, float]:
    """Open interval of impact frequencies reachable for the sign of Δ."""
    big_omega = config.big_omega
    if config.delta > 0:
        return big_omega, 2.0 * big_omega
    if config.delta < 0:
        return 2.0 * big_omega, math.inf
    return 2.0 * big_omega, 2.0 * big_omega


def impulse_of_frequency(omega0_val: float, config: OscillatorConfig) -> float:
    """
    Impulse whose conservative impact motion has frequency ω₀.

    Args:
        omega0_val: impact frequency strictly inside frequency_band(config)
        config: oscillator parameters

    Returns:
        J = -2ΩΔ tan(πΩ/ω₀) ≥ 0

    Raises:
        DegenerateError: If Δ = 0 (every impulse has ω₀ = 2Ω)
        DomainError: If ω₀ lies outside the admissible band
    """
    if config.delta == 0:
        raise DegenerateError("delta = 0: impact frequency does not depend on J")
    low, high = frequency_band(config)
    if not (low < omega0_val < high):
        raise DomainError(
            f"omega0={omega0_val} outside admissible band ({low}, {high}) "
            f"for delta={config.delta}"
        )
    big_omega = config.big_omega
    j_val = -2.0 * big_omega * config.delta * math.tan(math.pi * big_omega / omega0_val)
    return max(j_val, 0.0)


def omega0_prime(j_val: ArrayLike, config: OscillatorConfig) -> ArrayLike:
    """
    Derivative dω₀/dJ; its sign is the sign of Δ.

    Raises:
        DegenerateError: If Δ = 0
        DomainError: As for omega0
    """
    if config.delta == 0:
        raise DegenerateError("delta = 0: omega0 is constant, derivative vanishes")
    j_arr = _validate_impulse(j_val, config)
    big_omega, delta = config.big_omega, config.delta
    u = j_arr / (2.0 * big_omega * delta)
    if delta > 0:
        angle = math.pi - np.arctan(u)
    else:
        angle = np.arctan(u)
    result = math.pi * big_omega / (angle**2 * (1.0 + u**2) * 2.0 * big_omega * delta)
    return _scalar_or_array(result)


def reduce_phase(psi: ArrayLike) -> np.ndarray:
    """ψ mod 2π, with a guard band around the jump folded onto 0."""
    psi_tilde = np.mod(np.asarray(psi, dtype=float), TWO_PI)
    guard = settings.JUMP_GUARD
    return np.where((psi_tilde < guard) | (psi_tilde > TWO_PI - guard), 0.0, psi_tilde)


@dataclass(frozen=True)
class GreensKernel:
    """
    Green's function of the impact motion at a fixed impulse.

    Build with GreensKernel.from_impulse; the methods take reduced phases
    ψ̃ ∈ [0, 2π) and are vectorized over numpy arrays. Derivative methods are
    evaluated on the open interval and extend continuously to its ends.
    """

    config: OscillatorConfig
    j_val: float
    omega0: float
    omega0_cap: float
    period: float
    cap_rate: float  # dΩ₀/dJ

    @classmethod
    def from_impulse(cls, j_val: float, config: OscillatorConfig) -> "GreensKernel":
        freq = float(omega0(j_val, config))
        if config.delta == 0:
            cap_rate = 0.0
        else:
            cap_rate = -config.big_omega * float(omega0_prime(j_val, config)) / freq**2
        return cls(
            config=config,
            j_val=float(j_val),
            omega0=freq,
            omega0_cap=config.big_omega / freq,
            period=TWO_PI / freq,
            cap_rate=cap_rate,
        )

    @property
    def sin_half(self) -> float:
        return math.sin(math.pi * self.omega0_cap)

    @property
    def cos_half(self) -> float:
        return math.cos(math.pi * self.omega0_cap)

    def kappa(self, psi_tilde: np.ndarray) -> np.ndarray:
        shifted = self.omega0_cap * (psi_tilde - math.pi)
        return np.cos(shifted) / (2.0 * self.config.big_omega * self.sin_half)

    def kappa_psi(self, psi_tilde: np.ndarray) -> np.ndarray:
        shifted = self.omega0_cap * (psi_tilde - math.pi)
        return -np.sin(shifted) / (2.0 * self.omega0 * self.sin_half)

    def kappa_cap(self, psi_tilde: np.ndarray) -> np.ndarray:
        """∂κ/∂Ω₀ at fixed ψ."""
        s = psi_tilde - math.pi
        cap, sin_h, cos_h = self.omega0_cap, self.sin_half, self.cos_half
        return (
            -s * np.sin(cap * s) / sin_h - math.pi * np.cos(cap * s) * cos_h / sin_h**2
        ) / (2.0 * self.config.big_omega)

    def kappa_psi_cap(self, psi_tilde: np.ndarray) -> np.ndarray:
        """∂κ_ψ/∂Ω₀ at fixed ψ."""
        s = psi_tilde - math.pi
        cap, sin_h, cos_h = self.omega0_cap, self.sin_half, self.cos_half
        return -(
            np.sin(cap * s) / sin_h
            + cap * s * np.cos(cap * s) / sin_h
            - cap * math.pi * np.sin(cap * s) * cos_h / sin_h**2
        ) / (2.0 * self.config.big_omega)

    def kappa_j(self, psi_tilde: np.ndarray) -> np.ndarray:
        if self.cap_rate == 0.0:
            return np.zeros_like(np.asarray(psi_tilde, dtype=float))
        return self.kappa_cap(psi_tilde) * self.cap_rate

    def kappa_psi_j(self, psi_tilde: np.ndarray) -> np.ndarray:
        if self.cap_rate == 0.0:
            return np.zeros_like(np.asarray(psi_tilde, dtype=float))
        return self.kappa_psi_cap(psi_tilde) * self.cap_rate

    def mean_kappa_psi_sq(self, exact: bool = True) -> float:
        leading = 1.0 / (8.0 * self.omega0**2 * self.sin_half**2)
        if not exact:
            return leading
        two_pi_cap = TWO_PI * self.omega0_cap
        return leading * (1.0 - math.sin(two_pi_cap) / two_pi_cap)


def _sided_kappa_psi(
    psi_tilde: np.ndarray, kernel: GreensKernel, side: Optional[str]
) -> np.ndarray:
    at_jump = psi_tilde == 0.0
    values = kernel.kappa_psi(psi_tilde)
    if not np.any(at_jump):
        return values
    if side not in ("+", "-"):
        raise JumpPointError(
            "kappa_psi is discontinuous at psi = 0 mod 2pi; pass side='+' or side='-'"
        )
    limit = 1.0 / (2.0 * kernel.omega0)
    return np.where(at_jump, limit if side == "+" else -limit, values)


def kappa(psi: ArrayLike, j_val: float, config: OscillatorConfig) -> ArrayLike:
    """
    Periodic Green's function κ(ψ, J).

    Args:
        psi: phase, any real; reduced mod 2π
        j_val: impulse
        config: oscillator parameters

    Returns:
        κ evaluated in closed form; ψ̃ = 0 gives the impact value -Δ/J
    """
    kernel = GreensKernel.from_impulse(j_val, config)
    return _scalar_or_array(kernel.kappa(reduce_phase(psi)))


def kappa_psi(
    psi: ArrayLike, j_val: float, config: OscillatorConfig, side: Optional[str] = None
) -> ArrayLike:
    """
    Phase derivative κ_ψ(ψ, J).

    Args:
        psi: phase, any real; reduced mod 2π
        j_val: impulse
        config: oscillator parameters
        side: '+' or '-' to take the one-sided limit at ψ̃ = 0

    Returns:
        κ_ψ; at the jump, +1/(2ω₀) from the right and -1/(2ω₀) from the left

    Raises:
        JumpPointError: If ψ̃ = 0 and no side was given
    """
    kernel = GreensKernel.from_impulse(j_val, config)
    psi_tilde = reduce_phase(psi)
    return _scalar_or_array(_sided_kappa_psi(psi_tilde, kernel, side))


def kappa_j(psi: ArrayLike, j_val: float, config: OscillatorConfig) -> ArrayLike:
    """∂κ/∂J at fixed ψ; identically zero when Δ = 0."""
    kernel = GreensKernel.from_impulse(j_val, config)
    return _scalar_or_array(kernel.kappa_j(reduce_phase(psi)))


def kappa_psi_j(psi: ArrayLike, j_val: float, config: OscillatorConfig) -> ArrayLike:
    """∂κ_ψ/∂J at fixed ψ (right-hand value at ψ̃ = 0)."""
    kernel = GreensKernel.from_impulse(j_val, config)
    return _scalar_or_array(kernel.kappa_psi_j(reduce_phase(psi)))


def mean_kappa_psi_sq(
    j_val: float, config: OscillatorConfig, exact: bool = True
) -> float:
    """
    Period mean of κ_ψ².

    Args:
        j_val: impulse
        config: oscillator parameters
        exact: If False, return the leading form 1/(8ω₀² sin²(πΩ₀)), which is
            exact only when sin(2πΩ₀) = 0 (Δ = 0)

    Returns:
        (1/(8ω₀² sin²(πΩ₀))) (1 - sin(2πΩ₀)/(2πΩ₀)) when exact
    """
    return GreensKernel.from_impulse(j_val, config).mean_kappa_psi_sq(exact=exact)


def action_of_state(x: float, v: float, config: OscillatorConfig) -> float:
    """
    Impulse of the conservative orbit through (x, v).

    Args:
        x: position, at most Δ
        v: velocity
        config: oscillator parameters

    Returns:
        J = 2 sqrt(v² + Ω²x² - Ω²Δ²)

    Raises:
        DomainError: If the state lies beyond the limiter
        NonImpactingError: If the free orbit never reaches the limiter
    """
    if x > config.delta + settings.STATE_TOLERANCE:
        raise DomainError(f"state x={x} lies beyond the limiter delta={config.delta}")
    big_omega = config.big_omega
    energy = v * v + big_omega**2 * (x * x - config.delta**2)
    if energy <= 0:
        raise NonImpactingError(
            f"state (x={x}, v={v}) has energy {energy:.3e} <= 0: "
            f"orbit misses the limiter"
        )
    return 2.0 * math.sqrt(energy)


def phase_of_state(x: float, v: float, j_val: float, config: OscillatorConfig) -> float:
    """
    Phase ψ ∈ [0, 2π) of a state on the orbit with impulse J.

    Raises:
        DomainError: If J <= 0
        InconsistentStateError: If (x, v) is not on that orbit to 1e-8
    """
    if j_val <= 0:
        raise DomainError(f"phase requires a positive impulse, got {j_val}")
    kernel = GreensKernel.from_impulse(j_val, config)
    sin_h = kernel.sin_half
    angle = math.atan2(
        2.0 * v * sin_h / j_val, -2.0 * config.big_omega * x * sin_h / j_val
    )
    psi = float(reduce_phase(math.pi + angle / kernel.omega0_cap))

    psi_arr = np.asarray(psi)
    side = "+" if v <= 0 else "-"
    x_model = -j_val * float(kernel.kappa(psi_arr))
    v_model = -j_val * kernel.omega0 * float(_sided_kappa_psi(psi_arr, kernel, side))
    residual = max(abs(x - x_model), abs(v - v_model))
    tolerance = settings.STATE_TOLERANCE * max(1.0, j_val)
    if residual > tolerance:
        raise InconsistentStateError(
            f"state (x={x}, v={v}) is off the J={j_val} orbit by {residual:.3e}"
        )
    return psi


def kappa_fourier(
    psi: ArrayLike, j_val: float, config: OscillatorConfig, terms: int = 10_000
) -> ArrayLike:
    """Partial Fourier sum of κ with the given number of harmonics."""
    kernel = GreensKernel.from_impulse(j_val, config)
    cap_sq = kernel.omega0_cap**2
    psi_arr = np.atleast_1d(np.asarray(psi, dtype=float))
    k = np.arange(1, terms + 1, dtype=float)
    series = np.cos(np.outer(psi_arr, k)) @ (1.0 / (cap_sq - k**2))
    result = (1.0 / (2.0 * math.pi * cap_sq) + series / math.pi) / kernel.omega0
    return _scalar_or_array(result.reshape(np.shape(psi)))


def kappa_psi_fejer(
    psi: ArrayLike, j_val: float, config: OscillatorConfig, terms: int = 10_000
) -> ArrayLike:
    """Fejér (Cesàro) mean of the Fourier series of κ_ψ."""
    kernel = GreensKernel.from_impulse(j_val, config)
    cap_sq = kernel.omega0_cap**2
    psi_arr = np.atleast_1d(np.asarray(psi, dtype=float))
    k = np.arange(1, terms + 1, dtype=float)
    weights = (1.0 - k / (terms + 1)) * (-k / (cap_sq - k**2))
    series = np.sin(np.outer(psi_arr, k)) @ weights
    result = series / (math.pi * kernel.omega0)
    return _scalar_or_array(result.reshape(np.shape(psi)))
