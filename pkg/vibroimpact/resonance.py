"""
Resonances, the averaged field and stability of locked phases.

Near an impulse J_pq with ω₀(J_pq) = (q/p)ν the slow drift of the impulse
is governed by the averaged field

    f0(η, τ) = C(τ) cos(nη - β(τ)) + D,
    C(τ) = 2E(τ)ν² / (πn(Ω² - ν²)),   D = -4γ J ω₀² ⟨κ_ψ²⟩,

which only couples to the forcing when q = 1, p = n. Its zeros η₀(τ) are
the candidate locked phases. A branch with ω₀'·f0_η > 0 everywhere is
unstable; a branch with ω₀'·f0_η < 0 everywhere is stable or unstable by
the sign of the mean of b + e, the first-order trace of the averaged flow.

All averages are taken over the common period 2πp/ν of the forcing and the
kernel, with Gauss-Legendre quadrature split at the jumps of κ_ψ.
"""

import functools
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Optional, Tuple, Union

import numpy as np

from impact_resonance import settings

from .exceptions import (
    DegenerateResonance,
    DomainError,
    NoResonance,
    NoUniformBranch,
    NumericalError,
)
from .green import TWO_PI, GreensKernel, frequency_band, impulse_of_frequency
from .green import omega0 as impact_frequency
from .green import omega0_prime as impact_frequency_slope
from .model import ForcingSpec, OscillatorConfig, force, resonant_amplitude_phase

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

CLASSIFY_TOLERANCE = 1e-8


class Stability(str, Enum):
    """Stability label of an equilibrium branch."""

    UNSTABLE_THM1 = "UnstableThm1"
    STABLE_THM2 = "StableThm2"
    UNSTABLE_THM2 = "UnstableThm2"
    INDETERMINATE = "Indeterminate"


class DampingAverage(str, Enum):
    """How the period mean of κ_ψ² enters the averaged damping."""

    EXACT = "exact"
    LEADING = "leading"


@dataclass(frozen=True)
class ResonancePoint:
    """Impulse J_pq at which the impact frequency equals (q/p)ν."""

    p: int
    q: int
    nu: float
    j_pq: float
    omega0_prime: float
    mu: float
    config: OscillatorConfig

    @property
    def phase_rate(self) -> float:
        """Rate (q/p)ν of the resonance-frame phase."""
        return self.q * self.nu / self.p

    @property
    def window(self) -> float:
        """Common period 2πp/ν of forcing and kernel."""
        return TWO_PI * self.p / self.nu


def find_resonance(
    config: OscillatorConfig, nu: float, q: int, p: int
) -> ResonancePoint:
    """
    Locate the resonant impulse for the frequency ratio q/p.

    Args:
        config: oscillator parameters
        nu: forcing frequency ν
        q: impact periods per window
        p: forcing periods per window, coprime with q

    Returns:
        ResonancePoint with J_pq and ω₀'(J_pq)

    Raises:
        DomainError: If p, q are not coprime positive integers or ν <= 0
        NoResonance: If (q/p)ν lies outside the admissible frequency band
        DegenerateResonance: If Δ = 0 and (q/p)ν = 2Ω
    """
    if p < 1 or q < 1 or math.gcd(p, q) != 1:
        raise DomainError(f"p={p}, q={q} must be coprime positive integers")
    if not nu > 0:
        raise DomainError(f"forcing frequency must be > 0, got {nu}")

    target = q * nu / p
    low, high = frequency_band(config)
    if config.delta == 0:
        if math.isclose(target, 2.0 * config.big_omega, rel_tol=1e-12):
            raise DegenerateResonance(
                "delta = 0: every impulse resonates at omega0 = 2*Omega"
            )
        raise NoResonance(
            f"delta = 0: target frequency {target} differs from "
            f"{2.0 * config.big_omega}"
        )
    if not (low < target < high):
        raise NoResonance(
            f"target frequency (q/p)nu = {target} outside band ({low}, {high})"
        )

    j_pq = impulse_of_frequency(target, config)
    slope = float(impact_frequency_slope(j_pq, config))
    logger.debug(f"Resonance {q}:{p} at J={j_pq:.9g}, omega0'={slope:.9g}")
    return ResonancePoint(
        p=p,
        q=q,
        nu=nu,
        j_pq=j_pq,
        omega0_prime=slope,
        mu=math.sqrt(config.epsilon),
        config=config,
    )


@dataclass(frozen=True)
class AveragedField:
    """
    Averaged slow dynamics around a resonance point.

    Attributes:
        rp: resonance point
        forcing: forcing whose frequency defines the resonance
        damping_average: exact period mean of κ_ψ² or its leading form
    """

    rp: ResonancePoint
    forcing: ForcingSpec
    damping_average: DampingAverage = DampingAverage.EXACT

    def __post_init__(self):
        if not math.isclose(self.forcing.nu, self.rp.nu, rel_tol=1e-12):
            raise DomainError(
                f"forcing frequency {self.forcing.nu} differs from the "
                f"resonance frequency {self.rp.nu}"
            )

    @property
    def config(self) -> OscillatorConfig:
        return self.rp.config

    @property
    def n(self) -> int:
        return self.rp.p

    @property
    def coupled(self) -> bool:
        """Forcing survives averaging only for q = 1."""
        return self.rp.q == 1

    @functools.cached_property
    def kernel(self) -> GreensKernel:
        return GreensKernel.from_impulse(self.rp.j_pq, self.config)

    @property
    def slow_period(self) -> float:
        return self.forcing.slow_period

    @functools.cached_property
    def coupling_scale(self) -> float:
        """C(τ)/E(τ); zero for uncoupled resonances."""
        if not self.coupled:
            return 0.0
        nu, n, big_omega = self.rp.nu, self.n, self.config.big_omega
        return 2.0 * nu**2 / (math.pi * n * (big_omega**2 - nu**2))

    @functools.cached_property
    def damping_mean(self) -> float:
        """Constant damping part D of f0."""
        exact = self.damping_average == DampingAverage.EXACT
        return (
            -4.0
            * self.config.gamma
            * self.rp.j_pq
            * self.kernel.omega0**2
            * self.kernel.mean_kappa_psi_sq(exact=exact)
        )

    def amplitude_phase(self, tau: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
        return resonant_amplitude_phase(self.forcing, tau)

    def coupling(self, tau: ArrayLike) -> np.ndarray:
        amplitude, _ = self.amplitude_phase(tau)
        return amplitude * self.coupling_scale


@dataclass(frozen=True, eq=False)
class EquilibriumBranch:
    """One zero η₀(τ) of the averaged field, sampled on a τ-grid."""

    l: int  # noqa: E741
    sign_branch: int
    tau: np.ndarray
    eta0: np.ndarray
    a_n: np.ndarray
    stability: Optional[Stability] = None

    @property
    def label(self) -> str:
        return "+" if self.sign_branch > 0 else "-"


@dataclass(frozen=True, eq=False)
class Coefficients:
    """Linearization of the averaged flow along one branch."""

    tau: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: float
    e: np.ndarray
    h: np.ndarray


def tau_grid(forcing: ForcingSpec, size: int = None) -> np.ndarray:
    """Uniform grid over one slow period [0, 2π/Γ)."""
    size = size or settings.TAU_GRID_SIZE
    return np.arange(size) * (forcing.slow_period / size)


def _as_output(value: np.ndarray) -> ArrayLike:
    if np.ndim(value) == 0:
        return float(value)
    return value


def f0(eta: ArrayLike, tau: ArrayLike, field: AveragedField) -> ArrayLike:
    """
    Closed-form averaged field.

    Args:
        eta: resonance-frame phase
        tau: slow time
        field: averaged field

    Returns:
        C(τ) cos(nη - β(τ)) + D, broadcast over eta and tau
    """
    amplitude, beta = field.amplitude_phase(tau)
    value = amplitude * field.coupling_scale * np.cos(
        field.n * np.asarray(eta, dtype=float) - beta
    ) + field.damping_mean
    return _as_output(value)


def a_n(tau: ArrayLike, field: AveragedField) -> ArrayLike:
    """
    Damping-to-forcing ratio A_n(τ) = -D / C(τ).

    Locked phases exist at τ only where |A_n(τ)| < 1. Uncoupled resonances
    return infinity.
    """
    coupling = field.coupling(tau)
    if not field.coupled:
        return _as_output(np.full(np.shape(coupling), math.inf))
    return _as_output(-field.damping_mean / coupling)


@functools.lru_cache(maxsize=8)
def _legendre(nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(nodes)


def _averaging_nodes(
    field: AveragedField, eta: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Quadrature over one common period, split at forcing periods and κ_ψ jumps.

    Returns:
        (t, psi_tilde, weights) with weights normalized to a mean
    """
    rp = field.rp
    window = rp.window
    rate = rp.phase_rate
    eta = float(np.mod(eta, TWO_PI))

    breaks = [k * TWO_PI / rp.nu for k in range(rp.p + 1)]
    m = 1
    while True:
        jump = (TWO_PI * m - eta) / rate
        if jump >= window:
            break
        if jump > 0:
            breaks.append(jump)
        m += 1
    breaks = np.unique(np.asarray(breaks))
    keep = np.concatenate(([True], np.diff(breaks) > 1e-13 * window))
    breaks = breaks[keep]
    breaks[-1] = window

    x, w = _legendre(settings.QUADRATURE_NODES)
    lo, hi = breaks[:-1], breaks[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    t = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel() / window
    psi_tilde = np.mod(eta + rate * t, TWO_PI)
    logger.debug(f"Averaging window split into {len(lo)} pieces at eta={eta:.6f}")
    return t, psi_tilde, weights


def _checked_mean(values: np.ndarray, weights: np.ndarray, what: str) -> float:
    mean = float(np.dot(values, weights))
    if not math.isfinite(mean):
        raise NumericalError(f"quadrature for {what} did not produce a finite value")
    return mean


def _bracket(field: AveragedField, eta: float, tau: float):
    t, psi_tilde, weights = _averaging_nodes(field, eta)
    kernel = field.kernel
    f_val = force(field.forcing, t, tau)
    k_psi = kernel.kappa_psi(psi_tilde)
    return t, psi_tilde, weights, f_val, k_psi


def f0_numeric(eta: float, tau: float, field: AveragedField) -> float:
    """
    Averaged field by direct quadrature of -4ω₀[f + γJω₀κ_ψ]κ_ψ.

    Raises:
        NumericalError: If the quadrature is not finite
    """
    _, _, weights, f_val, k_psi = _bracket(field, eta, tau)
    w0 = field.kernel.omega0
    drive = f_val + field.config.gamma * field.rp.j_pq * w0 * k_psi
    return _checked_mean(-4.0 * w0 * drive * k_psi, weights, "f0")


def f1_numeric(eta: float, tau: float, field: AveragedField) -> float:
    """J-derivative of the averaged bracket at the resonant impulse."""
    _, psi_tilde, weights, f_val, k_psi = _bracket(field, eta, tau)
    kernel = field.kernel
    w0, w0p = kernel.omega0, field.rp.omega0_prime
    j_val, gamma = field.rp.j_pq, field.config.gamma
    k_psi_j = kernel.kappa_psi_j(psi_tilde)
    integrand = -4.0 * (
        w0p * f_val * k_psi
        + w0 * f_val * k_psi_j
        + gamma * (w0**2 + 2.0 * j_val * w0 * w0p) * k_psi**2
        + 2.0 * gamma * j_val * w0**2 * k_psi * k_psi_j
    )
    return _checked_mean(integrand, weights, "f1")


def g0_numeric(eta: float, tau: float, field: AveragedField) -> float:
    """Averaged phase correction -(4ω₀/J)[f + γJω₀κ_ψ](-κ - Jκ_J)."""
    _, psi_tilde, weights, f_val, k_psi = _bracket(field, eta, tau)
    kernel = field.kernel
    w0, j_val = kernel.omega0, field.rp.j_pq
    drive = f_val + field.config.gamma * j_val * w0 * k_psi
    shape = -kernel.kappa(psi_tilde) - j_val * kernel.kappa_j(psi_tilde)
    return _checked_mean(-4.0 * w0 / j_val * drive * shape, weights, "g0")


def _branch_eta(
    field: AveragedField, l: int, sign: int, tau: ArrayLike  # noqa: E741
) -> Tuple[np.ndarray, np.ndarray]:
    ratio = np.asarray(a_n(tau, field), dtype=float)
    _, beta = field.amplitude_phase(tau)
    eta0 = np.mod((beta + sign * np.arccos(ratio) + TWO_PI * l) / field.n, TWO_PI)
    return eta0, ratio


def equilibria(
    field: AveragedField, tau_grid_values: Optional[np.ndarray] = None
) -> List[EquilibriumBranch]:
    """
    All 2n locked-phase branches η₀(τ) = (β ± arccos A_n + 2πl)/n.

    Args:
        field: averaged field
        tau_grid_values: slow-time samples; defaults to tau_grid(forcing)

    Returns:
        Branches ordered by l, '+' before '-'

    Raises:
        NoUniformBranch: If |A_n(τ)| >= 1 anywhere on the grid, or the
            resonance does not couple to the forcing
    """
    if tau_grid_values is None:
        taus = tau_grid(field.forcing)
    else:
        taus = np.asarray(tau_grid_values)
    if not field.coupled:
        raise NoUniformBranch(
            f"resonance {field.rp.q}:{field.rp.p} does not couple to the forcing; "
            f"f0 = {field.damping_mean:.6g} has no zeros"
        )
    ratio = np.asarray(a_n(taus, field), dtype=float)
    worst = float(np.max(np.abs(ratio)))
    if worst >= 1.0:
        raise NoUniformBranch(f"max |A_n(tau)| = {worst:.6g} >= 1")

    branches = []
    for l in range(field.n):  # noqa: E741
        for sign in (1, -1):
            eta0, _ = _branch_eta(field, l, sign, taus)
            branches.append(
                EquilibriumBranch(
                    l=l, sign_branch=sign, tau=taus, eta0=eta0, a_n=ratio
                )
            )
    logger.info(f"Found {len(branches)} equilibrium branches, max |A_n| = {worst:.6g}")
    return branches


def branch_phase(
    branch: EquilibriumBranch, tau: ArrayLike, field: AveragedField
) -> ArrayLike:
    """Evaluate a branch's η₀ at arbitrary slow times."""
    eta0, _ = _branch_eta(field, branch.l, branch.sign_branch, tau)
    return _as_output(eta0)


def f0_eta(
    branch: EquilibriumBranch, tau: ArrayLike, field: AveragedField
) -> ArrayLike:
    """
    a(τ) = ∂f0/∂η on the branch, -C(τ) n sign sqrt(1 - A_n²).

    Positive on '+' branches and negative on '-' branches whenever Ω < ν.
    """
    ratio = np.asarray(a_n(tau, field), dtype=float)
    value = (
        -field.coupling(tau)
        * field.n
        * branch.sign_branch
        * np.sqrt(np.clip(1.0 - ratio**2, 0.0, None))
    )
    return _as_output(value)


def first_order_closed_form(
    tau: ArrayLike, field: AveragedField
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Closed forms of b(τ) and e(τ) at equilibrium, through the resonant harmonic.

    Both only depend on cos(nη₀ - β) = A_n, so they coincide on every branch.

    Returns:
        (b, e) arrays over tau
    """
    kernel, rp = field.kernel, field.rp
    n, j_val, gamma = field.n, rp.j_pq, field.config.gamma
    w0, w0p, cap = kernel.omega0, rp.omega0_prime, kernel.omega0_cap
    cap_rate = kernel.cap_rate
    amplitude, _ = field.amplitude_phase(tau)
    ratio = np.asarray(a_n(tau, field), dtype=float)
    detuning = cap**2 - n**2

    forcing_b = (
        2.0 * amplitude * n * ratio / math.pi * (-2.0 * cap * cap_rate / detuning**2)
    )
    sin_h, cos_h = kernel.sin_half, kernel.cos_half
    if field.damping_average == DampingAverage.EXACT:
        two_pi_cap = TWO_PI * cap
        weight = 1.0 - math.sin(two_pi_cap) / two_pi_cap
        weight_slope = -math.cos(two_pi_cap) / cap + math.sin(two_pi_cap) / (
            TWO_PI * cap**2
        )
    else:
        weight, weight_slope = 1.0, 0.0
    # d/dJ of J w(Ω₀) / sin²(πΩ₀)
    scaled_slope = weight / sin_h**2 + j_val * cap_rate * (
        weight_slope / sin_h**2 - 2.0 * math.pi * weight * cos_h / sin_h**3
    )
    b_val = forcing_b - 0.5 * gamma * scaled_slope

    harmonic = 1.0 / (math.pi * w0 * detuning)
    harmonic_slope = (cap**2 + n**2) * w0p / (math.pi * (w0 * detuning) ** 2)
    e_val = (
        -(2.0 * w0 * amplitude * n / j_val)
        * (harmonic + j_val * harmonic_slope)
        * ratio
    )
    return np.asarray(b_val, dtype=float), np.asarray(e_val, dtype=float)


def coefficients(
    branch: EquilibriumBranch,
    field: AveragedField,
    tau_grid_values: Optional[np.ndarray] = None,
) -> Coefficients:
    """
    Linearization a, b, c, d, e, h of the averaged flow along a branch.

    a, c and d are closed forms; b and e come from quadrature, e by a
    central difference of g0 in η.

    Raises:
        NumericalError: If a quadrature fails
    """
    taus = branch.tau if tau_grid_values is None else np.asarray(tau_grid_values)
    eta0 = np.asarray(branch_phase(branch, taus, field), dtype=float)
    ratio = np.asarray(a_n(taus, field), dtype=float)
    coupling = field.coupling(taus)

    a_val = np.asarray(f0_eta(branch, taus, field), dtype=float)
    c_val = -0.5 * coupling * field.n**2 * ratio
    d_val = field.rp.omega0_prime

    step = settings.PHASE_DIFF_STEP
    b_val = np.empty_like(taus, dtype=float)
    e_val = np.empty_like(taus, dtype=float)
    for i, (eta, tau) in enumerate(zip(eta0, taus)):
        b_val[i] = f1_numeric(eta, tau, field)
        e_val[i] = (
            g0_numeric(eta + step, tau, field) - g0_numeric(eta - step, tau, field)
        ) / (2.0 * step)

    product = a_val * d_val
    with np.errstate(invalid="ignore", divide="ignore"):
        h_val = np.where(product < 0, np.sqrt(np.abs(d_val / a_val)), np.nan)
    return Coefficients(tau=taus, a=a_val, b=b_val, c=c_val, d=d_val, e=e_val, h=h_val)


def mean_log_derivative(values: np.ndarray, period: float) -> float:
    """Mean of h'/h for a positive periodic sample, with a spectral derivative."""
    size = len(values)
    spectrum = np.fft.rfft(values)
    wavenumbers = TWO_PI * np.fft.rfftfreq(size, d=period / size)
    if size % 2 == 0:
        wavenumbers[-1] = 0.0
    derivative = np.fft.irfft(1j * wavenumbers * spectrum, n=size)
    return float(np.mean(derivative / values))


def mean_growth(coeffs: Coefficients, period: Optional[float] = None) -> float:
    """
    Mean of b(τ) + e(τ) over one slow period.

    Args:
        coeffs: coefficients on a uniform grid covering one period
        period: slow period; inferred from the grid spacing when omitted

    Returns:
        ⟨b + e⟩

    Raises:
        DomainError: If a·d >= 0 somewhere, so h is undefined
        NumericalError: If the mean of h'/h does not vanish
    """
    if np.any(coeffs.a * coeffs.d >= 0):
        raise DomainError("h = sqrt(-d/a) undefined: a*d >= 0 on part of the grid")
    if period is None:
        taus = coeffs.tau
        period = float(taus[1] - taus[0]) * len(taus) if len(taus) > 1 else TWO_PI

    h_val = np.sqrt(-coeffs.d / coeffs.a)
    drift = mean_log_derivative(h_val, period)
    if abs(drift) > 1e-10 * max(1.0, float(np.max(np.abs(h_val)))):
        raise NumericalError(f"mean of h'/h = {drift:.3e} does not vanish")
    return float(np.mean(coeffs.b + coeffs.e))


def classify(branch: EquilibriumBranch, coeffs: Coefficients) -> Stability:
    """
    Stability label of a branch from its coefficients.

    Uniformly positive a·d is unstable. Uniformly negative a·d is decided by
    the sign of ⟨b + e⟩, with ties below 1e-8 left indeterminate, as is a
    sign change of a·d over τ.
    """
    product = coeffs.a * coeffs.d
    if np.min(product) > 0:
        return Stability.UNSTABLE_THM1
    if np.max(product) < 0:
        growth = mean_growth(coeffs)
        logger.debug(f"Branch l={branch.l} {branch.label}: <b+e> = {growth:.6g}")
        if growth < -CLASSIFY_TOLERANCE:
            return Stability.STABLE_THM2
        if growth > CLASSIFY_TOLERANCE:
            return Stability.UNSTABLE_THM2
    return Stability.INDETERMINATE


def classify_branches(
    field: AveragedField, branches: List[EquilibriumBranch]
) -> List[Tuple[EquilibriumBranch, Coefficients]]:
    """Attach stability labels to every branch, returning (branch, coefficients)."""
    classified = []
    for branch in branches:
        coeffs = coefficients(branch, field)
        label = classify(branch, coeffs)
        logger.info(f"Branch l={branch.l} sign={branch.label}: {label.value}")
        classified.append((replace(branch, stability=label), coeffs))
    return classified


def impact_frequency_at(rp: ResonancePoint) -> float:
    """ω₀(J_pq), which equals (q/p)ν."""
    return float(impact_frequency(rp.j_pq, rp.config))
