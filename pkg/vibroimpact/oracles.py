"""
Cross-check battery behind the verify command.

Every check compares two independent computations of the same quantity:
closed forms against Fourier sums or quadrature, analytic derivatives
against finite differences, and conservative simulations against the exact
impact period law.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.integrate import quad

from .exceptions import ImpactResonanceError
from .green import (
    TWO_PI,
    kappa,
    kappa_fourier,
    kappa_j,
    kappa_psi,
    kappa_psi_fejer,
    kappa_psi_j,
    mean_kappa_psi_sq,
    omega0,
    omega0_prime,
)
from .model import CloseFrequencies, OscillatorConfig
from .resonance import (
    AveragedField,
    DampingAverage,
    a_n,
    f0,
    f0_numeric,
    f1_numeric,
    first_order_closed_form,
    g0_numeric,
    tau_grid,
)
from .simulator import SimOptions, SimState, simulate

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Check:
    name: str
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return math.isfinite(self.error) and self.error <= self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} {self.name}: error={self.error:.3e} "
            f"tol={self.tolerance:.1e}"
        )


def _signed_configs(config: OscillatorConfig) -> List[OscillatorConfig]:
    magnitude = abs(config.delta) or 1.0
    return [
        replace(config, delta=magnitude),
        replace(config, delta=-magnitude),
    ]


def _impulse_grid(config: OscillatorConfig, size: int = 50) -> np.ndarray:
    scale = 2.0 * config.big_omega * abs(config.delta)
    return np.linspace(0.5, 20.0, size) * scale


def check_kappa_fourier(field: AveragedField) -> float:
    psi = np.linspace(0.1, TWO_PI - 0.1, 200)
    j_val = field.rp.j_pq
    closed = np.asarray(kappa(psi, j_val, field.config))
    series = np.asarray(kappa_fourier(psi, j_val, field.config, terms=10_000))
    return float(np.max(np.abs(closed - series)))


def check_kappa_psi_fejer(field: AveragedField) -> float:
    psi = np.linspace(0.5, TWO_PI - 0.5, 200)
    j_val = field.rp.j_pq
    closed = np.asarray(kappa_psi(psi, j_val, field.config))
    series = np.asarray(kappa_psi_fejer(psi, j_val, field.config, terms=10_000))
    return float(np.max(np.abs(closed - series)))


def check_csc_identity(config: OscillatorConfig) -> float:
    """Relative error of csc²(πΩ₀) = 1 + (2ΩΔ/J)² over a grid of impulses."""
    worst = 0.0
    for signed in _signed_configs(config):
        for j_val in _impulse_grid(signed):
            cap = signed.big_omega / float(omega0(j_val, signed))
            lhs = 1.0 / math.sin(math.pi * cap) ** 2
            rhs = 1.0 + (2.0 * signed.big_omega * signed.delta / j_val) ** 2
            worst = max(worst, abs(lhs - rhs) / rhs)
    return worst


def check_impact_boundary(config: OscillatorConfig) -> float:
    """-J κ(0, J) must return the limiter position Δ."""
    worst = 0.0
    for signed in _signed_configs(config):
        for j_val in _impulse_grid(signed):
            boundary = -j_val * float(kappa(0.0, j_val, signed))
            worst = max(worst, abs(boundary - signed.delta))
    return worst


def check_omega0_prime(config: OscillatorConfig, step: float = 1e-6) -> float:
    worst = 0.0
    for signed in _signed_configs(config):
        for j_val in _impulse_grid(signed, size=20):
            upper = float(omega0(j_val + step, signed))
            lower = float(omega0(j_val - step, signed))
            numeric = (upper - lower) / (2.0 * step)
            worst = max(worst, abs(float(omega0_prime(j_val, signed)) - numeric))
    return worst


def _impulse_derivative_error(
    func: Callable, analytic: Callable, config: OscillatorConfig, step: float
) -> float:
    psi = np.linspace(0.3, TWO_PI - 0.3, 25)
    worst = 0.0
    for signed in _signed_configs(config):
        for j_val in _impulse_grid(signed, size=10):
            upper = np.asarray(func(psi, j_val + step, signed))
            lower = np.asarray(func(psi, j_val - step, signed))
            numeric = (upper - lower) / (2.0 * step)
            exact = np.asarray(analytic(psi, j_val, signed))
            worst = max(worst, float(np.max(np.abs(exact - numeric))))
    return worst


def check_kappa_j(config: OscillatorConfig, step: float = 1e-5) -> float:
    return _impulse_derivative_error(kappa, kappa_j, config, step)


def check_kappa_psi_j(config: OscillatorConfig, step: float = 1e-5) -> float:
    return _impulse_derivative_error(kappa_psi, kappa_psi_j, config, step)


def check_mean_kappa_psi_sq(field: AveragedField) -> float:
    j_val, config = field.rp.j_pq, field.config

    def integrand(psi: float) -> float:
        return float(kappa_psi(psi, j_val, config)) ** 2

    # quad never evaluates the endpoints, where κ_ψ jumps
    value, _ = quad(integrand, 0.0, TWO_PI, epsabs=1e-13, epsrel=1e-12, limit=200)
    return abs(value / TWO_PI - mean_kappa_psi_sq(j_val, config))


def check_f0_quadrature(field: AveragedField, size: int = 20) -> float:
    etas = np.linspace(0.0, TWO_PI, size, endpoint=False)
    taus = np.linspace(0.0, field.slow_period, size, endpoint=False)
    worst = 0.0
    for tau in taus:
        for eta in etas:
            closed = float(f0(eta, tau, field))
            worst = max(worst, abs(closed - f0_numeric(eta, tau, field)))
    return worst


def check_first_order(field: AveragedField, size: int = 8) -> float:
    """b and e by quadrature against their closed forms on the l = 0 '+' branch."""
    taus = tau_grid(field.forcing, size)
    b_closed, e_closed = first_order_closed_form(taus, field)
    ratio = np.asarray(a_n(taus, field), dtype=float)
    _, beta = field.amplitude_phase(taus)
    etas = (beta + np.arccos(ratio)) / field.n
    step = 1e-5
    worst = 0.0
    for eta, tau, b_val, e_val in zip(etas, taus, b_closed, e_closed):
        b_num = f1_numeric(eta, tau, field)
        upper = g0_numeric(eta + step, tau, field)
        lower = g0_numeric(eta - step, tau, field)
        e_num = (upper - lower) / (2.0 * step)
        worst = max(worst, abs(b_num - b_val), abs(e_num - e_val))
    return worst


def _has_branches(field: AveragedField) -> bool:
    if not field.coupled:
        return False
    ratio = np.asarray(a_n(tau_grid(field.forcing), field), dtype=float)
    return bool(np.max(np.abs(ratio)) < 1.0)


CONSERVATIVE_STARTS = (
    (1.0, SimState(t=0.0, x=1.0, v=-math.sqrt(3.0))),
    (-1.0, SimState(t=0.0, x=-1.0, v=-1.0)),
    (0.0, SimState(t=0.0, x=0.0, v=-1.0)),
)


def check_conservative_laws(
    impacts: int = 20, opts: Optional[SimOptions] = None
) -> Tuple[float, float]:
    """
    Worst period-law and impulse-drift errors of unforced, undamped runs.

    One run per limiter position, Δ ∈ {1, -1, 0}, from CONSERVATIVE_STARTS.
    """
    run_opts = replace(opts or SimOptions(), max_impacts=impacts)
    forcing = CloseFrequencies(a1=1.0, a2=0.5, nu=1.5, big_gamma=1.0)
    period_error, impulse_error = 0.0, 0.0
    for delta, start in CONSERVATIVE_STARTS:
        config = OscillatorConfig(big_omega=1.0, delta=delta, gamma=0.1, epsilon=0.0)
        traj = simulate(config, forcing, start, opts=run_opts)
        impulses = np.array([event.j_alpha for event in traj.events])
        periods = np.diff(traj.impact_times)
        expected = TWO_PI / np.asarray(omega0(impulses[1:], config))
        period_error = max(period_error, float(np.max(np.abs(periods - expected))))
        drift = float(np.max(np.abs(impulses - impulses[0])))
        impulse_error = max(impulse_error, drift)
    return period_error, impulse_error


def run_oracles(
    config: OscillatorConfig,
    field: Optional[AveragedField] = None,
    fault_factor: float = 1.0,
) -> List[Check]:
    """
    Run every cross-check.

    Args:
        config: oscillator parameters for the kernel identities
        field: averaged field of the configured resonance; the kernel and
            averaging checks are skipped without one
        fault_factor: every tolerance is divided by this factor

    Returns:
        One Check per oracle, in a fixed order
    """
    checks = [
        ("csc_squared_identity", lambda: check_csc_identity(config), 1e-10),
        ("impact_boundary_identity", lambda: check_impact_boundary(config), 1e-10),
        ("omega0_prime_difference", lambda: check_omega0_prime(config), 1e-8),
        ("kappa_j_difference", lambda: check_kappa_j(config), 1e-7),
        ("kappa_psi_j_difference", lambda: check_kappa_psi_j(config), 1e-7),
    ]
    if field is None:
        logger.warning("No resonance field: skipping kernel and averaging checks")
    else:
        # quadrature is compared against the exact period mean of κ_ψ²
        exact = replace(field, damping_average=DampingAverage.EXACT)
        checks += [
            ("kappa_fourier_sum", lambda: check_kappa_fourier(exact), 1e-3),
            ("kappa_psi_fejer_mean", lambda: check_kappa_psi_fejer(exact), 1e-2),
            ("mean_kappa_psi_sq_quad", lambda: check_mean_kappa_psi_sq(exact), 1e-8),
            ("f0_closed_form_quad", lambda: check_f0_quadrature(exact), 1e-6),
        ]
        if _has_branches(exact):
            checks.append(
                ("first_order_closed_form_quad", lambda: check_first_order(exact), 1e-6)
            )
        else:
            logger.info("No uniform branch: skipping the first-order check")

    results = []
    for name, compute, tolerance in checks:
        try:
            error = float(compute())
        except ImpactResonanceError as e:
            logger.error(f"Check {name} raised {type(e).__name__}: {e}")
            error = math.nan
        results.append(Check(name, error, tolerance / fault_factor))

    try:
        period_error, impulse_error = check_conservative_laws()
    except ImpactResonanceError as e:
        logger.error(f"Conservative simulation failed: {e}")
        period_error = impulse_error = math.nan
    results.append(Check("conservative_period_law", period_error, 1e-8 / fault_factor))
    results.append(Check("conservative_impulse", impulse_error, 1e-9 / fault_factor))
    return results
