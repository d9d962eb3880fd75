"""
Event-driven simulation of the forced impact oscillator.

Between impacts the state follows

    ẍ = -Ω²x + ε[f(t, εt) - γẋ],

integrated with scipy's DOP853 pair. Contact with the limiter is a terminal
upcrossing event of x - Δ, located by scipy on the dense output; the
velocity is then reversed and integration restarts from the limiter.
Impact sequences are reduced to impulses, periods and resonance-frame
phases, and compared with the locked phases of the averaged field.
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.stats import circmean, circstd

from impact_resonance import settings

from .exceptions import (
    DomainError,
    InsufficientData,
    IntegrationError,
    NonImpactingError,
)
from .green import TWO_PI, action_of_state
from .green import omega0 as impact_frequency
from .model import ForcingSpec, OscillatorConfig, scalar_force
from .resonance import (
    AveragedField,
    EquilibriumBranch,
    ResonancePoint,
    branch_phase,
)

logger = logging.getLogger(__name__)


class StopReason(str, Enum):
    HORIZON = "horizon"
    MAX_IMPACTS = "max_impacts"
    SILENT = "silent"


@dataclass(frozen=True)
class SimState:
    t: float
    x: float
    v: float


@dataclass(frozen=True)
class ImpactEvent:
    """
    One impact: time, approach velocity, impulse and resonance-frame phase.

    phase_hat is None when the run has no resonance frame (no phase_rate).
    """

    t_alpha: float
    v_minus: float
    j_alpha: float
    phase_hat: Optional[float]
    grazing: bool = False


@dataclass
class SimOptions:
    """
    Integrator and stopping options.

    Attributes:
        rtol: relative tolerance of the embedded pair
        atol: absolute tolerance
        graze_tol: approach velocities below this are flagged as grazing
        method: solve_ivp method name
        max_impacts: stop after this many impacts
        max_step_fraction: step cap as a fraction of the current impact period
        sample_stride: keep every N-th integrator point as a state sample (0: none)
        phase_rate: (q/p)ν used for event phases; None leaves them unset
        max_silent_periods: stop when no impact occurs for this many 2π/Ω
    """

    rtol: float = settings.SIM_RTOL
    atol: float = settings.SIM_ATOL
    graze_tol: float = settings.SIM_GRAZE_TOL
    method: str = settings.SIM_METHOD
    max_impacts: Optional[int] = None
    max_step_fraction: float = 0.02
    sample_stride: int = 0
    phase_rate: Optional[float] = None
    max_silent_periods: float = settings.SIM_MAX_SILENT_PERIODS

    def tightened(self, factor: float) -> "SimOptions":
        """Copy with both tolerances divided by factor."""
        return replace(self, rtol=self.rtol / factor, atol=self.atol / factor)


@dataclass(eq=False)
class Trajectory:
    events: List[ImpactEvent]
    samples: Optional[np.ndarray]
    config: OscillatorConfig
    forcing: ForcingSpec
    stop_reason: StopReason
    options: Optional[SimOptions] = None

    @property
    def impact_times(self) -> np.ndarray:
        return np.array([event.t_alpha for event in self.events])


def _step_cap(x: float, v: float, config: OscillatorConfig, fraction: float) -> float:
    try:
        j_val = action_of_state(min(x, config.delta), v, config)
        period = TWO_PI / float(impact_frequency(j_val, config))
    except (NonImpactingError, DomainError):
        period = TWO_PI / config.big_omega
    return period * fraction


def simulate(
    config: OscillatorConfig,
    forcing: ForcingSpec,
    initial: SimState,
    horizon: Optional[float] = None,
    opts: Optional[SimOptions] = None,
) -> Trajectory:
    """
    Integrate the impact oscillator from an initial state.

    Args:
        config: oscillator parameters
        forcing: forcing variant
        initial: starting state with x <= Δ
        horizon: time span to integrate; may be None if opts.max_impacts is set
        opts: integrator options

    Returns:
        Trajectory with impact events in time order

    Raises:
        DomainError: If the initial state lies beyond the limiter or no
            stopping rule is given
        IntegrationError: If the integrator fails or two impacts coincide
    """
    opts = opts or SimOptions()
    if horizon is None and opts.max_impacts is None:
        raise DomainError("simulate needs a horizon or opts.max_impacts")
    if horizon is not None and not horizon > 0:
        raise DomainError(f"horizon must be > 0, got {horizon}")
    delta = config.delta
    if initial.x > delta + 1e-9:
        raise DomainError(f"initial x={initial.x} lies beyond the limiter {delta}")

    eps, gamma, omega_sq = config.epsilon, config.gamma, config.big_omega**2
    force_at = scalar_force(forcing)
    phase_rate = opts.phase_rate
    t_final = initial.t + horizon if horizon is not None else math.inf
    silent_span = opts.max_silent_periods * TWO_PI / config.big_omega

    def rhs(t, y):
        accel = -omega_sq * y[0] + eps * (force_at(t, eps * t) - gamma * y[1])
        return [y[1], accel]

    def limiter(t, y):
        return y[0] - delta

    limiter.terminal = True  # type: ignore[attr-defined]
    limiter.direction = 1.0  # type: ignore[attr-defined]

    events: List[ImpactEvent] = []
    sample_blocks: List[np.ndarray] = []

    def record(t_hit: float, v_minus: float) -> ImpactEvent:
        grazing = v_minus < opts.graze_tol
        if grazing:
            logger.warning(f"Grazing impact at t={t_hit:.9g}, v-={v_minus:.3e}")
        if events and t_hit - events[-1].t_alpha <= 1e-12:
            raise IntegrationError(
                f"impacts at t={events[-1].t_alpha:.12g} and t={t_hit:.12g} coincide"
            )
        event = ImpactEvent(
            t_alpha=t_hit,
            v_minus=v_minus,
            j_alpha=2.0 * v_minus,
            phase_hat=(
                float(np.mod(-phase_rate * t_hit, TWO_PI))
                if phase_rate is not None
                else None
            ),
            grazing=grazing,
        )
        events.append(event)
        return event

    t, x, v = initial.t, min(initial.x, delta), initial.v
    if x >= delta and v > 0:
        record(t, v)
        v = -v

    stop_reason = StopReason.HORIZON
    while True:
        if opts.max_impacts is not None and len(events) >= opts.max_impacts:
            stop_reason = StopReason.MAX_IMPACTS
            break
        if t >= t_final:
            stop_reason = StopReason.HORIZON
            break

        t_end = min(t_final, t + silent_span)
        sol = solve_ivp(
            rhs,
            (t, t_end),
            [x, v],
            method=opts.method,
            rtol=opts.rtol,
            atol=opts.atol,
            events=limiter,
            max_step=_step_cap(x, v, config, opts.max_step_fraction),
        )
        if sol.status < 0:
            raise IntegrationError(f"integration failed at t={t:.9g}: {sol.message}")
        logger.debug(
            f"Flight from t={t:.9g}: {sol.nfev} evaluations, {len(sol.t)} steps"
        )

        if opts.sample_stride > 0:
            sample_blocks.append(
                np.column_stack((sol.t, sol.y[0], sol.y[1]))[:: opts.sample_stride]
            )

        if sol.status == 1 and len(sol.t_events[0]) > 0:
            t_hit = float(sol.t_events[0][0])
            v_minus = float(sol.y_events[0][0][1])
            record(t_hit, v_minus)
            t, x, v = t_hit, delta, -v_minus
            continue

        t, x, v = float(sol.t[-1]), float(sol.y[0, -1]), float(sol.y[1, -1])
        if t < t_final:
            stop_reason = StopReason.SILENT
            logger.warning(
                f"No impact for {opts.max_silent_periods:g} linear periods after "
                f"t={t - silent_span:.9g}; stopping"
            )
            break

    samples = np.vstack(sample_blocks) if sample_blocks else None
    logger.info(f"Simulation stopped ({stop_reason.value}) after {len(events)} impacts")
    return Trajectory(
        events=events,
        samples=samples,
        config=config,
        forcing=forcing,
        stop_reason=stop_reason,
        options=opts,
    )


def branch_start(
    field: AveragedField,
    branch: EquilibriumBranch,
    phase_offset: float = 0.0,
    iterations: int = 8,
) -> SimState:
    """
    State just after an impact with J = J_pq, timed so that η̂ sits on a branch.

    Args:
        field: averaged field of the resonance
        branch: target branch
        phase_offset: added to the branch phase η₀
        iterations: fixed-point passes resolving η₀(εt₀)

    Returns:
        SimState at the limiter moving away from it
    """
    rate = field.rp.phase_rate
    eps = field.config.epsilon
    t0 = 0.0
    for _ in range(iterations):
        target = float(branch_phase(branch, eps * t0, field)) + phase_offset
        t0 = float(np.mod(-target, TWO_PI)) / rate
    return SimState(t=t0, x=field.config.delta, v=-0.5 * field.rp.j_pq)


@dataclass(frozen=True, eq=False)
class Observables:
    """Impact times, impulses J_α, phases η̂_α, and periods T_α between them."""

    times: np.ndarray
    impulses: np.ndarray
    phases: np.ndarray
    periods: np.ndarray


def observables(traj: Trajectory, rp: ResonancePoint) -> Observables:
    """
    Reduce a trajectory to (J_α, T_α, η̂_α) in the frame of a resonance.

    Raises:
        InsufficientData: If the trajectory has fewer than two impacts
    """
    if len(traj.events) < 2:
        raise InsufficientData(f"need at least 2 impacts, got {len(traj.events)}")
    times = traj.impact_times
    return Observables(
        times=times,
        impulses=np.array([event.j_alpha for event in traj.events]),
        phases=np.mod(-rp.phase_rate * times, TWO_PI),
        periods=np.diff(times),
    )


@dataclass(frozen=True)
class LockReport:
    """
    Phase-locking summary of the trailing impacts.

    Attributes:
        locked: the phases track a branch within threshold near J_pq
        mean_impulse: mean J_α over the window
        circ_std: spread of n·η̂ - β(εt)
        matched_branch: index of the nearest branch, None without branches
        residual_std: spread of n·(η̂ - η₀(εt)) around the matched branch
        branch_std: spread of n·η₀(εt) - β(εt) along the matched branch,
            the value circ_std takes for a run sitting exactly on it
        n_events: impacts in the window
    """

    locked: bool
    mean_impulse: float
    circ_std: float
    matched_branch: Optional[int]
    residual_std: float
    branch_std: float
    n_events: int

    def to_record(self) -> Dict[str, Any]:
        return {
            "locked": self.locked,
            "mean_impulse": self.mean_impulse,
            "circ_std": self.circ_std,
            "matched_branch": self.matched_branch,
            "residual_std": self.residual_std,
            "branch_std": self.branch_std,
            "n_events": self.n_events,
        }


def _wrap(angle: np.ndarray) -> np.ndarray:
    return np.mod(angle + math.pi, TWO_PI) - math.pi


def _spread(angle: np.ndarray) -> float:
    return float(circstd(angle, high=math.pi, low=-math.pi))


def lock_report(
    obs: Observables,
    field: AveragedField,
    branches: Sequence[EquilibriumBranch],
    window: float = settings.LOCK_WINDOW,
    threshold: float = settings.LOCK_THRESHOLD,
) -> LockReport:
    """
    Decide whether the trailing impacts are phase locked to a branch.

    The run is locked when its phases stay within threshold of the nearest
    branch (residual_std) and the mean impulse is within 5√ε of J_pq. The
    spread of n·η̂ - β(εt) is reported as circ_std; it also contains the
    branch's own motion against β, reported as branch_std, which is zero
    for distinct frequencies and about 0.11 rad for the canonical beat.

    Args:
        obs: observables of the run
        field: averaged field of the resonance
        branches: candidate equilibrium branches
        window: trailing fraction of impacts analysed, in (0, 1]
        threshold: circular spread bound in radians

    Raises:
        DomainError: If window is outside (0, 1]
        InsufficientData: If the window holds no impacts
    """
    if not 0 < window <= 1:
        raise DomainError(f"window must lie in (0, 1], got {window}")
    count = int(math.floor(window * len(obs.times)))
    if count < 1:
        raise InsufficientData(f"window {window} of {len(obs.times)} impacts is empty")

    times = obs.times[-count:]
    phases = obs.phases[-count:]
    impulses = obs.impulses[-count:]
    slow = field.config.epsilon * times
    n = field.n

    _, beta = field.amplitude_phase(slow)
    circ_std = _spread(n * phases - beta)
    mean_impulse = float(np.mean(impulses))

    matched: Optional[int] = None
    residual_std = branch_std = math.nan
    best = math.inf
    for index, branch in enumerate(branches):
        eta0 = np.asarray(branch_phase(branch, slow, field))
        offset = _wrap(phases - eta0)
        distance = abs(float(circmean(offset, high=math.pi, low=-math.pi)))
        distance = min(distance, TWO_PI - distance)
        if distance < best:
            best, matched = distance, index
            residual_std = _spread(n * offset)
            branch_std = _spread(n * eta0 - beta)

    impulse_tol = max(5.0 * field.rp.mu, 1e-8)
    locked = (
        matched is not None
        and residual_std < threshold
        and abs(mean_impulse - field.rp.j_pq) <= impulse_tol
    )
    logger.info(
        f"Lock report: locked={locked}, circ_std={circ_std:.4g}, "
        f"residual_std={residual_std:.4g}, branch_std={branch_std:.4g}, "
        f"branch={matched}"
    )
    return LockReport(
        locked=bool(locked),
        mean_impulse=mean_impulse,
        circ_std=circ_std,
        matched_branch=matched,
        residual_std=residual_std,
        branch_std=branch_std,
        n_events=count,
    )
