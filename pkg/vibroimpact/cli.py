"""
Command-line interface of the impact resonance toolkit.

Subcommands:
    resonances   table of first-order resonances n = 1..n_max
    equilibria   locked-phase branches of the configured resonance with stability
    verify       cross-check battery, one PASS/FAIL line per check
    simulate     impact sequence, optional state samples and a lock report
    scan         simulate over a grid of ν, γ or ε, one row per grid point

Exit codes: 0 ok, 1 verify failure, 2 configuration error, 3 no locked-phase
branch, 4 integration error.
"""

import argparse
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from impact_resonance import runner, settings

from .exceptions import (
    ConfigError,
    DegenerateResonance,
    ImpactResonanceError,
    InsufficientData,
    IntegrationError,
    NoResonance,
    NoUniformBranch,
    NumericalError,
)
from .oracles import run_oracles
from .resonance import (
    AveragedField,
    Coefficients,
    EquilibriumBranch,
    Stability,
    a_n,
    classify_branches,
    equilibria,
    find_resonance,
    impact_frequency_at,
    tau_grid,
)
from .serializers import RunConfig, dump_config, load_config, parse_config
from .simulator import (
    SimOptions,
    SimState,
    Trajectory,
    branch_start,
    lock_report,
    observables,
    simulate,
)
from .utils import append_jsonl, write_csv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_NO_BRANCH = 3
EXIT_INTEGRATION = 4

RESONANCE_COLUMNS = ["n", "j_pq", "omega0", "omega0_prime", "a_n_max", "exists"]
EQUILIBRIA_COLUMNS = [
    "branch_id",
    "sign",
    "l",
    "tau",
    "eta0",
    "a_n",
    "a_coeff",
    "stability",
]
EVENT_COLUMNS = ["t_alpha", "v_minus", "j_alpha", "eta_hat"]
SAMPLE_COLUMNS = ["t", "x", "v"]
SCAN_COLUMNS = [
    "index",
    "axis",
    "value",
    "exists",
    "stable_branches",
    "unstable_branches",
    "locked",
    "mean_impulse",
    "circ_std",
    "matched_branch",
    "error",
]

UNSTABLE_LABELS = (Stability.UNSTABLE_THM1, Stability.UNSTABLE_THM2)


@dataclass
class Analysis:
    """Averaged field of the configured resonance and its classified branches."""

    averaged: Optional[AveragedField] = None
    branches: List[EquilibriumBranch] = field(default_factory=list)
    coefficients: List[Coefficients] = field(default_factory=list)
    failure: Optional[ImpactResonanceError] = None

    def count(self, *labels: Stability) -> int:
        return sum(1 for branch in self.branches if branch.stability in labels)


def build_field(run: RunConfig) -> AveragedField:
    """
    Averaged field of the resonance requested by a run configuration.

    Raises:
        NoResonance: If the resonance lies outside the frequency band
        DegenerateResonance: If Δ = 0 and every impulse resonates
    """
    request = run.resonance
    rp = find_resonance(run.oscillator, run.forcing.nu, request.q, request.p)
    return AveragedField(rp, run.forcing, damping_average=request.damping_average)


def analyze(run: RunConfig) -> Analysis:
    """Build the field and classify its branches, keeping the reason for any gap."""
    analysis = Analysis()
    try:
        analysis.averaged = build_field(run)
        classified = classify_branches(analysis.averaged, equilibria(analysis.averaged))
    except (NoResonance, DegenerateResonance, NoUniformBranch) as e:
        logger.info(f"No locked-phase branches: {e}")
        analysis.failure = e
        return analysis
    analysis.branches = [branch for branch, _ in classified]
    analysis.coefficients = [coeffs for _, coeffs in classified]
    return analysis


def output_dir(run: RunConfig, args: argparse.Namespace) -> Path:
    return Path(args.out or run.output.dir)


def samples_stride(run: RunConfig, args: argparse.Namespace) -> int:
    stride = args.samples_stride
    if stride is None:
        return run.output.samples_stride
    if stride < 0:
        raise ConfigError(f"must be >= 0, got {stride}", "--samples-stride")
    return stride


def resonance_rows(run: RunConfig) -> List[Dict[str, Any]]:
    """One row per n = 1..n_max for the q = 1 resonances of the forcing frequency."""
    config, forcing = run.oscillator, run.forcing
    rows = []
    for n in range(1, run.resonance.n_max + 1):
        row: Dict[str, Any] = {"n": n}
        if config.delta == 0:
            row.update(omega0=2.0 * config.big_omega, omega0_prime=0.0)
            row["exists"] = "degenerate"
            rows.append(row)
            continue
        try:
            rp = find_resonance(config, forcing.nu, 1, n)
        except NoResonance as e:
            logger.info(f"n={n}: {e}")
            row["exists"] = False
            rows.append(row)
            continue
        resonance_field = AveragedField(
            rp, forcing, damping_average=run.resonance.damping_average
        )
        ratio = np.asarray(a_n(tau_grid(forcing), resonance_field), dtype=float)
        a_max = float(np.max(np.abs(ratio)))
        row.update(
            j_pq=rp.j_pq,
            omega0=impact_frequency_at(rp),
            omega0_prime=rp.omega0_prime,
            a_n_max=a_max,
            exists=a_max < 1.0,
        )
        rows.append(row)
    return rows


def equilibria_rows(analysis: Analysis) -> List[Dict[str, Any]]:
    rows = []
    for branch_id, (branch, coeffs) in enumerate(
        zip(analysis.branches, analysis.coefficients)
    ):
        stability = branch.stability.value if branch.stability else ""
        for tau, eta0, ratio, a_coeff in zip(
            branch.tau, branch.eta0, branch.a_n, coeffs.a
        ):
            rows.append(
                {
                    "branch_id": branch_id,
                    "sign": branch.label,
                    "l": branch.l,
                    "tau": float(tau),
                    "eta0": float(eta0),
                    "a_n": float(ratio),
                    "a_coeff": float(a_coeff),
                    "stability": stability,
                }
            )
    return rows


def select_branch(
    branches: Sequence[EquilibriumBranch], selector: Any
) -> EquilibriumBranch:
    """
    Pick the starting branch named by simulation.initial.branch.

    Raises:
        NoUniformBranch: If no branch carries the requested label
        ConfigError: If an index is out of range
    """
    if selector == "stable":
        wanted: Tuple[Stability, ...] = (Stability.STABLE_THM2,)
    elif selector == "unstable":
        wanted = UNSTABLE_LABELS
    else:
        if not 0 <= selector < len(branches):
            raise ConfigError(
                f"index {selector} outside 0..{len(branches) - 1}",
                "simulation.initial.branch",
            )
        return branches[selector]
    for branch in branches:
        if branch.stability in wanted:
            return branch
    raise NoUniformBranch(f"no {selector} branch to start from")


def initial_state(run: RunConfig, analysis: Analysis) -> SimState:
    initial = run.simulation.initial
    if initial.mode == "state":
        return SimState(t=initial.t, x=initial.x, v=initial.v)
    if analysis.averaged is None or not analysis.branches:
        if analysis.failure is not None:
            raise analysis.failure
        raise NoUniformBranch("a branch start needs locked-phase branches")
    branch = select_branch(analysis.branches, initial.branch)
    logger.info(
        f"Starting on branch l={branch.l} {branch.label} "
        f"({branch.stability.value if branch.stability else 'unclassified'}) "
        f"with offset {initial.phase_offset:g}"
    )
    return branch_start(analysis.averaged, branch, initial.phase_offset)


def run_simulation(
    run: RunConfig, analysis: Analysis, stride: int = 0
) -> Tuple[Trajectory, Dict[str, Any]]:
    """
    Simulate a run configuration and build its lock-report record.

    Args:
        run: validated run configuration
        analysis: result of analyze(run)
        stride: keep every stride-th integrator point as a sample, 0 for none

    Returns:
        (trajectory, lock-report record)

    Raises:
        NoUniformBranch: If a branch start was requested but none exists
        IntegrationError: If the integrator fails
    """
    sim = run.simulation
    start = initial_state(run, analysis)
    rp = analysis.averaged.rp if analysis.averaged is not None else None
    opts = SimOptions(
        rtol=sim.rtol,
        atol=sim.atol,
        graze_tol=sim.graze_tol,
        max_impacts=sim.max_impacts,
        sample_stride=stride,
        phase_rate=rp.phase_rate if rp is not None else None,
    )
    traj = simulate(run.oscillator, run.forcing, start, horizon=sim.horizon, opts=opts)

    impulses = [event.j_alpha for event in traj.events]
    record: Dict[str, Any] = {
        "locked": False,
        "mean_impulse": float(np.mean(impulses)) if impulses else None,
        "circ_std": None,
        "matched_branch": None,
        "residual_std": None,
        "branch_std": None,
        "n_events": 0,
    }
    if analysis.averaged is not None:
        try:
            obs = observables(traj, analysis.averaged.rp)
            report = lock_report(
                obs,
                analysis.averaged,
                analysis.branches,
                window=1.0 - sim.warmup,
                threshold=sim.lock_threshold,
            )
            record = report.to_record()
        except InsufficientData as e:
            logger.warning(f"Lock report skipped: {e}")
    record["stop_reason"] = traj.stop_reason.value
    record["impacts"] = len(traj.events)
    return traj, record


def cmd_resonances(run: RunConfig, args: argparse.Namespace) -> int:
    path = output_dir(run, args) / "resonances.csv"
    count = write_csv(path, RESONANCE_COLUMNS, resonance_rows(run))
    mean = run.resonance.damping_average.value
    logger.info(f"Resonances use the {mean} damping average")
    print(f"Wrote {count} resonances to {path} (damping average: {mean})")
    return EXIT_OK


def cmd_equilibria(run: RunConfig, args: argparse.Namespace) -> int:
    analysis = analyze(run)
    if analysis.failure is not None:
        raise analysis.failure
    path = output_dir(run, args) / "equilibria.csv"
    write_csv(path, EQUILIBRIA_COLUMNS, equilibria_rows(analysis))
    for branch_id, branch in enumerate(analysis.branches):
        label = branch.stability.value if branch.stability else "unclassified"
        print(f"branch {branch_id}: l={branch.l} sign={branch.label} {label}")
    print(f"Wrote {len(analysis.branches)} branches to {path}")
    return EXIT_OK


def cmd_verify(run: RunConfig, args: argparse.Namespace) -> int:
    try:
        verify_field: Optional[AveragedField] = build_field(run)
    except (NoResonance, DegenerateResonance) as e:
        logger.warning(f"Resonance unavailable for verification: {e}")
        verify_field = None
    fault_factor = 1e3 if args.inject_fault else 1.0
    checks = run_oracles(run.oscillator, verify_field, fault_factor=fault_factor)
    for check in checks:
        print(check.line())
    failed = [check.name for check in checks if not check.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    if failed:
        logger.error(f"Failed checks: {', '.join(failed)}")
        return EXIT_VERIFY_FAILED
    return EXIT_OK


def cmd_simulate(run: RunConfig, args: argparse.Namespace) -> int:
    stride = samples_stride(run, args)
    traj, record = run_simulation(run, analyze(run), stride=stride)
    out = output_dir(run, args)

    write_csv(
        out / "events.csv",
        EVENT_COLUMNS,
        (
            {
                "t_alpha": event.t_alpha,
                "v_minus": event.v_minus,
                "j_alpha": event.j_alpha,
                "eta_hat": event.phase_hat,
            }
            for event in traj.events
        ),
    )
    if stride > 0 and traj.samples is not None:
        write_csv(
            out / "samples.csv",
            SAMPLE_COLUMNS,
            ({"t": t, "x": x, "v": v} for t, x, v in traj.samples.tolist()),
        )
    append_jsonl(out / "lock_report.jsonl", record)

    circ = record["circ_std"]
    spread = f"{circ:.4g}" if circ is not None and math.isfinite(circ) else "n/a"
    print(
        f"{len(traj.events)} impacts ({traj.stop_reason.value}), "
        f"locked={str(record['locked']).lower()}, circ_std={spread}, "
        f"matched_branch={record['matched_branch']}"
    )
    return EXIT_OK


def scan_payloads(run: RunConfig) -> List[Dict[str, Any]]:
    """One plain-dictionary configuration per grid value, in grid order."""
    scan = run.scan
    if scan is None:
        raise ConfigError("scan needs a 'scan' block", "scan")
    base = dump_config(run)
    del base["scan"]
    section = "forcing" if scan.axis == "nu" else "oscillator"
    payloads = []
    for index, value in enumerate(scan.values()):
        data = {key: dict(val) for key, val in base.items()}
        data[section][scan.axis] = value
        payloads.append(
            {"index": index, "axis": scan.axis, "value": value, "config": data}
        )
    return payloads


def scan_point(payload: Dict[str, Any]) -> Dict[str, Any]:
    """Analyze and simulate one grid point; runs in a worker process."""
    run = parse_config(payload["config"])
    analysis = analyze(run)
    row: Dict[str, Any] = {
        "exists": bool(analysis.branches),
        "stable_branches": analysis.count(Stability.STABLE_THM2),
        "unstable_branches": analysis.count(*UNSTABLE_LABELS),
        "locked": False,
    }
    if analysis.branches or run.simulation.initial.mode == "state":
        _, record = run_simulation(run, analysis)
        for key in ("locked", "mean_impulse", "circ_std", "matched_branch"):
            row[key] = record[key]
    return row


def cmd_scan(run: RunConfig, args: argparse.Namespace) -> int:
    payloads = scan_payloads(run)
    tracker = runner.ExecutionTracker()
    results = runner.execute_grid(scan_point, payloads, jobs=args.jobs, tracker=tracker)

    rows = []
    for point in results:
        row = {
            "index": point.payload["index"],
            "axis": point.payload["axis"],
            "value": point.payload["value"],
        }
        if point.ok:
            row.update(point.result)
        else:
            row["error"] = point.error
        rows.append(row)

    path = output_dir(run, args) / "scan.csv"
    write_csv(path, SCAN_COLUMNS, rows)
    summary = tracker.summary()
    print(
        f"Scanned {summary['total']} points ({summary['failed']} failed), "
        f"wrote {path}"
    )
    return EXIT_OK


COMMANDS = {
    "resonances": (cmd_resonances, "tabulate first-order resonances"),
    "equilibria": (cmd_equilibria, "locked-phase branches and their stability"),
    "verify": (cmd_verify, "run the cross-check battery"),
    "simulate": (cmd_simulate, "simulate and report phase locking"),
    "scan": (cmd_scan, "simulate over a parameter grid"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run configuration")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument(
        "--jobs",
        type=int,
        default=settings.DEFAULT_JOBS,
        help="worker processes for scan",
    )
    common.add_argument(
        "--seed", type=int, default=None, help="reserved; runs are deterministic"
    )
    common.add_argument(
        "--samples-stride",
        type=int,
        default=None,
        help="keep every N-th integrator point in samples.csv",
    )
    common.add_argument(
        "--log-level",
        choices=sorted(settings.LOG_LEVELS),
        default=None,
        help="overrides IMPACTRES_LOG",
    )

    parser = argparse.ArgumentParser(
        prog="impactres",
        description="Resonances of an impact oscillator under biharmonic forcing",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, (handler, help_text) in COMMANDS.items():
        sub = subparsers.add_parser(name, parents=[common], help=help_text)
        sub.set_defaults(handler=handler)
        if name == "verify":
            sub.add_argument(
                "--inject-fault",
                action="store_true",
                help="divide every tolerance by 1e3",
            )
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    settings.configure_logging(args.log_level)
    if args.seed is not None:
        logger.debug(f"Seed {args.seed} ignored, runs are deterministic")

    try:
        run = load_config(args.config)
        return args.handler(run, args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (NoResonance, DegenerateResonance, NoUniformBranch) as e:
        logger.error(f"No locked-phase branch: {e}")
        print(f"no branch: {e}", file=sys.stderr)
        return EXIT_NO_BRANCH
    except (IntegrationError, NumericalError) as e:
        logger.error(f"Integration failed: {e}")
        print(f"integration error: {e}", file=sys.stderr)
        return EXIT_INTEGRATION
    except ImpactResonanceError as e:
        # remaining domain errors come from physically invalid inputs
        logger.error(f"Invalid input: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
