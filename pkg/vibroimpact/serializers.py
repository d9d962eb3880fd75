"""
Serializers for run configurations.

This module validates JSON run configurations into typed RunConfig values
and renders them back to plain dictionaries. Unknown keys are rejected at
every level; omitted sections and keys take the canonical preset values.
"""

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union

from impact_resonance import presets

from .exceptions import ConfigError, DomainError
from .model import CloseFrequencies, DistinctFrequencies, ForcingSpec, OscillatorConfig
from .resonance import DampingAverage

logger = logging.getLogger(__name__)

SCAN_AXES = ("nu", "gamma", "epsilon")
BRANCH_SELECTORS = ("stable", "unstable")


@dataclass(frozen=True)
class ResonanceRequest:
    q: int = 1
    p: int = 1
    n_max: int = 6
    damping_average: DampingAverage = DampingAverage.EXACT


@dataclass(frozen=True)
class InitialCondition:
    """Either a branch start (mode 'branch') or an explicit state (mode 'state')."""

    mode: str = "branch"
    branch: Union[str, int] = "stable"
    phase_offset: float = 0.0
    t: float = 0.0
    x: Optional[float] = None
    v: Optional[float] = None


@dataclass(frozen=True)
class SimulationBlock:
    horizon: Optional[float] = None
    max_impacts: Optional[int] = 2000
    initial: InitialCondition = InitialCondition()
    rtol: float = 1e-10
    atol: float = 1e-12
    graze_tol: float = 1e-8
    warmup: float = 0.2
    lock_threshold: float = 0.15


@dataclass(frozen=True)
class OutputBlock:
    dir: str = "results"
    samples_stride: int = 0


@dataclass(frozen=True)
class ScanBlock:
    axis: str
    start: float
    stop: float
    count: int

    def values(self):
        if self.count == 1:
            return [self.start]
        step = (self.stop - self.start) / (self.count - 1)
        return [self.start + i * step for i in range(self.count)]


@dataclass(frozen=True)
class RunConfig:
    oscillator: OscillatorConfig
    forcing: ForcingSpec
    resonance: ResonanceRequest
    simulation: SimulationBlock
    output: OutputBlock
    scan: Optional[ScanBlock] = None


def _check_keys(path: str, data: Any, allowed: Iterable[str]):
    if not isinstance(data, dict):
        raise ConfigError("must be a JSON object", path)
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown keys {unknown}", path)


def _number(path: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"must be a number, got {value!r}", path)
    if not math.isfinite(value):
        raise ConfigError(f"must be finite, got {value!r}", path)
    return float(value)


def _integer(path: str, value: Any, minimum: int = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"must be an integer, got {value!r}", path)
    if minimum is not None and value < minimum:
        raise ConfigError(f"must be >= {minimum}, got {value}", path)
    return value


def _with_defaults(section: str, data: Any) -> Dict[str, Any]:
    defaults = presets.get_default_section(section)
    if data is None:
        return defaults
    _check_keys(section, data, defaults)
    return {**defaults, **data}


class RunConfigSerializer:
    """
    Validates a run configuration document.

    Mirrors a REST serializer: one validate_<section> method per top-level
    key, each returning the typed value or raising ConfigError with the
    offending path.
    """

    SECTIONS = ("oscillator", "forcing", "resonance", "simulation", "output", "scan")

    def __init__(self, data: Dict[str, Any]):
        self.initial_data = data

    def validate(self) -> RunConfig:
        """
        Validate the whole document.

        Returns:
            RunConfig with every physical invariant checked

        Raises:
            ConfigError: On unknown keys, wrong types or invalid parameters
        """
        data = self.initial_data
        _check_keys("config", data, self.SECTIONS)
        oscillator = self.validate_oscillator(data.get("oscillator"))
        forcing = self.validate_forcing(data.get("forcing"))
        resonance = self.validate_resonance(data.get("resonance"))
        simulation = self.validate_simulation(data.get("simulation"))
        output = self.validate_output(data.get("output"))
        scan = self.validate_scan(data.get("scan"))
        return RunConfig(
            oscillator=oscillator,
            forcing=forcing,
            resonance=resonance,
            simulation=simulation,
            output=output,
            scan=scan,
        )

    def validate_oscillator(self, value: Any) -> OscillatorConfig:
        merged = _with_defaults("oscillator", value)
        numbers = {
            key: _number(f"oscillator.{key}", val) for key, val in merged.items()
        }
        try:
            return OscillatorConfig(**numbers)
        except DomainError as e:
            raise ConfigError(str(e), "oscillator") from e

    def validate_forcing(self, value: Any) -> ForcingSpec:
        if value is None:
            value = presets.get_default_section("forcing")
        if not isinstance(value, dict):
            raise ConfigError("must be a JSON object", "forcing")
        kind = value.get("kind", "close")
        try:
            if kind == "close":
                merged = _with_defaults("forcing", value)
                fields = {
                    key: _number(f"forcing.{key}", merged[key])
                    for key in ("a1", "a2", "nu", "big_gamma")
                }
                return CloseFrequencies(**fields)
            if kind == "distinct":
                allowed = ("kind", "amp_a", "amp_b", "nu", "big_gamma", "theta")
                _check_keys("forcing", value, allowed)
                missing = [k for k in allowed[1:5] if k not in value]
                if missing:
                    raise ConfigError(f"missing keys {missing}", "forcing")
                fields = {
                    key: _number(f"forcing.{key}", value[key])
                    for key in allowed[1:]
                    if key in value
                }
                return DistinctFrequencies(**fields)
        except DomainError as e:
            raise ConfigError(str(e), "forcing") from e
        raise ConfigError(
            f"kind must be 'close' or 'distinct', got {kind!r}", "forcing"
        )

    def validate_resonance(self, value: Any) -> ResonanceRequest:
        merged = _with_defaults("resonance", value)
        q = _integer("resonance.q", merged["q"], minimum=1)
        p = _integer("resonance.p", merged["p"], minimum=1)
        if math.gcd(p, q) != 1:
            raise ConfigError(f"p={p} and q={q} must be coprime", "resonance")
        n_max = _integer("resonance.n_max", merged["n_max"], minimum=1)
        try:
            damping = DampingAverage(merged["damping_average"])
        except ValueError as e:
            raise ConfigError(
                f"must be one of {[m.value for m in DampingAverage]}",
                "resonance.damping_average",
            ) from e
        return ResonanceRequest(q=q, p=p, n_max=n_max, damping_average=damping)

    def validate_initial(self, value: Any) -> InitialCondition:
        if value is None:
            value = presets.get_default_section("simulation")["initial"]
        if not isinstance(value, dict):
            raise ConfigError("must be a JSON object", "simulation.initial")
        mode = value.get("mode", "branch")
        path = "simulation.initial"
        if mode == "branch":
            _check_keys(path, value, ("mode", "branch", "phase_offset"))
            branch = value.get("branch", "stable")
            if isinstance(branch, bool) or not (
                branch in BRANCH_SELECTORS or (isinstance(branch, int) and branch >= 0)
            ):
                raise ConfigError(
                    f"must be 'stable', 'unstable' or a branch index, got {branch!r}",
                    f"{path}.branch",
                )
            offset = _number(f"{path}.phase_offset", value.get("phase_offset", 0.0))
            return InitialCondition(mode=mode, branch=branch, phase_offset=offset)
        if mode == "state":
            _check_keys(path, value, ("mode", "t", "x", "v"))
            for key in ("x", "v"):
                if key not in value:
                    raise ConfigError(f"state mode requires '{key}'", path)
            return InitialCondition(
                mode=mode,
                t=_number(f"{path}.t", value.get("t", 0.0)),
                x=_number(f"{path}.x", value["x"]),
                v=_number(f"{path}.v", value["v"]),
            )
        raise ConfigError(f"mode must be 'branch' or 'state', got {mode!r}", path)

    def validate_simulation(self, value: Any) -> SimulationBlock:
        merged = _with_defaults("simulation", value)
        # an explicit horizon is not capped by the default impact count
        if value and value.get("horizon") is not None and "max_impacts" not in value:
            merged["max_impacts"] = None
        horizon = merged["horizon"]
        if horizon is not None:
            horizon = _number("simulation.horizon", horizon)
            if horizon <= 0:
                raise ConfigError(f"must be > 0, got {horizon}", "simulation.horizon")
        max_impacts = merged["max_impacts"]
        if max_impacts is not None:
            max_impacts = _integer("simulation.max_impacts", max_impacts, minimum=1)
        if horizon is None and max_impacts is None:
            raise ConfigError("needs 'horizon' or 'max_impacts'", "simulation")

        tolerances = {}
        for key in ("rtol", "atol", "graze_tol", "lock_threshold"):
            tolerances[key] = _number(f"simulation.{key}", merged[key])
            if tolerances[key] <= 0:
                raise ConfigError("must be > 0", f"simulation.{key}")
        warmup = _number("simulation.warmup", merged["warmup"])
        if not 0 <= warmup < 1:
            raise ConfigError(f"must lie in [0, 1), got {warmup}", "simulation.warmup")

        return SimulationBlock(
            horizon=horizon,
            max_impacts=max_impacts,
            initial=self.validate_initial(merged["initial"]),
            warmup=warmup,
            **tolerances,
        )

    def validate_output(self, value: Any) -> OutputBlock:
        merged = _with_defaults("output", value)
        if not isinstance(merged["dir"], str) or not merged["dir"]:
            raise ConfigError("must be a non-empty string", "output.dir")
        stride = _integer("output.samples_stride", merged["samples_stride"], minimum=0)
        return OutputBlock(dir=merged["dir"], samples_stride=stride)

    def validate_scan(self, value: Any) -> Optional[ScanBlock]:
        if value is None:
            return None
        _check_keys("scan", value, ("axis", "start", "stop", "count"))
        missing = [k for k in ("axis", "start", "stop", "count") if k not in value]
        if missing:
            raise ConfigError(f"missing keys {missing}", "scan")
        if value["axis"] not in SCAN_AXES:
            raise ConfigError(f"must be one of {list(SCAN_AXES)}", "scan.axis")
        return ScanBlock(
            axis=value["axis"],
            start=_number("scan.start", value["start"]),
            stop=_number("scan.stop", value["stop"]),
            count=_integer("scan.count", value["count"], minimum=1),
        )

    @staticmethod
    def to_representation(config: RunConfig) -> Dict[str, Any]:
        """Render a RunConfig as a plain dictionary that validates back to itself."""
        forcing = config.forcing
        if isinstance(forcing, CloseFrequencies):
            forcing_data: Dict[str, Any] = {
                "kind": "close",
                "a1": forcing.a1,
                "a2": forcing.a2,
                "nu": forcing.nu,
                "big_gamma": forcing.big_gamma,
            }
        else:
            forcing_data = {
                "kind": "distinct",
                "amp_a": forcing.amp_a,
                "amp_b": forcing.amp_b,
                "nu": forcing.nu,
                "big_gamma": forcing.big_gamma,
                "theta": forcing.theta,
            }

        initial = config.simulation.initial
        if initial.mode == "branch":
            initial_data: Dict[str, Any] = {
                "mode": "branch",
                "branch": initial.branch,
                "phase_offset": initial.phase_offset,
            }
        else:
            initial_data = {
                "mode": "state",
                "t": initial.t,
                "x": initial.x,
                "v": initial.v,
            }

        sim = config.simulation
        data: Dict[str, Any] = {
            "oscillator": {
                "big_omega": config.oscillator.big_omega,
                "delta": config.oscillator.delta,
                "gamma": config.oscillator.gamma,
                "epsilon": config.oscillator.epsilon,
            },
            "forcing": forcing_data,
            "resonance": {
                "q": config.resonance.q,
                "p": config.resonance.p,
                "n_max": config.resonance.n_max,
                "damping_average": config.resonance.damping_average.value,
            },
            "simulation": {
                "horizon": sim.horizon,
                "max_impacts": sim.max_impacts,
                "initial": initial_data,
                "rtol": sim.rtol,
                "atol": sim.atol,
                "graze_tol": sim.graze_tol,
                "warmup": sim.warmup,
                "lock_threshold": sim.lock_threshold,
            },
            "output": {
                "dir": config.output.dir,
                "samples_stride": config.output.samples_stride,
            },
        }
        if config.scan is not None:
            data["scan"] = {
                "axis": config.scan.axis,
                "start": config.scan.start,
                "stop": config.scan.stop,
                "count": config.scan.count,
            }
        return data


def parse_config(data: Dict[str, Any]) -> RunConfig:
    """Validate an already-decoded configuration document."""
    return RunConfigSerializer(data).validate()


def load_config(path: Union[str, Path]) -> RunConfig:
    """
    Load and validate a JSON configuration file.

    Raises:
        ConfigError: If the file cannot be read, is not JSON, or fails validation
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}", str(path)) from e
    try:
        data = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e}", str(path)) from e
    config = parse_config(data)
    logger.info(f"Loaded configuration from {path}")
    return config


def dump_config(config: RunConfig) -> Dict[str, Any]:
    return RunConfigSerializer.to_representation(config)


def save_config(config: RunConfig, path: Union[str, Path]):
    text = json.dumps(dump_config(config), indent=2) + "\n"
    Path(path).write_text(text, encoding="utf-8")
