"""Scenario configuration: presets, YAML loading with schema validation, dumping."""

from __future__ import annotations

import copy
import dataclasses
from dataclasses import dataclass, field
from functools import lru_cache

import yaml
from pydantic import ConfigDict, TypeAdapter, ValidationError

from .body import BodyConfig, DragParams, FluidField, PdGains
from .cpg_math import CpgConfig, DriveMap
from .errors import ConfigError
from .nef import LifParams
from .network import PerturbationSpec, ScpgConfig
from .pilot import DriveSchedule, SteeringConfig

SCENARIOS = ("isolated_cpg", "swim_basic", "swim_neuron_sweep", "swim_steered",
             "barrier_open_loop", "barrier_steered", "perturbation", "asymmetric_drive")
BACKENDS = ("ideal", "spiking")

# scenarios whose CPG output drives the simulated body
BODY_SCENARIOS = ("swim_basic", "swim_neuron_sweep", "swim_steered", "barrier_open_loop", "barrier_steered")


def _default_network():
    return ScpgConfig(cpg=CpgConfig(output_map="offset"))


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str = "isolated_cpg"
    backend: str = "spiking"
    duration: float = 10.0
    seed: int = 0
    output_dir: str = "runs"
    network: ScpgConfig = field(default_factory=_default_network)
    body: BodyConfig = field(default_factory=BodyConfig)
    fluid: FluidField = field(default_factory=FluidField)
    schedule: DriveSchedule = field(default_factory=lambda: DriveSchedule.constant(3.0))
    steering: SteeringConfig | None = None
    perturbations: tuple[PerturbationSpec, ...] = ()
    heading_filter_tau: float = 1.0
    sweep_neurons: tuple[int, ...] = (500, 1000, 2000)
    transient: float = 3.0
    record_spikes: bool = True

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend {self.backend!r}; expected one of {BACKENDS}")
        if not self.duration > 0:
            raise ConfigError("duration must be > 0")
        if self.heading_filter_tau < 0:
            raise ConfigError("heading_filter_tau must be >= 0")
        if self.body.n_joints != self.network.cpg.n_segments:
            raise ConfigError(f"body has {self.body.n_joints} joints but the CPG has "
                              f"{self.network.cpg.n_segments} segments")
        if self.steering is not None:
            self.steering.validate_against(self.network.cpg.drive_map)
        if any(n < 1 for n in self.sweep_neurons) or not self.sweep_neurons:
            raise ConfigError("sweep_neurons must be a nonempty list of positive counts")
        n_osc = 2 * self.network.cpg.n_segments
        for p in self.perturbations:
            if not 0 <= p.oscillator_index < n_osc:
                raise ConfigError(f"perturbation oscillator_index {p.oscillator_index} out of range")

    @property
    def has_body(self) -> bool:
        return self.scenario in BODY_SCENARIOS

    @property
    def dt(self) -> float:
        return self.network.dt

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))


BARRIER = FluidField(current_velocity=(0.0, -0.3), boundary_normal=(1.0, 0.0), boundary_offset=1.0,
                     boundary_width=0.1)

# per-scenario overrides of the ScenarioConfig defaults
PRESETS = {
    "isolated_cpg": {},
    "swim_basic": {"duration": 15.0},
    "swim_neuron_sweep": {"duration": 10.0},
    "swim_steered": {"duration": 15.0, "steering": {"cf": 4.0, "r_z_target": 0.5}},
    "barrier_open_loop": {"duration": 20.0, "fluid": dataclasses.asdict(BARRIER)},
    "barrier_steered": {"duration": 20.0, "fluid": dataclasses.asdict(BARRIER),
                        "steering": {"cf": 4.0, "r_z_target": 0.0}},
    "perturbation": {"duration": 10.0, "perturbations": [
        {"oscillator_index": 4, "t_start": 4.8, "t_end": 5.0, "injected_value": [5.0, 0.0]}]},
    "asymmetric_drive": {"duration": 10.0, "schedule": {"entries": [[0.0, 3.0, 3.0], [5.0, 1.8, 4.2]]}},
}

_MODEL_TYPES = (ScenarioConfig, ScpgConfig, CpgConfig, DriveMap, LifParams, BodyConfig, DragParams, PdGains,
                FluidField, DriveSchedule, SteeringConfig, PerturbationSpec)


@lru_cache(maxsize=1)
def _adapter() -> TypeAdapter:
    # reject unknown keys everywhere; the model modules themselves stay pydantic-free
    for cls in _MODEL_TYPES:
        cls.__pydantic_config__ = ConfigDict(extra="forbid")
    return TypeAdapter(ScenarioConfig)


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def config_from_dict(data: dict) -> ScenarioConfig:
    """Validate a (possibly partial) mapping on top of its scenario preset."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    scenario = data.get("scenario", "isolated_cpg")
    if scenario not in PRESETS:
        raise ConfigError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
    merged = _merge(dump_config(ScenarioConfig(scenario=scenario)), PRESETS[scenario])
    merged = _merge(merged, data)
    try:
        return _adapter().validate_python(merged)
    except ValidationError as exc:
        raise ConfigError(f"schema validation failed:\n{exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def default_config(scenario: str, **overrides) -> ScenarioConfig:
    return config_from_dict({"scenario": scenario, **overrides})


def load_config(path) -> ScenarioConfig:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    return config_from_dict(data)


def dump_config(config: ScenarioConfig) -> dict:
    """Plain JSON/YAML-safe mapping that round-trips through :func:`config_from_dict`."""
    return _adapter().dump_python(config, mode="json")


def config_to_yaml(config: ScenarioConfig) -> str:
    return yaml.safe_dump(dump_config(config), sort_keys=False)
