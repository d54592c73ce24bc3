"""Spiking double-chain CPG assembled from NEF populations.

Per oscillatory centre one recurrent 4-D population represents
``[x, y, omega_bar / omega_scale, R]``.  Its recurrent connection decodes the
Hopf-like update for ``(x, y)``; the last two dimensions carry no feedback and
simply hold the synapse-filtered sum of their inputs (drive targets plus
coupling terms), i.e. first-order tracking with the synapse time constant.

Every directed coupling edge ``j -> i`` gets an intermediate 4-D population
representing ``[x_i, y_i, x_j, y_j]`` that decodes oscillator j's additive
contribution to the frequency of oscillator i.
"""

from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import cpg_math
from .cpg_math import CpgConfig, DriveSignal
from .errors import ConfigError, DivergenceError
from .nef import (DecoderMatrix, LifParams, Network, Population, PopulationSpec, Simulator, Synapse,
                  default_n_eval_points, generate_population, sample_ball, solve_decoders)

log = logging.getLogger(__name__)

MIN_NEURONS = 50


@dataclass(frozen=True)
class ScpgConfig:
    cpg: CpgConfig = field(default_factory=CpgConfig)
    neurons_per_population: int = 2000
    seed: int = 0
    dt: float = 0.001
    synapse_tau: float = 0.1
    feedforward_tau: float = 0.01
    readout_tau: float = 0.01
    lif: LifParams = field(default_factory=LifParams)
    max_rate_range: tuple[float, float] = (200.0, 400.0)
    intercept_range: tuple[float, float] = (-1.0, 1.0)
    regularization: float = 0.05
    state_margin: float = 1.3
    drive_mode: str = "spiking"
    drive_neurons: int | None = None
    init_voltage_noise: float = 1.0
    kick_amplitude: float = 0.1
    kick_duration: float = 0.05
    spike_probe_neurons: int = 50

    def __post_init__(self):
        if self.neurons_per_population < 1:
            raise ConfigError("neurons_per_population must be >= 1")
        if self.dt <= 0:
            raise ConfigError("dt must be > 0")
        for name in ("synapse_tau", "feedforward_tau", "readout_tau"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        if self.drive_mode not in ("spiking", "passthrough"):
            raise ConfigError(f"drive_mode must be 'spiking' or 'passthrough', got {self.drive_mode!r}")
        if self.kick_amplitude < 0 or self.kick_duration < 0:
            raise ConfigError("kick_amplitude and kick_duration must be >= 0")
        if self.state_margin <= 1.0:
            raise ConfigError("state_margin must be > 1")
        if self.regularization < 0:
            raise ConfigError("regularization must be >= 0")

    @property
    def synapse(self) -> Synapse:
        return Synapse(self.synapse_tau)

    @property
    def omega_scale(self) -> float:
        return self.cpg.drive_map.omega_max

    @property
    def oscillator_radius(self) -> float:
        return 1.5 * max(self.cpg.drive_map.R_max, 1.0)

    @property
    def coupling_radius(self) -> float:
        return 1.2 * math.sqrt(2.0) * self.cpg.drive_map.R_max

    @property
    def amplitude_cap(self) -> float:
        """Largest oscillator radius the decoders are trained for."""
        return self.state_margin * self.cpg.drive_map.R_max

    @property
    def drive_radius(self) -> float:
        return 1.2 * self.cpg.drive_map.d_high


@dataclass(frozen=True)
class PerturbationSpec:
    oscillator_index: int
    t_start: float
    t_end: float
    injected_value: tuple[float, float] = (5.0, 0.0)

    def __post_init__(self):
        if not self.t_start < self.t_end:
            raise ConfigError("perturbation t_start must be < t_end")

    def active(self, t) -> bool:
        return self.t_start <= t < self.t_end


@dataclass(eq=False)
class OscPopulationHandle:
    name: str
    population: Population
    feedback: DecoderMatrix
    readout: DecoderMatrix


@dataclass(eq=False)
class CouplingPopulationHandle:
    name: str
    target: int
    source: int
    population: Population
    decoders: DecoderMatrix


def _oscillator_feedback(config: ScpgConfig):
    tau = config.synapse_tau
    a = config.cpg.amplitude_gain
    w_scale = config.omega_scale

    def feedback(s):
        x, y, w, R = s
        w = w * w_scale
        radial = a * (R * R - x * x - y * y)
        return np.array([x + tau * (radial * x - w * y), y + tau * (radial * y + w * x)])

    return feedback


def _coupling_function(w, phi, config: ScpgConfig):
    eps = config.cpg.epsilon_r
    conv = config.cpg.convention
    scale = config.omega_scale

    def coupling(s):
        xi, yi, xj, yj = s
        return np.array([cpg_math.coupling_frequency_term(xi, yi, xj, yj, w, phi, eps, conv) / scale])

    return coupling


def _drive_function(config: ScpgConfig):
    dm = config.cpg.drive_map
    scale = config.omega_scale

    def targets(s):
        omega, R = cpg_math.saturate_drive(s[0], dm)
        return np.array([omega / scale, R])

    return targets


def _reachable_points(pop: Population, keep, seed):
    """Uniform ball samples restricted to the state region the network can visit.

    Fitting only where trajectories live keeps the cubic feedback and the
    1/r coupling term from spending decoder accuracy on unreachable corners
    of the ball.
    """
    n = default_n_eval_points(pop)
    rng = np.random.default_rng(seed)
    out, have = [], 0
    while have < n:
        P = sample_ball(4 * n, pop.dimensions, pop.radius, rng)
        P = P[keep(P)]
        out.append(P)
        have += len(P)
    return np.concatenate(out)[:n]


class ScpgNetwork:
    """A built spiking CPG plus its simulator state."""

    def __init__(self, config: ScpgConfig):
        self.config = config
        self.topology = config.cpg.topology()
        self.oscillators: list[OscPopulationHandle] = []
        self.couplings: list[CouplingPopulationHandle] = []
        self.drives: dict[str, Population] = {}
        self.network = Network("scpg")
        self._last_t = -math.inf
        self._psi: list[np.ndarray] = []
        self._perturb_active = np.zeros(self.topology.n_oscillators, dtype=bool)
        # seeded start-up nudge of every oscillator's (x, y); see step()
        angles = np.random.default_rng([config.seed, 1]).uniform(0, 2 * np.pi, self.topology.n_oscillators)
        rate = config.kick_amplitude / config.kick_duration if config.kick_duration > 0 else 0.0
        self._kick = rate * np.column_stack([np.cos(angles), np.sin(angles)])
        t0 = time.perf_counter()
        self._build()
        self.sim = Simulator(self.network, dt=config.dt, seed=config.seed,
                             init_voltage_noise=config.init_voltage_noise)
        self.build_time = time.perf_counter() - t0

    # --- construction ---------------------------------------------------------------

    def _spec(self, seq, n, d, radius):
        cfg = self.config
        return PopulationSpec(n_neurons=n, dimensions=d, radius=radius, max_rate_range=cfg.max_rate_range,
                              intercept_range=cfg.intercept_range,
                              seed=int(seq.generate_state(1)[0]))

    def _solve(self, pop, fn, label, keep=None):
        eval_points = None if keep is None else _reachable_points(pop, keep, pop.spec.seed)
        try:
            return solve_decoders(pop, fn, regularization=self.config.regularization,
                                  eval_points=eval_points, label=label)
        except Exception as exc:
            raise ConfigError(f"decoder solve failed for population {label!r}: {exc}") from exc

    def _build(self):
        cfg = self.config
        topo = self.topology
        net = self.network
        n = cfg.neurons_per_population
        if n < MIN_NEURONS:
            warnings.warn(f"{n} neurons per population is below {MIN_NEURONS}; expect poor oscillations",
                          stacklevel=3)
        seeds = iter(np.random.SeedSequence(cfg.seed).spawn(topo.n_oscillators + topo.n_couplings + 2))
        syn = cfg.synapse
        ff = Synapse(cfg.feedforward_tau)
        readout = Synapse(cfg.readout_tau)

        cap, floor = cfg.amplitude_cap, -0.3

        def osc_region(P):
            return (np.hypot(P[:, 0], P[:, 1]) <= cap) & (P[:, 2] >= floor) & (P[:, 3] >= floor)

        def coupling_region(P):
            return (np.hypot(P[:, 0], P[:, 1]) <= cap) & (np.hypot(P[:, 2], P[:, 3]) <= cap)

        fb_fn = _oscillator_feedback(cfg)
        for k in range(topo.n_oscillators):
            name = f"osc{k}"
            pop = generate_population(self._spec(next(seeds), n, 4, cfg.oscillator_radius), cfg.lif)
            net.add_population(name, pop)
            fb = self._solve(pop, fb_fn, f"{name}.feedback", osc_region)
            xy = self._solve(pop, lambda s: s[:2], f"{name}.xy", osc_region)
            net.connect(name, name, fb, synapse=syn, post_dims=[0, 1], label=f"{name}.recurrent")
            net.add_input(f"perturb{k}", 2)
            net.connect(f"perturb{k}", name, transform=syn.tau * np.eye(2), synapse=syn, post_dims=[0, 1])
            net.probe(f"xy{k}", name, decoders=xy, synapse=readout)
            self.oscillators.append(OscPopulationHandle(name, pop, fb, xy))

        for e, (i, j, w, phi) in enumerate(topo.couplings()):
            name = f"coupling{e}_{j}to{i}"
            pop = generate_population(self._spec(next(seeds), n, 4, cfg.coupling_radius), cfg.lif)
            net.add_population(name, pop)
            dec = self._solve(pop, _coupling_function(w, phi, cfg), name, coupling_region)
            net.connect(f"osc{i}", name, self.oscillators[i].readout, synapse=ff, post_dims=[0, 1])
            net.connect(f"osc{j}", name, self.oscillators[j].readout, synapse=ff, post_dims=[2, 3])
            net.connect(name, f"osc{i}", dec, synapse=syn, post_dims=[2])
            self.couplings.append(CouplingPopulationHandle(name, i, j, pop, dec))

        for side, members in (("left", topo.left), ("right", topo.right)):
            seq = next(seeds)
            if cfg.drive_mode == "spiking":
                n_drive = cfg.drive_neurons or n
                name = f"drive_{side}"
                pop = generate_population(self._spec(seq, n_drive, 1, cfg.drive_radius), cfg.lif)
                net.add_population(name, pop)
                net.add_input(f"{side}_drive", 1)
                net.connect(f"{side}_drive", name, synapse=ff)
                dec = self._solve(pop, _drive_function(cfg), name)
                for k in members:
                    net.connect(name, f"osc{k}", dec, synapse=syn, post_dims=[2, 3])
                self.drives[side] = pop
            else:
                net.add_input(f"{side}_targets", 2)
                for k in members:
                    net.connect(f"{side}_targets", f"osc{k}", synapse=syn, post_dims=[2, 3])

        net.probe("spikes", "osc0", kind="spikes",
                  neurons=np.arange(min(cfg.spike_probe_neurons, n)))

    # --- running ----------------------------------------------------------------------

    def _set_drive(self, drive: DriveSignal):
        cfg = self.config
        for side, d in (("left", drive.d_left), ("right", drive.d_right)):
            if cfg.drive_mode == "spiking":
                self.sim.set_input(f"{side}_drive", d)
            else:
                omega, R = cpg_math.saturate_drive(d, cfg.cpg.drive_map)
                self.sim.set_input(f"{side}_targets", [omega / cfg.omega_scale, R])

    def step(self, drive: DriveSignal, perturbations=(), t=None) -> np.ndarray:
        """Advance one ``dt`` and return the joint set-points."""
        t = self.sim.t if t is None else float(t)
        if t < self._last_t:
            raise ConfigError(f"time went backwards: {t} < {self._last_t}")
        self._last_t = t
        self._set_drive(drive)
        active = np.zeros(self.topology.n_oscillators, dtype=bool)
        values = np.zeros((self.topology.n_oscillators, 2))
        if t < self.config.kick_duration:
            active[:] = True
            values += self._kick
        for p in perturbations:
            if not 0 <= p.oscillator_index < self.topology.n_oscillators:
                raise ConfigError(f"perturbation index {p.oscillator_index} out of range")
            if p.active(t):
                active[p.oscillator_index] = True
                values[p.oscillator_index] += p.injected_value
        for k in np.flatnonzero(active | self._perturb_active):
            self.sim.set_input(f"perturb{k}", values[k])
        self._perturb_active = active
        try:
            self.sim.step()
        except DivergenceError as exc:
            raise DivergenceError(f"spiking CPG diverged: {exc}", module=exc.module, t=self.sim.t) from exc
        psi = cpg_math.motor_output(self.decoded_xy(), self.topology, self.config.cpg.output_map)
        self._psi.append(psi)
        return psi

    def decoded_xy(self) -> np.ndarray:
        """Current readout ``(n_oscillators, 2)``."""
        probes = self.network.probes
        return np.array([probes[f"xy{k}"].data[-1] for k in range(self.topology.n_oscillators)])

    def probe(self, what):
        """Recorded series: ``decoded_xy`` ``(T, n, 2)``, ``psi`` ``(T, n_segments)``,
        ``spikes`` events ``(m, 2)`` of ``(t, neuron)``, or ``t``."""
        if what == "decoded_xy":
            return np.stack([self.sim.probe_data(f"xy{k}") for k in range(self.topology.n_oscillators)], axis=1)
        if what == "psi":
            return np.array(self._psi).reshape(-1, self.topology.n_segments)
        if what == "spikes":
            return self.sim.probe_data("spikes")
        if what == "t":
            return self.sim.trange()
        raise ConfigError(f"unknown probe {what!r}; expected decoded_xy, psi, spikes or t")

    @property
    def n_populations(self) -> dict:
        return {"oscillator": len(self.oscillators), "coupling": len(self.couplings), "drive": len(self.drives)}


def build_scpg(config: ScpgConfig) -> ScpgNetwork:
    return ScpgNetwork(config)


def step(net: ScpgNetwork, drive: DriveSignal, perturbations=(), t=None) -> np.ndarray:
    return net.step(drive, perturbations, t)


def probe(net: ScpgNetwork, what):
    return net.probe(what)
