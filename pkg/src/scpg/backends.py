"""Interchangeable CPG backends with one stepping interface.

Both backends expose ``step(drive, perturbations, t) -> psi``,
``decoded_xy()`` and ``probe(what)``.  Perturbations act the same way in
both: the injected ``(x, y)`` value is added to the state derivative while the
perturbation is active.
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from . import cpg_math
from .cpg_math import CpgConfig, DriveSignal
from .errors import ConfigError
from .network import PerturbationSpec, ScpgConfig, build_scpg

BACKENDS = ("ideal", "spiking")


class IdealCpg:
    """RK4-integrated Cartesian reference model."""

    def __init__(self, cpg: CpgConfig = CpgConfig(), dt=0.001, seed=0, init_scale=0.05, method="rk4"):
        if dt <= 0:
            raise ConfigError("dt must be > 0")
        self.config = cpg
        self.topology = cpg.topology()
        self.dt = float(dt)
        self.method = method
        self.state = cpg_math.random_cart_state(self.topology.n_oscillators, np.random.default_rng(seed),
                                                init_scale)
        self.n_steps = 0
        self._last_t = -math.inf
        self._xy: list[np.ndarray] = []
        self._psi: list[np.ndarray] = []
        self.build_time = 0.0

    @property
    def t(self) -> float:
        return self.n_steps * self.dt

    def step(self, drive: DriveSignal, perturbations=(), t=None) -> np.ndarray:
        cfg, topo = self.config, self.topology
        t = self.t if t is None else float(t)
        if t < self._last_t:
            raise ConfigError(f"time went backwards: {t} < {self._last_t}")
        self._last_t = t
        params = cpg_math.params_from_drive(topo, drive, cfg.drive_map, cfg.amplitude_gain)
        forcing = None
        for p in perturbations:
            if not 0 <= p.oscillator_index < topo.n_oscillators:
                raise ConfigError(f"perturbation index {p.oscillator_index} out of range")
            if p.active(t):
                forcing = np.zeros_like(self.state) if forcing is None else forcing
                forcing[p.oscillator_index] += p.injected_value
        self.state = cpg_math.integrate_step(self.state, params, topo, self.dt, method=self.method,
                                             forcing=forcing, epsilon_r=cfg.epsilon_r,
                                             convention=cfg.convention)
        self.n_steps += 1
        psi = cpg_math.motor_output(self.state, topo, cfg.output_map)
        self._xy.append(self.state.copy())
        self._psi.append(psi)
        return psi

    def decoded_xy(self) -> np.ndarray:
        return self.state.copy()

    def probe(self, what):
        n = self.topology.n_oscillators
        if what == "decoded_xy":
            return np.array(self._xy).reshape(-1, n, 2)
        if what == "psi":
            return np.array(self._psi).reshape(-1, self.topology.n_segments)
        if what == "t":
            return np.arange(1, self.n_steps + 1) * self.dt
        if what == "spikes":
            raise ConfigError("the ideal backend has no spikes")
        raise ConfigError(f"unknown probe {what!r}; expected decoded_xy, psi, spikes or t")


def make_backend(backend: str, net: ScpgConfig, seed=None):
    """Instantiate a backend; ``seed`` overrides the network config's seed."""
    seed = net.seed if seed is None else seed
    if backend == "ideal":
        return IdealCpg(net.cpg, dt=net.dt, seed=seed)
    if backend == "spiking":
        return build_scpg(replace(net, seed=seed))
    raise ConfigError(f"unknown backend {backend!r}; expected one of {BACKENDS}")


__all__ = ["BACKENDS", "IdealCpg", "PerturbationSpec", "make_backend"]
