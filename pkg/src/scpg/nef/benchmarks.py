"""Small reference networks used to check the engine: integrator and oscillators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .decoders import Synapse, recurrent_transform, solve_decoders
from .neurons import LifParams
from .population import PopulationSpec, generate_population
from .simulator import Network, Simulator


@dataclass
class BenchmarkRun:
    t: np.ndarray
    decoded: np.ndarray
    build: Network


def integrator(n_neurons=500, tau=0.1, seed=0, radius=1.5, u=1.0, t_on=1.0, duration=1.5, dt=1e-3,
               regularization=0.1, lif=LifParams()) -> BenchmarkRun:
    """``dx/dt = u`` with a step input of height ``u`` for ``t_on`` seconds."""
    syn = Synapse(tau)
    pop = generate_population(PopulationSpec(n_neurons, 1, radius, seed=seed), lif)
    fb = recurrent_transform(lambda x: np.zeros_like(x), syn)
    net = Network("integrator")
    net.add_population("x", pop)
    net.add_input("u", 1)
    D = solve_decoders(pop, fb, regularization=regularization)
    net.connect("x", "x", D, synapse=syn)
    net.connect("u", "x", transform=[[fb.input_gain]], synapse=syn)
    net.probe("x", "x", decoders=solve_decoders(pop, lambda x: x, regularization=regularization),
              synapse=Synapse(0.01))
    sim = Simulator(net, dt=dt, seed=seed)
    for k in range(int(round(duration / dt))):
        sim.step({"u": u if k * dt < t_on else 0.0})
    return BenchmarkRun(sim.trange(), sim.probe_data("x"), net)


def oscillator(n_neurons=500, omega=2 * math.pi, tau=0.1, seed=0, duration=10.0, dt=1e-3, controlled=False,
               a=10.0, R=0.7, omega_scale=None, radius=1.5, kick=(1.0, 0.0), kick_duration=0.05,
               regularization=0.05, lif=LifParams(), mode="spiking") -> BenchmarkRun:
    """Recurrent oscillator on the decoded (x, y) plane.

    ``controlled=False``: 2-D harmonic oscillator ``x' = -omega y, y' = omega x``.
    ``controlled=True``: 3-D population ``[x, y, omega / omega_scale]`` whose
    frequency dimension is held by an input, with the Hopf-like radial term
    ``a (R^2 - r^2)`` giving a limit cycle of radius ``R``.  A brief input
    ``kick`` (per second) starts the motion.
    """
    syn = Synapse(tau)
    dims = 3 if controlled else 2
    scale = omega if omega_scale is None else omega_scale

    if controlled:
        def f(s):
            w = s[2] * scale
            rad = a * (R * R - s[0] ** 2 - s[1] ** 2)
            return np.array([rad * s[0] - w * s[1], rad * s[1] + w * s[0]])

        def g(s):
            return tau * f(s) + s[:2]

        input_gain = tau
    else:
        g = recurrent_transform(lambda s: np.array([-omega * s[1], omega * s[0]]), syn)
        input_gain = g.input_gain

    pop = generate_population(PopulationSpec(n_neurons, dims, radius, seed=seed), lif)
    net = Network("oscillator")
    net.add_population("osc", pop)
    D = solve_decoders(pop, g, regularization=regularization)
    net.connect("osc", "osc", D, synapse=syn, post_dims=[0, 1])
    net.add_input("kick", 2)
    net.connect("kick", "osc", transform=input_gain * np.eye(2), synapse=syn, post_dims=[0, 1])
    if controlled:
        net.add_input("omega", 1)
        net.connect("omega", "osc", synapse=syn, post_dims=[2])
    xy = solve_decoders(pop, lambda s: s[:2], regularization=regularization)
    net.probe("xy", "osc", decoders=xy, synapse=Synapse(0.01))
    sim = Simulator(net, dt=dt, seed=seed, mode=mode)
    kick = np.asarray(kick, dtype=float)
    for k in range(int(round(duration / dt))):
        inputs = {"kick": kick / kick_duration if k * dt < kick_duration else np.zeros(2)}
        if controlled:
            inputs["omega"] = omega / scale
        sim.step(inputs)
    return BenchmarkRun(sim.trange(), sim.probe_data("xy"), net)
