"""Neural populations: random encoders and tuning curves."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from .neurons import LifParams, lif_rate, max_rate_current


@dataclass(frozen=True)
class PopulationSpec:
    n_neurons: int
    dimensions: int
    radius: float = 1.0
    max_rate_range: tuple[float, float] = (200.0, 400.0)
    intercept_range: tuple[float, float] = (-1.0, 1.0)
    seed: int = 0

    def __post_init__(self):
        if self.n_neurons < 1:
            raise ConfigError("n_neurons must be >= 1")
        if self.dimensions < 1:
            raise ConfigError("dimensions must be >= 1")
        if self.radius <= 0:
            raise ConfigError("radius must be > 0")
        lo, hi = self.intercept_range
        if not -1.0 <= lo <= hi < 1.0 + 1e-12:
            raise ConfigError(f"intercept_range must lie in [-1, 1), got {self.intercept_range}")
        if not 0 < self.max_rate_range[0] <= self.max_rate_range[1]:
            raise ConfigError(f"invalid max_rate_range {self.max_rate_range}")


@dataclass(frozen=True, eq=False)
class Population:
    """A generated LIF ensemble.

    Inputs are represented vectors in the population's own units; the
    currents are ``gain * (encoder . x / radius) + bias``.  Membrane state is
    owned by the simulator, not by this object, so one population can be
    reused by several simulators.
    """

    spec: PopulationSpec
    lif: LifParams
    encoders: np.ndarray
    gains: np.ndarray
    biases: np.ndarray
    max_rates: np.ndarray
    intercepts: np.ndarray

    @property
    def n_neurons(self) -> int:
        return self.spec.n_neurons

    @property
    def dimensions(self) -> int:
        return self.spec.dimensions

    @property
    def radius(self) -> float:
        return self.spec.radius

    def currents(self, x) -> np.ndarray:
        """Input currents for represented values ``x`` of shape ``(m, d)`` or ``(d,)``."""
        x = np.asarray(x, dtype=float)
        return self.gains * (x @ self.encoders.T / self.radius) + self.biases

    def rates(self, x) -> np.ndarray:
        """Steady-state rates (Hz) at represented values ``x``."""
        return lif_rate(self.currents(x), self.lif)


def sample_sphere(n, d, rng) -> np.ndarray:
    """``n`` points uniform on the unit sphere in ``d`` dimensions."""
    v = rng.standard_normal((n, d))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    # a zero draw has probability ~0; resample it deterministically to +e0
    v[norms[:, 0] == 0] = np.eye(d)[0]
    norms[norms == 0] = 1.0
    return v / norms


def sample_ball(n, d, radius, rng) -> np.ndarray:
    """``n`` points uniform in the solid ball of the given radius."""
    directions = sample_sphere(n, d, rng)
    return directions * (radius * rng.uniform(0.0, 1.0, (n, 1)) ** (1.0 / d))


def generate_population(spec: PopulationSpec, lif: LifParams = LifParams()) -> Population:
    """Sample encoders, intercepts and max rates, then solve gains and biases.

    Each neuron is exactly at threshold at ``intercept * radius`` along its
    encoder and fires at its sampled max rate at ``radius``.
    """
    rng = np.random.default_rng(spec.seed)
    encoders = sample_sphere(spec.n_neurons, spec.dimensions, rng)
    max_rates = rng.uniform(*spec.max_rate_range, spec.n_neurons)
    intercepts = rng.uniform(*spec.intercept_range, spec.n_neurons)
    j_max = max_rate_current(max_rates, lif)
    gains = (j_max - lif.v_threshold) / (1.0 - intercepts)
    biases = lif.v_threshold - gains * intercepts
    return Population(spec, lif, encoders, gains, biases, max_rates, intercepts)
