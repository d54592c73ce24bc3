"""Least-squares decoders and the recurrent dynamics transform."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ..errors import ConfigError, ScpgError
from .population import Population, sample_ball


@dataclass(frozen=True)
class Synapse:
    """First-order low-pass synapse, impulse response ``exp(-t / tau) / tau``."""

    tau: float = 0.1

    def __post_init__(self):
        if self.tau <= 0:
            raise ConfigError("synapse tau must be > 0")

    def decay(self, dt: float) -> float:
        return math.exp(-dt / self.tau)


@dataclass(frozen=True, eq=False)
class DecoderMatrix:
    weights: np.ndarray
    target_description: str = ""

    def __post_init__(self):
        if self.weights.ndim != 2:
            raise ConfigError("decoder weights must be a 2-D matrix")
        if not np.all(np.isfinite(self.weights)):
            raise ScpgError(f"non-finite decoder weights for {self.target_description!r}")

    @property
    def n_neurons(self) -> int:
        return self.weights.shape[0]

    @property
    def output_dimensions(self) -> int:
        return self.weights.shape[1]


def default_n_eval_points(pop: Population) -> int:
    return max(500, int(10 * pop.dimensions * math.sqrt(pop.n_neurons)))


def evaluate_target(target_fn, points) -> np.ndarray:
    """Apply a vector -> vector function to each row of ``points``."""
    out = np.array([np.atleast_1d(np.asarray(target_fn(p), dtype=float)) for p in points])
    return out.reshape(len(points), -1)


def regularized_objective(A, F, D, lam) -> float:
    return float(np.sum(np.square(A @ D - F)) + lam * np.sum(np.square(D)))


def ridge_penalty(A, regularization) -> float:
    """``lambda = (regularization * max rate)^2 * n_eval_points``."""
    return (regularization * float(A.max())) ** 2 * A.shape[0]


def solve_decoders(pop: Population, target_fn, n_eval_points=None, regularization=0.1,
                   eval_points=None, seed=None, label=None) -> DecoderMatrix:
    """Solve ``min_D |A D - F|^2 + lambda |D|^2`` over points sampled in the ball.

    ``target_fn`` maps one represented vector to one output vector.  Points
    are drawn uniformly in the population's ball with a generator seeded from
    ``seed`` (defaults to the population seed) unless ``eval_points`` is given.
    """
    if eval_points is None:
        n = default_n_eval_points(pop) if n_eval_points is None else int(n_eval_points)
        rng = np.random.default_rng(pop.spec.seed if seed is None else seed)
        eval_points = sample_ball(n, pop.dimensions, pop.radius, rng)
    eval_points = np.asarray(eval_points, dtype=float)
    A = pop.rates(eval_points)
    F = evaluate_target(target_fn, eval_points)
    lam = ridge_penalty(A, regularization)
    if lam <= 0 and regularization > 0:
        raise ScpgError(f"population {label or ''} is silent on every evaluation point")
    G = A.T @ A
    G[np.diag_indices_from(G)] += lam
    try:
        D = scipy.linalg.solve(G, A.T @ F, assume_a="pos")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise ScpgError(f"decoder solve failed for {label or 'population'}: {exc}") from exc
    return DecoderMatrix(D, label or getattr(target_fn, "__name__", "function"))


def decode(activity, decoders: DecoderMatrix) -> np.ndarray:
    """Linear readout of (filtered) activities of shape ``(n,)`` or ``(m, n)``."""
    activity = np.asarray(activity, dtype=float)
    if activity.shape[-1] != decoders.n_neurons:
        raise ConfigError(
            f"activity has {activity.shape[-1]} neurons, decoders expect {decoders.n_neurons}")
    return activity @ decoders.weights


def recurrent_transform(f, synapse: Synapse):
    """Feedback function that makes a recurrent population follow ``dx/dt = f(x, ...)``.

    The returned ``g(x, *inputs) = tau * f(x, *inputs) + x`` is decoded on the
    recurrent connection; any external input ``u`` driving the same dynamics
    must be scaled by ``tau`` (available as ``g.input_gain``).
    """
    tau = synapse.tau

    def feedback(x, *inputs):
        x = np.asarray(x, dtype=float)
        return tau * np.asarray(f(x, *inputs), dtype=float) + x

    feedback.input_gain = tau
    feedback.__name__ = f"recurrent({getattr(f, '__name__', 'f')})"
    return feedback
