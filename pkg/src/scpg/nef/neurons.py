"""Leaky integrate-and-fire neurons with a normalised membrane."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError


THRESHOLD_RTOL = 1e-12


@dataclass(frozen=True)
class LifParams:
    tau_rc: float = 0.02
    tau_ref: float = 0.002
    v_threshold: float = 1.0

    def __post_init__(self):
        if self.tau_rc <= 0:
            raise ConfigError("tau_rc must be > 0")
        if self.tau_ref < 0:
            raise ConfigError("tau_ref must be >= 0")
        if self.v_threshold <= 0:
            raise ConfigError("v_threshold must be > 0")


def lif_rate(J, params: LifParams = LifParams()):
    """Steady-state firing rate (Hz) for constant input current ``J``."""
    J = np.asarray(J, dtype=float)
    out = np.zeros_like(J)
    # currents within round-off of threshold count as threshold: the rate curve
    # has infinite slope there, so one ulp above would otherwise give ~1.4 Hz
    above = J > params.v_threshold * (1.0 + THRESHOLD_RTOL)
    out[above] = 1.0 / (params.tau_ref - params.tau_rc * np.log1p(-params.v_threshold / J[above]))
    return out if out.ndim else float(out)


def max_rate_current(max_rate, params: LifParams = LifParams()):
    """Current at which the neuron fires at ``max_rate``."""
    max_rate = np.asarray(max_rate, dtype=float)
    if np.any(1.0 / max_rate <= params.tau_ref):
        raise ConfigError("max rate exceeds the refractory ceiling 1/tau_ref")
    return params.v_threshold / -np.expm1((params.tau_ref - 1.0 / max_rate) / params.tau_rc)


def lif_step(J, voltage, refractory, dt, params: LifParams = LifParams()):
    """Advance membrane state in place by ``dt``; return the boolean spike mask.

    Exponential Euler on ``tau_rc dv/dt = J - v``.  The threshold crossing is
    located inside the step so the refractory hold starts at the true spike
    time rather than at the step boundary.
    """
    active = np.clip(dt - refractory, 0.0, dt)
    voltage -= (J - voltage) * np.expm1(-active / params.tau_rc)
    refractory -= dt
    spiked = voltage > params.v_threshold
    if np.any(spiked):
        Js = J[spiked]
        # time elapsed since the crossing, measured back from the end of the step
        overshoot = (voltage[spiked] - params.v_threshold) / (Js - params.v_threshold)
        since = -params.tau_rc * np.log1p(-np.minimum(overshoot, 1.0 - 1e-12))
        refractory[spiked] = params.tau_ref - since
        voltage[spiked] = 0.0
    np.maximum(voltage, 0.0, out=voltage)
    return spiked
