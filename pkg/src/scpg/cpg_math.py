"""Non-spiking coupled-oscillator CPG.

Two equivalent forms of the same double-chain oscillator network:

* phase form: per-oscillator ``(theta, r, r_dot)`` with a second-order
  amplitude controller,
* Cartesian form: per-oscillator ``(x, y)`` Hopf-like dynamics whose
  instantaneous frequency is biased by the coupling terms.

States are plain arrays: Cartesian states have shape ``(n, 2)`` with columns
``x, y``; phase states have shape ``(n, 3)`` with columns ``theta, r, r_dot``.
Oscillator ``2k`` is the left oscillator of joint ``k`` and ``2k + 1`` the
right one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateStateError, DivergenceError, TopologyError

CONVENTIONS = ("prose", "equation")
OUTPUT_MAPS = ("cartesian", "offset")


@dataclass(frozen=True)
class DriveMap:
    """Saturating linear maps from tonic drive to target frequency and amplitude."""

    c_omega_1: float = 2 * math.pi * 0.4
    c_omega_0: float = 2 * math.pi * 0.3
    c_R_1: float = 0.1
    c_R_0: float = 0.2
    d_low: float = 1.0
    d_high: float = 5.0

    def __post_init__(self):
        if not self.d_low < self.d_high:
            raise ConfigError(f"d_low ({self.d_low}) must be < d_high ({self.d_high})")
        if self.c_omega_1 < 0 or self.c_R_1 < 0:
            raise ConfigError("drive map slopes must be non-negative")

    @property
    def omega_max(self) -> float:
        return self.c_omega_1 * self.d_high + self.c_omega_0

    @property
    def R_max(self) -> float:
        return self.c_R_1 * self.d_high + self.c_R_0


@dataclass(frozen=True)
class DriveSignal:
    d_left: float
    d_right: float

    def __post_init__(self):
        for v in (self.d_left, self.d_right):
            if not math.isfinite(v) or v < 0:
                raise ConfigError(f"drive values must be finite and >= 0, got {v}")

    def mirrored(self) -> DriveSignal:
        return DriveSignal(self.d_right, self.d_left)


@dataclass(frozen=True)
class OscillatorParams:
    """Per-oscillator parameters; each field is a scalar or an array of length n.

    ``a`` is the amplitude convergence gain, ``omega`` the intrinsic angular
    frequency (rad/s) and ``R`` the target amplitude.
    """

    a: np.ndarray | float
    omega: np.ndarray | float
    R: np.ndarray | float

    def __post_init__(self):
        if np.any(np.asarray(self.a) <= 0):
            raise ConfigError("amplitude gain a must be > 0")
        if np.any(np.asarray(self.R) < 0) or np.any(np.asarray(self.omega) < 0):
            raise ConfigError("omega and R must be >= 0")


@dataclass(frozen=True)
class ChainTopology:
    """Directed coupling edges of the double chain.

    Edge ``e`` means oscillator ``target[e]`` receives from ``source[e]`` with
    weight ``weight[e]`` (1/s) and phase bias ``phase_bias[e]``: at the
    locked state ``theta[source] - theta[target] == phase_bias``.
    """

    n_segments: int
    target: np.ndarray
    source: np.ndarray
    weight: np.ndarray
    phase_bias: np.ndarray
    output_gain: float = 0.5
    total_phase_lag: float = 2 * math.pi

    def __post_init__(self):
        n = self.n_oscillators
        for arr in (self.target, self.source):
            if len(arr) and (np.min(arr) < 0 or np.max(arr) >= n):
                raise TopologyError(f"coupling index out of range for {n} oscillators")

    @property
    def n_oscillators(self) -> int:
        return 2 * self.n_segments

    @property
    def n_couplings(self) -> int:
        return len(self.target)

    @property
    def left(self) -> np.ndarray:
        return np.arange(0, self.n_oscillators, 2)

    @property
    def right(self) -> np.ndarray:
        return np.arange(1, self.n_oscillators, 2)

    def couplings(self):
        """Iterate ``(i, j, w_ij, phi_ij)`` tuples."""
        for i, j, w, phi in zip(self.target, self.source, self.weight, self.phase_bias):
            yield int(i), int(j), float(w), float(phi)

    def weight_matrix(self) -> np.ndarray:
        W = np.zeros((self.n_oscillators, self.n_oscillators))
        W[self.target, self.source] = self.weight
        return W

    def phase_bias_matrix(self) -> np.ndarray:
        P = np.zeros((self.n_oscillators, self.n_oscillators))
        P[self.target, self.source] = self.phase_bias
        return P


@dataclass(frozen=True)
class CpgConfig:
    """Everything needed to instantiate the double-chain CPG."""

    n_segments: int = 8
    total_phase_lag: float = 2 * math.pi
    coupling_weight: float = 10.0
    output_gain: float = 0.5
    amplitude_gain: float = 10.0
    phase_amplitude_gain: float = 10.0
    epsilon_r: float = 1e-6
    convention: str = "prose"
    output_map: str = "cartesian"
    drive_map: DriveMap = DriveMap()

    def __post_init__(self):
        if self.n_segments < 1:
            raise ConfigError("n_segments must be >= 1")
        if self.amplitude_gain <= 0 or self.phase_amplitude_gain <= 0:
            raise ConfigError("amplitude gains must be > 0")
        if self.epsilon_r <= 0:
            raise ConfigError("epsilon_r must be > 0")
        _coupling_sign(self.convention)
        if self.output_map not in OUTPUT_MAPS:
            raise ConfigError(f"output_map must be one of {OUTPUT_MAPS}, got {self.output_map!r}")

    def topology(self) -> ChainTopology:
        return build_topology(self.n_segments, self.total_phase_lag, self.coupling_weight, self.output_gain)


def build_topology(n_segments=8, total_phase_lag=2 * math.pi, w=10.0, alpha=0.5) -> ChainTopology:
    """Double chain: ipsilateral neighbours plus one contralateral partner.

    The wave travels head to tail, so a caudal oscillator lags its rostral
    neighbour by ``total_phase_lag / n_segments``.
    """
    if n_segments < 1:
        raise ConfigError("n_segments must be >= 1")
    lag = total_phase_lag / n_segments
    edges = []
    for k in range(n_segments):
        left, right = 2 * k, 2 * k + 1
        edges.append((left, right, math.pi))
        edges.append((right, left, math.pi))
    for side in (0, 1):
        for k in range(n_segments - 1):
            rostral, caudal = 2 * k + side, 2 * (k + 1) + side
            edges.append((rostral, caudal, -lag))
            edges.append((caudal, rostral, lag))
    target, source, phi = (np.array(c) for c in zip(*edges))
    return ChainTopology(
        n_segments=n_segments,
        target=target.astype(int),
        source=source.astype(int),
        weight=np.full(len(edges), float(w)),
        phase_bias=phi.astype(float),
        output_gain=float(alpha),
        total_phase_lag=float(total_phase_lag),
    )


def saturate_drive(d, drive_map: DriveMap):
    """Return ``(omega, R)`` for drive ``d`` (scalar or array); zero outside the band."""
    d = np.asarray(d, dtype=float)
    inside = (d >= drive_map.d_low) & (d <= drive_map.d_high)
    omega = np.where(inside, drive_map.c_omega_1 * d + drive_map.c_omega_0, 0.0)
    R = np.where(inside, drive_map.c_R_1 * d + drive_map.c_R_0, 0.0)
    if omega.ndim == 0:
        return float(omega), float(R)
    return omega, R


def params_from_drive(topo: ChainTopology, drive: DriveSignal, drive_map: DriveMap, a=10.0) -> OscillatorParams:
    """Per-oscillator parameters for a left/right drive pair."""
    d = np.empty(topo.n_oscillators)
    d[topo.left] = drive.d_left
    d[topo.right] = drive.d_right
    omega, R = saturate_drive(d, drive_map)
    return OscillatorParams(a=np.full(topo.n_oscillators, float(a)), omega=omega, R=R)


def _coupling_sign(convention):
    if convention == "prose":
        return 1.0
    if convention == "equation":
        return -1.0
    raise ConfigError(f"unknown coupling convention {convention!r}; expected one of {CONVENTIONS}")


def phase_derivatives(states, params: OscillatorParams, topo: ChainTopology, convention="prose"):
    """Right-hand side of the phase form; returns ``(n, 3)`` of ``(theta_dot, r_dot, r_ddot)``."""
    states = np.asarray(states, dtype=float)
    n = topo.n_oscillators
    if states.shape != (n, 3):
        raise TopologyError(f"expected phase state of shape {(n, 3)}, got {states.shape}")
    theta, r, r_dot = states.T
    i, j = topo.target, topo.source
    if convention == "prose":
        arg = theta[j] - theta[i] - topo.phase_bias
    else:
        _coupling_sign(convention)
        arg = theta[i] - theta[j] - topo.phase_bias
    contrib = r[j] * topo.weight * np.sin(arg)
    theta_dot = np.broadcast_to(params.omega, (n,)) + np.bincount(i, weights=contrib, minlength=n)
    a = np.broadcast_to(params.a, (n,))
    r_ddot = a * (a / 4.0 * (params.R - r) - r_dot)
    return np.column_stack([theta_dot, r_dot, r_ddot])


def coupling_frequency_term(xi, yi, xj, yj, w, phi, epsilon_r=1e-6, convention="prose"):
    """Contribution of oscillator j to the instantaneous frequency of oscillator i.

    Equals ``w * r_j * sin(theta_j - theta_i - phi)`` (prose convention) with
    the ``1 / r_i`` factor clamped at ``epsilon_r``.
    """
    sign = _coupling_sign(convention)
    ri = np.maximum(np.hypot(xi, yi), epsilon_r)
    cross = xi * yj - xj * yi
    dot = xi * xj + yi * yj
    return w / ri * (cross * np.cos(phi) - sign * dot * np.sin(phi)) * sign


def cart_derivatives(states, params: OscillatorParams, topo: ChainTopology, epsilon_r=1e-6,
                     convention="prose", strict=False):
    """Right-hand side of the Cartesian form; returns ``(n, 2)`` of ``(x_dot, y_dot)``.

    With ``strict=True`` a coupled oscillator with ``r < epsilon_r`` raises
    :class:`DegenerateStateError` instead of being clamped.
    """
    states = np.asarray(states, dtype=float)
    n = topo.n_oscillators
    if states.shape != (n, 2):
        raise TopologyError(f"expected Cartesian state of shape {(n, 2)}, got {states.shape}")
    x, y = states.T
    i, j = topo.target, topo.source
    if strict:
        r = np.hypot(x, y)
        coupled = np.unique(i[topo.weight != 0])
        bad = coupled[r[coupled] < epsilon_r]
        if len(bad):
            raise DegenerateStateError(f"oscillators {bad.tolist()} at the origin with active coupling")
    contrib = coupling_frequency_term(x[i], y[i], x[j], y[j], topo.weight, topo.phase_bias,
                                      epsilon_r, convention)
    omega_bar = np.broadcast_to(params.omega, (n,)) + np.bincount(i, weights=contrib, minlength=n)
    radial = params.a * (np.square(params.R) - (x * x + y * y))
    return np.column_stack([radial * x - omega_bar * y, radial * y + omega_bar * x])


def motor_output(states, topo: ChainTopology, output_map="cartesian") -> np.ndarray:
    """Joint set-points ``alpha * (u_right - u_left)``.

    ``u`` is the raw x coordinate for ``output_map="cartesian"``.  With
    ``"offset"`` it is ``x + r``, i.e. ``r (1 + cos theta)`` written in
    Cartesian coordinates, so unequal left/right amplitudes shift the
    set-point centre and bend the body.  ``states`` is ``(n, 2)``, or x alone
    for the cartesian map.
    """
    if output_map not in OUTPUT_MAPS:
        raise ConfigError(f"output_map must be one of {OUTPUT_MAPS}, got {output_map!r}")
    states = np.asarray(states, dtype=float)
    x = states[:, 0] if states.ndim == 2 else states
    if x.shape[0] != topo.n_oscillators:
        raise TopologyError(f"expected {topo.n_oscillators} oscillators, got {x.shape[0]}")
    if output_map == "offset":
        if states.ndim != 2:
            raise ConfigError("the offset output map needs (x, y) states")
        x = x + np.hypot(states[:, 0], states[:, 1])
    return topo.output_gain * (x[1::2] - x[0::2])


def phase_output(states) -> np.ndarray:
    """Phase-form oscillator output ``r (1 + cos theta)``."""
    states = np.asarray(states, dtype=float)
    return states[:, 1] * (1.0 + np.cos(states[:, 0]))


def phase_to_cart(states) -> np.ndarray:
    states = np.asarray(states, dtype=float)
    return np.column_stack([states[:, 1] * np.cos(states[:, 0]), states[:, 1] * np.sin(states[:, 0])])


def cart_to_phase(states, r_dot=None) -> np.ndarray:
    states = np.asarray(states, dtype=float)
    theta = np.arctan2(states[:, 1], states[:, 0])
    r = np.hypot(states[:, 0], states[:, 1])
    rd = np.zeros_like(r) if r_dot is None else np.asarray(r_dot, dtype=float)
    return np.column_stack([theta, r, rd])


def _rhs(form):
    if form == "cartesian":
        return cart_derivatives
    if form == "phase":
        return phase_derivatives
    raise ConfigError(f"unknown model form {form!r}")


def integrate_step(states, params: OscillatorParams, topo: ChainTopology, dt: float,
                   method="rk4", form="cartesian", forcing=None, **kwargs) -> np.ndarray:
    """Advance one fixed step of the chosen model form.

    ``forcing`` is an optional constant added to the state derivative over the
    step (external input).  Extra keyword arguments go to the derivative
    function (``convention``, ``epsilon_r`` ...).
    """
    if dt < 0:
        raise ConfigError(f"dt must be >= 0, got {dt}")
    states = np.asarray(states, dtype=float)
    if dt == 0:
        return states.copy()
    f = _rhs(form)

    def rhs(s):
        ds = f(s, params, topo, **kwargs)
        return ds if forcing is None else ds + forcing

    if method == "euler":
        out = states + dt * rhs(states)
    elif method == "rk4":
        k1 = rhs(states)
        k2 = rhs(states + 0.5 * dt * k1)
        k3 = rhs(states + 0.5 * dt * k2)
        k4 = rhs(states + dt * k3)
        out = states + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    else:
        raise ConfigError(f"unknown integration method {method!r}")
    if not np.all(np.isfinite(out)):
        raise DivergenceError(f"{form} oscillator state became non-finite", module="cpg-math")
    return out


def hopf_radius(t, r0, a, R):
    """Closed-form amplitude of an uncoupled Cartesian oscillator at time ``t``."""
    u0 = r0 * r0
    R2 = R * R
    return np.sqrt(R2 / (1.0 + (R2 / u0 - 1.0) * np.exp(-2.0 * a * R2 * t)))


def random_cart_state(n, rng, scale=0.05) -> np.ndarray:
    """Small random Cartesian initial condition."""
    theta = rng.uniform(0.0, 2 * math.pi, n)
    r = rng.uniform(0.5, 1.0, n) * scale
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])
