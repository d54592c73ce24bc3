"""Planar multi-link swimmer with anisotropic quadratic drag.

The body is an open chain of ``n_links`` rigid links, link 0 being the head.
Dynamics are written in absolute link angles plus the position of the total
centre of mass, which decouples translation from rotation in the mass
matrix: the centre of mass is driven by the summed external force only, so
internal joint forces cannot change the body's momentum.

Joint ``j`` (1-based) sits between links ``j - 1`` and ``j`` and its angle is
``joint_sign * (theta_j - theta_{j-1})``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DivergenceError


@dataclass(frozen=True)
class DragParams:
    c_parallel: float = 0.1
    c_perpendicular: float = 1.0
    surface_parallel: float = 2.7e-3
    surface_perpendicular: float = 2.7e-3
    rho: float = 1000.0

    def __post_init__(self):
        for name in ("c_parallel", "c_perpendicular", "surface_parallel", "surface_perpendicular", "rho"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")

    @property
    def lambda_parallel(self) -> float:
        return 0.5 * self.c_parallel * self.surface_parallel * self.rho

    @property
    def lambda_perpendicular(self) -> float:
        return 0.5 * self.c_perpendicular * self.surface_perpendicular * self.rho


@dataclass(frozen=True)
class PdGains:
    kp: float = 2.0
    kd: float = 0.02
    torque_limit: float = 1.0

    def __post_init__(self):
        if self.kp < 0 or self.kd < 0:
            raise ConfigError("PD gains must be >= 0")
        if self.torque_limit <= 0:
            raise ConfigError("torque_limit must be > 0")


@dataclass(frozen=True)
class FluidField:
    """Ambient current, uniform everywhere unless a boundary is given.

    With ``boundary_normal`` set, the current acts only on the side
    ``normal . p >= boundary_offset``, ramping in linearly over
    ``boundary_width`` metres.
    """

    current_velocity: tuple[float, float] = (0.0, 0.0)
    boundary_normal: tuple[float, float] | None = None
    boundary_offset: float = 0.0
    boundary_width: float = 0.0

    def __post_init__(self):
        if not np.all(np.isfinite(self.current_velocity)):
            raise ConfigError("fluid current must be finite")
        if self.boundary_normal is not None and not np.hypot(*self.boundary_normal) > 0:
            raise ConfigError("boundary_normal must be a nonzero vector")
        if self.boundary_width < 0:
            raise ConfigError("boundary_width must be >= 0")

    @property
    def velocity(self) -> np.ndarray:
        return np.asarray(self.current_velocity, dtype=float)

    def velocity_at(self, points) -> np.ndarray:
        """Current at ``points`` of shape ``(n, 2)``."""
        points = np.asarray(points, dtype=float)
        if self.boundary_normal is None:
            return np.broadcast_to(self.velocity, points.shape)
        n = np.asarray(self.boundary_normal, float)
        s = points @ (n / np.hypot(*n)) - self.boundary_offset
        if self.boundary_width > 0:
            w = np.clip(s / self.boundary_width + 0.5, 0.0, 1.0)
        else:
            w = (s >= 0).astype(float)
        return w[:, None] * self.velocity


@dataclass(frozen=True)
class BodyConfig:
    n_links: int = 9
    link_length: float = 0.09
    link_mass: float = 0.1
    link_inertia: float | None = None
    drag: DragParams = field(default_factory=DragParams)
    pd: PdGains = field(default_factory=PdGains)
    joint_sign: int = -1
    joint_limit: float = math.pi / 2
    limit_stiffness: float = 20.0

    def __post_init__(self):
        if self.n_links < 2:
            raise ConfigError("n_links must be >= 2")
        if self.link_length <= 0 or self.link_mass <= 0:
            raise ConfigError("link length and mass must be > 0")
        if self.link_inertia is not None and self.link_inertia <= 0:
            raise ConfigError("link_inertia must be > 0")
        if self.joint_sign not in (-1, 1):
            raise ConfigError("joint_sign must be +1 or -1")
        if not 0 < self.joint_limit <= math.pi:
            raise ConfigError("joint_limit must lie in (0, pi]")

    @property
    def n_joints(self) -> int:
        return self.n_links - 1

    @property
    def inertia(self) -> float:
        """Link inertia about its own centre (slender rod unless given)."""
        if self.link_inertia is not None:
            return self.link_inertia
        return self.link_mass * self.link_length ** 2 / 12.0

    @property
    def total_mass(self) -> float:
        return self.n_links * self.link_mass


@dataclass(frozen=True, eq=False)
class BodyState:
    """Centre-of-mass position/velocity and absolute link angles/rates.

    ``heading`` is the head link's absolute angle (counter-clockwise
    positive, never wrapped).  Head position and joint angles are derived.
    """

    com: np.ndarray
    com_velocity: np.ndarray
    angles: np.ndarray
    angular_velocity: np.ndarray
    config: BodyConfig

    @property
    def heading(self) -> float:
        return float(self.angles[0])

    @property
    def joint_angles(self) -> np.ndarray:
        return self.config.joint_sign * np.diff(self.angles)

    @property
    def joint_velocities(self) -> np.ndarray:
        return self.config.joint_sign * np.diff(self.angular_velocity)

    @property
    def link_positions(self) -> np.ndarray:
        return self.com + _relative_positions(self.angles, self.config)

    @property
    def head_position(self) -> np.ndarray:
        return self.link_positions[0]

    @property
    def link_velocities(self) -> np.ndarray:
        return self.com_velocity + _relative_velocities(self.angles, self.angular_velocity, self.config)

    def kinetic_energy(self) -> float:
        cfg = self.config
        rel = _relative_velocities(self.angles, self.angular_velocity, cfg)
        return 0.5 * (cfg.total_mass * float(self.com_velocity @ self.com_velocity)
                      + cfg.link_mass * float(np.sum(rel * rel))
                      + cfg.inertia * float(self.angular_velocity @ self.angular_velocity))

    def momentum(self) -> np.ndarray:
        return self.config.total_mass * self.com_velocity

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in (self.com, self.com_velocity, self.angles, self.angular_velocity))


def initial_state(config: BodyConfig = BodyConfig(), head_position=(0.0, 0.0), heading=0.0,
                  joint_angles=None, velocity=(0.0, 0.0)) -> BodyState:
    """Body at rest (or translating) with its head link centre at ``head_position``."""
    joints = np.zeros(config.n_joints) if joint_angles is None else np.asarray(joint_angles, float)
    if joints.shape != (config.n_joints,):
        raise ConfigError(f"expected {config.n_joints} joint angles")
    angles = heading + np.concatenate([[0.0], np.cumsum(config.joint_sign * joints)])
    rel = _relative_positions(angles, config)
    com = np.asarray(head_position, float) - rel[0]
    return BodyState(com, np.asarray(velocity, float).copy(), angles, np.zeros(config.n_links), config)


def _chain_matrix(config: BodyConfig) -> np.ndarray:
    """``B`` with link centre offsets from the body centre ``rho_k = sum_m B[k, m] u_m``."""
    n, L = config.n_links, config.link_length
    C = np.zeros((n, n))
    for k in range(1, n):
        C[k, 0] = -0.5 * L
        C[k, 1:k] = -L
        C[k, k] = -0.5 * L
    return C - C.mean(axis=0)


def _relative_positions(angles, config) -> np.ndarray:
    u = np.column_stack([np.cos(angles), np.sin(angles)])
    return _chain_matrix(config) @ u


def _relative_velocities(angles, rates, config) -> np.ndarray:
    u_perp = np.column_stack([-np.sin(angles), np.cos(angles)])
    return _chain_matrix(config) @ (u_perp * rates[:, None])


def pd_torque(psi_target, angle, ang_vel, gains: PdGains):
    """Clamped PD law ``kp (target - angle) - kd * ang_vel``."""
    tau = gains.kp * (np.asarray(psi_target, float) - angle) - gains.kd * np.asarray(ang_vel, float)
    tau = np.clip(tau, -gains.torque_limit, gains.torque_limit)
    return float(tau) if np.ndim(tau) == 0 else tau


def drag_force(link_velocity_rel_fluid, link_heading, params: DragParams, link_index=None) -> np.ndarray:
    """Quadratic drag opposing the link-parallel and link-perpendicular velocity components.

    Vectorised: ``link_velocity_rel_fluid`` may be ``(2,)`` or ``(n, 2)`` with
    matching headings.  ``link_index`` is accepted for per-link parameter
    tables; the parameters here are uniform along the body.
    """
    v = np.asarray(link_velocity_rel_fluid, dtype=float)
    h = np.asarray(link_heading, dtype=float)
    t = np.stack([np.cos(h), np.sin(h)], axis=-1)
    n = np.stack([-np.sin(h), np.cos(h)], axis=-1)
    v_par = np.sum(v * t, axis=-1)
    v_perp = np.sum(v * n, axis=-1)
    f_par = -params.lambda_parallel * v_par * np.abs(v_par)
    f_perp = -params.lambda_perpendicular * v_perp * np.abs(v_perp)
    return f_par[..., None] * t + f_perp[..., None] * n


def joint_limit_torque(joint_angles, config: BodyConfig) -> np.ndarray:
    """Stiff restoring torque beyond the mechanical limit."""
    over = np.abs(joint_angles) - config.joint_limit
    return -np.sign(joint_angles) * config.limit_stiffness * np.maximum(over, 0.0)


def _accelerations(state: BodyState, torques, fluid: FluidField):
    cfg = state.config
    B = _chain_matrix(cfg)
    th, w = state.angles, state.angular_velocity
    u = np.column_stack([np.cos(th), np.sin(th)])
    u_perp = np.column_stack([-np.sin(th), np.cos(th)])
    rel = B @ u
    link_v = state.com_velocity + B @ (u_perp * w[:, None])
    forces = drag_force(link_v - fluid.velocity_at(state.com + rel), th, cfg.drag)

    # generalised forces on absolute angles from joint torques
    tau = np.asarray(torques, dtype=float) + joint_limit_torque(state.joint_angles, cfg)
    q = np.zeros(cfg.n_links)
    q[1:] += cfg.joint_sign * tau
    q[:-1] -= cfg.joint_sign * tau
    q += np.einsum("km,mi,ki->m", B, u_perp, forces)

    G = B.T @ B
    dth = th[None, :] - th[:, None]  # theta_n - theta_m
    M = cfg.link_mass * G * np.cos(dth) + cfg.inertia * np.eye(cfg.n_links)
    rhs = q + cfg.link_mass * (G * np.sin(dth)) @ (w * w)
    ang_acc = np.linalg.solve(M, rhs)
    com_acc = forces.sum(axis=0) / cfg.total_mass
    return com_acc, ang_acc, forces


def dynamics_step(state: BodyState, torques, fluid: FluidField, dt: float) -> BodyState:
    """Semi-implicit Euler: velocities first, then positions with the new velocities."""
    if dt <= 0:
        raise ConfigError(f"dt must be > 0, got {dt}")
    torques = np.asarray(torques, dtype=float)
    if torques.shape != (state.config.n_joints,):
        raise ConfigError(f"expected {state.config.n_joints} joint torques, got shape {torques.shape}")
    # overflow is caught below as a divergence, so numpy's warnings are redundant
    with np.errstate(over="ignore", invalid="ignore"):
        com_acc, ang_acc, _ = _accelerations(state, torques, fluid)
        v = state.com_velocity + dt * com_acc
        w = state.angular_velocity + dt * ang_acc
        new = BodyState(state.com + dt * v, v, state.angles + dt * w, w, state.config)
    if not new.is_finite():
        raise DivergenceError("body state became non-finite", module="hydro-body")
    return new


def external_force(state: BodyState, fluid: FluidField) -> np.ndarray:
    """Summed drag on all links at the current state."""
    return _accelerations(state, np.zeros(state.config.n_joints), fluid)[2].sum(axis=0)


@dataclass(frozen=True)
class BodyMetrics:
    head_position: np.ndarray
    heading: float
    speed: float


def body_metrics(state: BodyState) -> BodyMetrics:
    """Pilot-facing observables: head position, head heading and centre-of-mass speed."""
    return BodyMetrics(state.head_position, state.heading, float(np.hypot(*state.com_velocity)))


def rotate_state(state: BodyState, angle: float) -> BodyState:
    """Rigidly rotate the whole state about the origin."""
    c, s = math.cos(angle), math.sin(angle)
    Rm = np.array([[c, -s], [s, c]])
    return replace(state, com=Rm @ state.com, com_velocity=Rm @ state.com_velocity, angles=state.angles + angle)


def mirror_state(state: BodyState) -> BodyState:
    """Reflect about the x axis (y -> -y, angles -> -angles)."""
    flip = np.array([1.0, -1.0])
    return replace(state, com=state.com * flip, com_velocity=state.com_velocity * flip,
                   angles=-state.angles, angular_velocity=-state.angular_velocity)


class Body:
    """Stateful wrapper: PD-tracks joint set-points and integrates the body."""

    def __init__(self, config: BodyConfig = BodyConfig(), state: BodyState | None = None, dt=0.001):
        self.config = config
        self.state = initial_state(config) if state is None else state
        self.dt = dt

    def step(self, psi_target, fluid: FluidField = FluidField()) -> BodyState:
        s = self.state
        torques = pd_torque(psi_target, s.joint_angles, s.joint_velocities, self.config.pd)
        self.state = dynamics_step(s, np.atleast_1d(torques), fluid, self.dt)
        return self.state
