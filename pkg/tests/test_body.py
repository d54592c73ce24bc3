import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scpg.backends import IdealCpg
from scpg.body import (Body, BodyConfig, BodyState, DragParams, FluidField, PdGains, body_metrics, drag_force,
                       dynamics_step, external_force, initial_state, joint_limit_torque, mirror_state, pd_torque,
                       rotate_state)
from scpg.cpg_math import CpgConfig, DriveSignal
from scpg.errors import ConfigError, DivergenceError

CFG = BodyConfig()
DT = 1e-3
STILL = FluidField()


def _reference_gait(duration, cpg=CpgConfig(output_map="offset"), drive=DriveSignal(3.0, 3.0), seed=0):
    ideal = IdealCpg(cpg, seed=seed)
    return np.array([ideal.step(drive, (), k * DT) for k in range(int(round(duration / DT)))])


def _drive_body(psi, config=CFG, fluid=STILL, state=None):
    body = Body(config, state or initial_state(config), DT)
    return [body.step(p, fluid) for p in psi]


@pytest.fixture(scope="module")
def gait():
    return _reference_gait(8.0)


# --- PD and drag ----------------------------------------------------------------------

def test_pd_at_setpoint():
    assert pd_torque(0.3, 0.3, 0.0, PdGains()) == 0.0


def test_pd_proportional():
    assert pd_torque(0.5, 0.0, 0.0, PdGains(kp=2.0, kd=0.0, torque_limit=10.0)) == pytest.approx(1.0)


def test_pd_clamped():
    g = PdGains(kp=100.0, kd=1.0, torque_limit=5.0)
    assert pd_torque(10.0, 0.0, 0.0, g) == 5.0
    assert pd_torque(-10.0, 0.0, 0.0, g) == -5.0


def test_drag_zero_velocity():
    assert np.array_equal(drag_force([0.0, 0.0], 0.3, DragParams()), np.zeros(2))


def test_drag_perpendicular_example():
    p = DragParams(c_parallel=0.1, c_perpendicular=1.0, surface_perpendicular=0.01, rho=1000.0)
    assert p.lambda_perpendicular == pytest.approx(5.0)
    # link along x, velocity along +y (perpendicular)
    f = drag_force([0.0, 0.5], 0.0, p)
    assert f == pytest.approx([0.0, -1.25], abs=1e-12)


@given(st.floats(-math.pi, math.pi), st.floats(-2.0, 2.0))
def test_drag_pure_parallel(heading, speed):
    p = DragParams()
    v = speed * np.array([math.cos(heading), math.sin(heading)])
    f = drag_force(v, heading, p)
    assert np.allclose(f, -p.lambda_parallel * speed * abs(speed) * np.array([math.cos(heading),
                                                                              math.sin(heading)]), atol=1e-12)


def test_drag_params_validation():
    with pytest.raises(ConfigError):
        DragParams(rho=-1.0)


def test_joint_limit_inactive_inside():
    assert np.array_equal(joint_limit_torque(np.array([0.5, -1.0]), CFG), np.zeros(2))
    assert joint_limit_torque(np.array([2.0]), CFG)[0] < 0


# --- dynamics -------------------------------------------------------------------------

def test_equilibrium_unchanged():
    s0 = initial_state(CFG, joint_angles=np.linspace(-0.2, 0.2, 8))
    s1 = dynamics_step(s0, np.zeros(8), STILL, DT)
    for a, b in ((s0.com, s1.com), (s0.angles, s1.angles), (s0.com_velocity, s1.com_velocity)):
        assert np.array_equal(a, b)


def test_coast_speed_decays_monotonically():
    s = initial_state(CFG, velocity=(0.3, 0.0))
    speeds = []
    for _ in range(2000):
        s = dynamics_step(s, np.zeros(8), STILL, DT)
        speeds.append(body_metrics(s).speed)
    assert np.all(np.diff(speeds) < 0)


@given(st.integers(0, 2**31 - 1))
def test_dissipative_without_actuation(seed):
    rng = np.random.default_rng(seed)
    s = initial_state(CFG, joint_angles=rng.uniform(-0.5, 0.5, 8), velocity=rng.uniform(-0.3, 0.3, 2))
    s = replace(s, angular_velocity=rng.uniform(-2, 2, 9))
    energy = [s.kinetic_energy()]
    for _ in range(300):
        s = dynamics_step(s, np.zeros(8), STILL, DT)
        energy.append(s.kinetic_energy())
    assert np.all(np.diff(energy) <= 1e-12 * energy[0])


def test_momentum_change_equals_external_force():
    rng = np.random.default_rng(1)
    s = initial_state(CFG, joint_angles=rng.uniform(-0.4, 0.4, 8), velocity=(0.1, -0.05))
    s = replace(s, angular_velocity=rng.uniform(-1, 1, 9))
    fluid = FluidField((0.05, 0.02))
    for _ in range(50):
        torques = rng.uniform(-0.5, 0.5, 8)
        f = external_force(s, fluid)
        nxt = dynamics_step(s, torques, fluid, DT)
        dp = nxt.momentum() - s.momentum()
        assert np.allclose(dp, DT * f, rtol=1e-6, atol=1e-15)
        s = nxt


def test_dt_and_shape_checks():
    s = initial_state(CFG)
    with pytest.raises(ConfigError):
        dynamics_step(s, np.zeros(8), STILL, 0.0)
    with pytest.raises(ConfigError):
        dynamics_step(s, np.zeros(7), STILL, DT)


def test_divergence_named():
    cfg = BodyConfig(link_mass=1e-12, link_inertia=1e-30)
    s = initial_state(cfg, joint_angles=np.full(8, 0.3))
    s = replace(s, angular_velocity=np.linspace(-1e3, 1e3, 9))
    with pytest.raises(DivergenceError) as exc:
        with np.errstate(all="ignore"):
            for _ in range(1000):
                s = dynamics_step(s, np.full(8, 1e6), STILL, DT)
    assert exc.value.module == "hydro-body"


def test_body_config_validation():
    with pytest.raises(ConfigError):
        BodyConfig(link_mass=0.0)
    with pytest.raises(ConfigError):
        BodyConfig(joint_sign=2)


def test_initial_state_geometry():
    s = initial_state(CFG, head_position=(0.5, -0.2), heading=0.3, joint_angles=np.full(8, 0.1))
    assert np.allclose(s.head_position, (0.5, -0.2))
    assert s.heading == pytest.approx(0.3)
    assert np.allclose(s.joint_angles, 0.1)
    # neighbouring link centres are joined by two half links
    u = np.column_stack([np.cos(s.angles), np.sin(s.angles)])
    want = -0.5 * CFG.link_length * (u[:-1] + u[1:])
    assert np.allclose(np.diff(s.link_positions, axis=0), want)


def test_initial_metrics():
    m = body_metrics(initial_state(CFG))
    assert m.heading == 0.0 and m.speed == 0.0


# --- closed loop with the reference gait -----------------------------------------------

def test_reference_gait_swims(gait):
    states = _drive_body(gait)
    speed = np.mean([body_metrics(s).speed for s in states[-5000:]])
    assert speed > 0.01


def test_heading_is_unwrapped(gait):
    states = _drive_body(_reference_gait(20.0, drive=DriveSignal(2.0, 4.0)))
    h = np.array([s.heading for s in states])
    assert np.max(np.abs(np.diff(h))) < 0.1
    # the turn is long enough to leave (-pi, pi]
    assert h.max() > math.pi


def test_frame_invariance(gait):
    angle = 0.7
    fluid = FluidField((0.05, -0.02))
    c, s_ = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s_], [s_, c]])
    fluid_rot = FluidField(tuple(rot @ fluid.velocity))
    psi = gait[:3000]
    a = _drive_body(psi, fluid=fluid)
    b = _drive_body(psi, fluid=fluid_rot, state=rotate_state(initial_state(CFG), angle))
    pa = np.array([s.head_position for s in a]) @ rot.T
    pb = np.array([s.head_position for s in b])
    scale = np.abs(pa).max()
    assert np.max(np.abs(pa - pb)) <= 1e-6 * scale
    ha = np.array([s.heading for s in a]) + angle
    hb = np.array([s.heading for s in b])
    assert np.max(np.abs(ha - hb)) <= 1e-6 * np.abs(hb).max()


def test_mirror_symmetry(gait):
    psi = gait[:3000]
    a = _drive_body(psi)
    b = _drive_body(-psi, state=mirror_state(initial_state(CFG)))
    pa = np.array([s.head_position for s in a]) * [1.0, -1.0]
    pb = np.array([s.head_position for s in b])
    assert np.max(np.abs(pa - pb)) <= 1e-6 * np.abs(pa).max()
    assert np.allclose([-s.heading for s in a], [s.heading for s in b], rtol=1e-6, atol=1e-12)


def _forward_speed(states, window=4000):
    # net centre-of-mass travel over the window, which averages out the lateral wobble
    return np.hypot(*(states[-1].com - states[-window].com)) / (window * DT)


@pytest.mark.xfail(strict=True, reason="per-component quadratic drag stays anisotropic with equal "
                                       "coefficients (|v_par| v_par + |v_perp| v_perp != |v| v); the "
                                       "residual speed is ~16% of baseline, see the decisions ledger")
def test_propulsion_requires_anisotropy(gait):
    iso_cfg = BodyConfig(drag=DragParams(c_parallel=1.0, c_perpendicular=1.0))
    assert _forward_speed(_drive_body(gait, config=iso_cfg)) < 0.1 * _forward_speed(_drive_body(gait))


def test_isotropic_drag_law_gives_no_propulsion(gait, monkeypatch):
    import scpg.body

    def isotropic(v, heading, params, link_index=None):
        v = np.asarray(v, float)
        return -params.lambda_parallel * np.linalg.norm(v, axis=-1, keepdims=True) * v

    base = _forward_speed(_drive_body(gait))
    monkeypatch.setattr(scpg.body, "drag_force", isotropic)
    iso = _forward_speed(_drive_body(gait, config=BodyConfig(drag=DragParams(1.0, 1.0))))
    assert iso < 0.1 * base


def test_right_drive_turns_counter_clockwise():
    # recorded convention: right drive > left raises the heading; mirrored drive mirrors the turn
    right = _drive_body(_reference_gait(6.0, drive=DriveSignal(2.5, 3.5)))
    left = _drive_body(_reference_gait(6.0, drive=DriveSignal(3.5, 2.5)))
    hr = np.mean([s.heading for s in right[-1000:]])
    hl = np.mean([s.heading for s in left[-1000:]])
    assert hr > 0.3 and hl < -0.3


def test_fluid_boundary_ramp():
    f = FluidField((0.0, -0.3), boundary_normal=(1.0, 0.0), boundary_offset=1.0, boundary_width=0.1)
    v = f.velocity_at(np.array([[0.0, 0.0], [1.0, 5.0], [2.0, 0.0]]))
    assert np.allclose(v, [[0.0, 0.0], [0.0, -0.15], [0.0, -0.3]])
    assert np.allclose(FluidField((0.1, 0.2)).velocity_at(np.zeros((3, 2))), [[0.1, 0.2]] * 3)


def test_body_state_is_value_like():
    s = initial_state(CFG)
    assert isinstance(s, BodyState) and s.is_finite()
