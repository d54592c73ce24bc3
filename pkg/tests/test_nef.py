import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from scpg import analysis
from scpg.errors import ConfigError
from scpg.nef import (DecoderMatrix, LifParams, Network, PopulationSpec, Simulator, Synapse, decode,
                      default_n_eval_points, full_weights, generate_population, lif_rate, read_network,
                      recurrent_transform, regularized_objective, sample_ball, solve_decoders, write_network)
from scpg.nef.benchmarks import integrator, oscillator
from scpg.nef.decoders import ridge_penalty
from scpg.nef.neurons import lif_step

LIF = LifParams()


def _closed_form_rate(J, tau_rc=0.02, tau_ref=0.002):
    return 0.0 if J <= 1.0 else 1.0 / (tau_ref - tau_rc * math.log(1.0 - 1.0 / J))


# --- lif_rate -------------------------------------------------------------------------

def test_rate_at_threshold_is_zero():
    assert lif_rate(1.0) == 0.0


def test_rate_at_two():
    assert lif_rate(2.0) == pytest.approx(1.0 / (0.002 + 0.02 * math.log(2.0)), rel=1e-12)
    # the closed form evaluates to 63.040 Hz; the quoted 63.03 is a rounded value
    assert lif_rate(2.0) == pytest.approx(63.04, abs=1e-3)


def test_rate_ceiling():
    assert lif_rate(1e9) == pytest.approx(500.0, rel=1e-6)


@given(st.one_of(st.floats(0.0, 1.0), st.floats(1.0 + 1e-9, 50.0)))
def test_rate_matches_closed_form(J):
    assert lif_rate(J) == pytest.approx(_closed_form_rate(J), rel=1e-12, abs=1e-12)


def test_lif_params_validation():
    with pytest.raises(ConfigError):
        LifParams(tau_rc=0.0)
    with pytest.raises(ConfigError):
        LifParams(tau_ref=-1.0)


# --- spiking vs rate ------------------------------------------------------------------

def _spike_rate(J, duration=10.0, dt=1e-3):
    v = np.zeros(1)
    ref = np.zeros(1)
    n = 0
    for _ in range(int(round(duration / dt))):
        n += int(lif_step(np.array([J]), v, ref, dt)[0])
    return n / duration


def test_spike_rate_at_two():
    assert _spike_rate(2.0) == pytest.approx(lif_rate(2.0), rel=0.02)


@pytest.mark.parametrize("target", [20.0, 50.0, 100.0, 200.0, 300.0, 400.0])
def test_rate_vs_spike_consistency(target):
    J = brentq(lambda j: _closed_form_rate(j) - target, 1.0 + 1e-9, 1e4)
    assert _spike_rate(J) == pytest.approx(target, rel=0.02)


def test_zero_input_no_spikes():
    v, ref = np.zeros(10), np.zeros(10)
    for _ in range(1000):
        assert not lif_step(np.zeros(10), v, ref, 1e-3).any()


# --- populations ----------------------------------------------------------------------

def test_population_deterministic():
    spec = PopulationSpec(50, 3, 1.2, seed=7)
    a, b = generate_population(spec), generate_population(spec)
    for name in ("encoders", "gains", "biases", "max_rates", "intercepts"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_one_d_encoders_are_signs():
    pop = generate_population(PopulationSpec(100, 1, 1.0, seed=1))
    assert set(np.unique(pop.encoders)) <= {-1.0, 1.0}


def test_encoders_unit_norm_and_positive_gains():
    pop = generate_population(PopulationSpec(200, 4, 1.5, seed=2))
    assert np.allclose(np.linalg.norm(pop.encoders, axis=1), 1.0)
    assert np.all(pop.gains > 0)


@given(st.integers(1, 4), st.floats(0.5, 3.0), st.integers(0, 2**31 - 1))
def test_tuning_curve_contract(d, radius, seed):
    pop = generate_population(PopulationSpec(30, d, radius, seed=seed))
    at_intercept = pop.rates(pop.intercepts[:, None] * radius * pop.encoders)
    at_radius = pop.rates(radius * pop.encoders)
    assert np.allclose(np.diag(at_intercept), 0.0, atol=1e-6)
    assert np.allclose(np.diag(at_radius), pop.max_rates, atol=1e-6)


def test_intercept_point_numerical_inversion():
    # intercept 0.2: the current crosses threshold exactly at 0.2 * radius along the encoder
    spec = PopulationSpec(1, 1, 2.0, intercept_range=(0.2, 0.2), seed=3)
    pop = generate_population(spec)
    e = pop.encoders[0, 0]
    root = brentq(lambda s: pop.currents(np.array([s * e]))[0] - 1.0, 0.0, 2.0)
    assert root == pytest.approx(0.2 * 2.0, abs=1e-9)
    assert pop.rates(np.array([0.4 * e]))[0] == pytest.approx(0.0, abs=1e-9)
    assert pop.rates(np.array([2.0 * e]))[0] == pytest.approx(pop.max_rates[0], abs=1e-6)


def test_population_spec_validation():
    with pytest.raises(ConfigError):
        PopulationSpec(0, 1)
    with pytest.raises(ConfigError):
        PopulationSpec(10, 1, radius=0.0)


# --- decoders -------------------------------------------------------------------------

def test_identity_decoder_accuracy():
    pop = generate_population(PopulationSpec(100, 1, 1.0, seed=0))
    D = solve_decoders(pop, lambda x: x)
    pts = sample_ball(default_n_eval_points(pop), 1, 1.0, np.random.default_rng(0))
    err = pop.rates(pts) @ D.weights - pts
    assert np.sqrt(np.mean(err ** 2)) < 0.02 * pop.radius


def test_zero_target_gives_zero_decoders():
    pop = generate_population(PopulationSpec(100, 2, 1.0, seed=0))
    D = solve_decoders(pop, lambda x: np.zeros(1))
    pts = sample_ball(500, 2, 1.0, np.random.default_rng(1))
    assert np.max(np.abs(pop.rates(pts) @ D.weights)) < 1e-3


def test_ridge_penalty_convention():
    pop = generate_population(PopulationSpec(20, 1, 1.0, seed=0))
    A = pop.rates(np.linspace(-1, 1, 50)[:, None])
    assert ridge_penalty(A, 0.1) == pytest.approx((0.1 * A.max()) ** 2 * 50)


def test_decoders_are_first_order_optimal():
    pop = generate_population(PopulationSpec(60, 2, 1.0, seed=4))
    pts = sample_ball(400, 2, 1.0, np.random.default_rng(4))
    D = solve_decoders(pop, lambda x: [x[0] * x[1], x[0]], eval_points=pts)
    A = pop.rates(pts)
    F = np.column_stack([pts[:, 0] * pts[:, 1], pts[:, 0]])
    lam = ridge_penalty(A, 0.1)
    base = regularized_objective(A, F, D.weights, lam)
    rng = np.random.default_rng(0)
    for _ in range(20):
        i, k = rng.integers(60), rng.integers(2)
        for delta in (1e-3, -1e-3):
            W = D.weights.copy()
            W[i, k] += delta
            assert regularized_objective(A, F, W, lam) >= base


def test_decode_linear_and_zero():
    D = DecoderMatrix(np.random.default_rng(0).normal(size=(5, 2)))
    a, b = np.random.default_rng(1).random((2, 5))
    assert np.array_equal(decode(np.zeros(5), D), np.zeros(2))
    assert np.allclose(decode(a + b, D), decode(a, D) + decode(b, D), atol=1e-15)
    with pytest.raises(ConfigError):
        decode(np.zeros(4), D)


def test_decoder_matrix_validation():
    with pytest.raises(ConfigError):
        DecoderMatrix(np.zeros(3))


def test_recurrent_transform_zero_is_identity():
    g = recurrent_transform(lambda x: np.zeros_like(x), Synapse(0.1))
    x = np.array([0.3, -0.2])
    assert np.array_equal(g(x), x)
    assert g.input_gain == 0.1


def test_oscillator_feedback_decoding_accuracy():
    # 2000 neurons, 4-D, decoding the network's oscillator feedback on its reachable region
    from scpg.network import ScpgConfig, _oscillator_feedback, _reachable_points
    cfg = ScpgConfig()
    fb = _oscillator_feedback(cfg)
    pop = generate_population(PopulationSpec(2000, 4, cfg.oscillator_radius, seed=11), cfg.lif)
    cap = cfg.amplitude_cap

    def region(P):
        return (np.hypot(P[:, 0], P[:, 1]) <= cap) & (P[:, 2] >= -0.3) & (P[:, 3] >= -0.3)

    pts = _reachable_points(pop, region, 11)
    # the max-error bound needs light regularization (see the decisions ledger)
    D = solve_decoders(pop, fb, regularization=0.01, eval_points=pts)
    want = np.array([fb(p) for p in pts])
    err = np.abs(pop.rates(pts) @ D.weights - want)
    assert err.max() < 0.05 * pop.radius


# --- synapse and simulator ------------------------------------------------------------

def test_synapse_decay_e_fold():
    syn = Synapse(0.1)
    assert syn.decay(1e-3) ** 100 == pytest.approx(math.exp(-1.0), rel=1e-12)
    with pytest.raises(ConfigError):
        Synapse(0.0)


def test_single_spike_filter_decays_by_e():
    pop = generate_population(PopulationSpec(1, 1, 1.0, seed=0))
    net = Network()
    net.add_population("p", pop)
    net.probe("v", "p", decoders=DecoderMatrix(np.ones((1, 1))), synapse=Synapse(0.05))
    sim = Simulator(net, dt=1e-3, init_voltage_noise=0.0)
    sim.voltage[:] = 10.0  # forces one spike on the first step
    sim.refractory[:] = 0.0
    sim._bias[:] = 0.0
    sim.step()
    v0 = sim.probe_data("v")[-1, 0]
    for _ in range(50):
        sim.step()
    assert sim.probe_data("v")[-1, 0] == pytest.approx(v0 * math.exp(-1.0), rel=1e-9)


def test_simulator_rejects_bad_dt():
    net = Network()
    net.add_population("p", generate_population(PopulationSpec(5, 1, seed=0)))
    with pytest.raises(ConfigError):
        Simulator(net, dt=0.0)


def test_simulator_deterministic_spikes():
    def raster(seed):
        run = oscillator(n_neurons=100, duration=0.5, seed=seed)
        return run.decoded
    assert np.array_equal(raster(3), raster(3))


def test_unknown_probe():
    net = Network()
    net.add_population("p", generate_population(PopulationSpec(5, 1, seed=0)))
    sim = Simulator(net)
    with pytest.raises(ConfigError):
        sim.probe_data("missing")


def test_connection_shape_checks():
    net = Network()
    net.add_population("p", generate_population(PopulationSpec(5, 2, seed=0)))
    net.add_input("u", 3)
    with pytest.raises(ConfigError):
        net.connect("u", "p", transform=np.ones((2, 2)))
    with pytest.raises(ConfigError):
        net.connect("u", "p", transform=np.ones((1, 3)), post_dims=[4])


# --- dynamics benchmarks --------------------------------------------------------------

def test_integrator_step_input():
    run = integrator(n_neurons=500, seed=0)
    k = int(round(1.0 / 1e-3)) - 1
    assert run.decoded[k, 0] == pytest.approx(1.0, abs=0.05)


def test_harmonic_oscillator_period():
    run = oscillator(n_neurons=500, omega=2 * math.pi, seed=0)
    xy = run.decoded[1000:]
    freq = analysis.phase_frequency(xy, 1e-3) / (2 * math.pi)
    assert freq == pytest.approx(1.0, rel=0.02)


def test_rate_mode_runs_same_network():
    run = oscillator(n_neurons=200, duration=2.0, seed=1, mode="rate")
    assert np.all(np.isfinite(run.decoded))


# --- text export ----------------------------------------------------------------------

def test_text_export_round_trip(tmp_path):
    pop = generate_population(PopulationSpec(7, 2, 1.3, seed=5))
    net = Network("tiny")
    net.add_population("a", pop)
    net.add_input("u", 2)
    D = solve_decoders(pop, lambda x: x)
    conn = net.connect("a", "a", D, synapse=Synapse(0.1), label="rec")
    net.connect("u", "a", transform=0.1 * np.eye(2), synapse=Synapse(0.1))
    path = tmp_path / "net.txt"
    write_network(net, path)
    recs = read_network(path)
    kinds = [r.kind for r in recs]
    assert kinds == ["network", "population", "input", "connection", "connection"]
    p = recs[1]
    assert p.attrs["n_neurons"] == "7"
    assert p.matrices["encoders"].shape == (7, 2)
    assert np.array_equal(p.matrices["encoders"], pop.encoders)
    assert np.array_equal(p.matrices["gains"][:, 0], pop.gains)
    assert np.array_equal(recs[3].matrices["decoders"], D.weights)
    assert "decoders" not in recs[4].matrices
    W = full_weights(net, conn)
    assert W.shape == (7, 7)
    # factored and dense paths give the same input current
    act = np.random.default_rng(0).random(7)
    enc = pop.encoders * (pop.gains / pop.radius)[:, None]
    assert np.allclose(W @ act, enc @ (act @ D.weights), atol=1e-12)


def test_read_rejects_foreign_file(tmp_path):
    path = tmp_path / "x.txt"
    path.write_text("hello\n")
    with pytest.raises(ConfigError):
        read_network(path)
