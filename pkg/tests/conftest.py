import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from scpg.cpg_math import CpgConfig, DriveSignal, integrate_step, params_from_drive, random_cart_state

settings.register_profile("repo", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


def run_ideal(duration, drive=DriveSignal(3.0, 3.0), cfg=CpgConfig(), seed=0, dt=1e-3, form="cartesian",
              state=None):
    """Integrate the reference chain; returns the (T, n, 2|3) state history (state after each step)."""
    topo = cfg.topology()
    params = params_from_drive(topo, drive, cfg.drive_map,
                               a=cfg.amplitude_gain if form == "cartesian" else cfg.phase_amplitude_gain)
    s = random_cart_state(topo.n_oscillators, np.random.default_rng(seed)) if state is None else state
    out = np.empty((int(round(duration / dt)),) + np.shape(s))
    for k in range(len(out)):
        s = integrate_step(s, params, topo, dt, form=form, convention=cfg.convention)
        out[k] = s
    return out


@pytest.fixture(scope="session")
def ideal_30s():
    """30 s of the default chain at drive 3 (Cartesian form, seed 0)."""
    return run_ideal(30.0)


class RunCache:
    """Session-wide cache of expensive closed-loop runs keyed by their config overrides."""

    def __init__(self):
        self._runs = {}

    def get(self, scenario="isolated_cpg", backend="spiking", neurons=2000, **overrides):
        from scpg.config import default_config
        from scpg.scenarios import simulate

        key = (scenario, backend, neurons, repr(sorted(overrides.items())))
        if key not in self._runs:
            net = {"neurons_per_population": neurons, **overrides.pop("network", {})}
            cfg = default_config(scenario, backend=backend, network=net, **overrides)
            self._runs[key] = simulate(cfg)
        return self._runs[key]


@pytest.fixture(scope="session")
def runs():
    return RunCache()


# --- one summary line per acceptance criterion --------------------------------------------

_CRITERIA = {}


def pytest_collection_modifyitems(items):
    for item in items:
        if item.name.startswith("test_criterion_"):
            doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
            _CRITERIA[item.nodeid] = [doc, None]


def pytest_runtest_logreport(report):
    entry = _CRITERIA.get(report.nodeid)
    if entry is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        entry[1] = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")


def pytest_terminal_summary(terminalreporter):
    ran = [(doc, outcome) for doc, outcome in _CRITERIA.values() if outcome is not None]
    if not ran:
        return
    terminalreporter.section("acceptance criteria")
    for doc, outcome in ran:
        terminalreporter.write_line(f"{outcome}  {doc}")
