"""Closed-loop scenario runner: drive source -> CPG backend -> PD body, with CSV/JSON output.

CSV conventions: comma separated, one header row, time column ``t`` in
seconds at step resolution (the state at the end of each step), floats
written with ``%.10g``.  Files per run:

* ``psi.csv``         t, psi_0 .. psi_{n-1}
* ``oscillators.csv`` t, x_0, y_0, x_1, y_1, ...
* ``drive.csv``       t, d_left, d_right
* ``spikes.csv``      t, neuron_id       (spiking backend, first oscillator population)
* ``trajectory.csv``  t, head_x, head_y, heading, joint_0 .. joint_{n-1}, speed, heading_filtered
* ``report.json``     timing, manifest, config echo and summary metrics
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import analysis
from .backends import IdealCpg, make_backend
from .body import Body, initial_state
from .config import ScenarioConfig, dump_config
from .errors import ConfigError, DivergenceError
from .pilot import HeadingFilter, scheduled_drive, steer

log = logging.getLogger(__name__)

FLOAT_FMT = "%.10g"


@dataclass
class RunReport:
    scenario: str
    backend: str
    seed: int
    build_time: float
    step_time_per_sim_second: float
    files: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    members: list = field(default_factory=list)

    def as_dict(self):
        return {
            "scenario": self.scenario,
            "backend": self.backend,
            "seed": self.seed,
            "build_time_s": self.build_time,
            "step_time_per_sim_second_s": self.step_time_per_sim_second,
            "files": self.files,
            "metrics": self.metrics,
            "members": self.members,
            "config": self.config,
        }


@dataclass
class RunResult:
    """In-memory traces of one closed-loop run (all at step resolution)."""

    t: np.ndarray
    psi: np.ndarray
    xy: np.ndarray
    drive: np.ndarray
    spikes: np.ndarray | None = None
    trajectory: dict | None = None
    build_time: float = 0.0
    step_time: float = 0.0


def write_csv(path, header, columns):
    """Write equally long columns with fixed float formatting (byte-reproducible)."""
    data = np.column_stack([np.asarray(c, dtype=float).reshape(len(columns[0]), -1) for c in columns])
    np.savetxt(path, data, fmt=FLOAT_FMT, delimiter=",", header=",".join(header), comments="")


def read_csv(path):
    """Read a CSV written by :func:`write_csv`; returns ``(header, data)``."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def simulate(config: ScenarioConfig, backend=None, seed=None) -> RunResult:
    """Run the configured loop and return its traces (no files written)."""
    backend = backend or config.backend
    seed = config.seed if seed is None else seed
    net_cfg = config.network
    t0 = time.perf_counter()
    cpg = make_backend(backend, net_cfg, seed=seed)
    build_time = time.perf_counter() - t0

    dt, n = config.dt, config.n_steps
    n_seg = net_cfg.cpg.n_segments
    drive_map = net_cfg.cpg.drive_map
    body = Body(config.body, initial_state(config.body), dt) if config.has_body else None
    heading_filter = HeadingFilter(config.heading_filter_tau, dt)
    drives = np.empty((n, 2))
    traj = None
    if body is not None:
        traj = {k: np.empty(n) for k in ("head_x", "head_y", "heading", "speed", "heading_filtered")}
        traj["joints"] = np.empty((n, n_seg))
    heading = 0.0
    t1 = time.perf_counter()
    for k in range(n):
        t = k * dt
        if config.steering is not None:
            drive = steer(heading_filter.value, config.steering, drive_map)
        else:
            drive = scheduled_drive(t, config.schedule)
        drives[k] = drive.d_left, drive.d_right
        try:
            psi = cpg.step(drive, config.perturbations, t)
            s = body.step(psi, config.fluid) if body is not None else None
        except DivergenceError as exc:
            if exc.t is None:
                exc.t = t
            raise
        if body is not None:
            heading = s.heading
            heading_filter.update(heading)
            head = s.head_position
            traj["head_x"][k], traj["head_y"][k] = head
            traj["heading"][k] = heading
            traj["heading_filtered"][k] = heading_filter.value
            traj["speed"][k] = np.hypot(*s.com_velocity)
            traj["joints"][k] = s.joint_angles
    step_time = time.perf_counter() - t1
    spikes = None
    if backend == "spiking" and config.record_spikes:
        spikes = cpg.probe("spikes")
    return RunResult(cpg.probe("t"), cpg.probe("psi"), cpg.probe("decoded_xy"), drives, spikes, traj,
                     build_time, step_time)


def write_result(result: RunResult, out: Path) -> list:
    out.mkdir(parents=True, exist_ok=True)
    n_seg = result.psi.shape[1]
    n_osc = result.xy.shape[1]
    files = []

    def emit(name, header, cols):
        write_csv(out / name, header, cols)
        files.append(str(out / name))

    emit("psi.csv", ["t"] + [f"psi_{k}" for k in range(n_seg)], [result.t, result.psi])
    emit("oscillators.csv", ["t"] + [f"{c}_{i}" for i in range(n_osc) for c in ("x", "y")],
         [result.t, result.xy.reshape(len(result.t), -1)])
    emit("drive.csv", ["t", "d_left", "d_right"], [result.t, result.drive])
    if result.spikes is not None:
        with open(out / "spikes.csv", "w") as fh:
            fh.write("t,neuron_id\n")
            for t, i in result.spikes:
                fh.write(f"{FLOAT_FMT % t},{int(i)}\n")
        files.append(str(out / "spikes.csv"))
    if result.trajectory is not None:
        tr = result.trajectory
        emit("trajectory.csv",
             ["t", "head_x", "head_y", "heading"] + [f"joint_{k}" for k in range(n_seg)]
             + ["speed", "heading_filtered"],
             [result.t, tr["head_x"], tr["head_y"], tr["heading"], tr["joints"], tr["speed"],
              tr["heading_filtered"]])
    return files


def summarize(result: RunResult, config: ScenarioConfig) -> dict:
    """Scenario-level scalar metrics recorded in the report."""
    dt = config.dt
    k0 = min(int(round(config.transient / dt)), len(result.t) - 1)
    m = {}
    psi = result.psi[k0:]
    if len(psi) > 10:
        m["psi_frequency_hz"] = float(np.mean([analysis.zero_crossing_frequency(psi[:, k], dt)
                                               for k in range(psi.shape[1])]))
        m["psi_peak_to_peak"] = analysis.peak_to_peak(psi).tolist()
    if result.trajectory is not None:
        tr = result.trajectory
        last = max(len(result.t) - int(round(5.0 / dt)), 0)
        m["mean_speed_final_5s"] = float(np.mean(tr["speed"][last:]))
        m["final_heading"] = float(tr["heading"][-1])
        m["final_heading_filtered"] = float(tr["heading_filtered"][-1])
        target = config.steering.r_z_target if config.steering is not None else 0.0
        err = np.abs(tr["heading_filtered"][last:] - target)
        m["max_abs_heading_error_final_5s"] = float(err.max())
        m["final_abs_heading_error"] = float(abs(tr["heading_filtered"][-1] - target))
    return m


def run_scenario(config: ScenarioConfig, out_dir=None) -> RunReport:
    """Execute ``config`` and write its CSVs plus ``report.json`` into ``out_dir``."""
    out = Path(out_dir or config.output_dir)
    if config.scenario == "swim_neuron_sweep":
        return _run_sweep(config, out)
    result = simulate(config)
    files = write_result(result, out)
    report = RunReport(config.scenario, config.backend, config.seed, result.build_time,
                       result.step_time / config.duration, files, dump_config(config),
                       summarize(result, config))
    _write_report(report, out)
    return report


def _run_sweep(config: ScenarioConfig, out: Path) -> RunReport:
    """Spiking runs at each neuron count, each compared against the ideal reference."""
    ref_cfg = config
    ref = simulate(ref_cfg, backend="ideal")
    files = write_result(ref, out / "ideal")
    members, build, step = [], ref.build_time, ref.step_time
    for n in config.sweep_neurons:
        cfg = replace(config, network=replace(config.network, neurons_per_population=n))
        res = simulate(cfg, backend="spiking")
        files += write_result(res, out / f"n{n}")
        cmp = analysis.compare_runs(res.psi, res.xy, ref.psi, ref.xy, config.dt, config.transient)
        k0 = int(round(config.transient / config.dt))
        members.append({"neurons": n, "build_time_s": res.build_time, "step_time_s": res.step_time,
                        "psi_peak_to_peak_min": float(analysis.peak_to_peak(res.psi[k0:]).min()),
                        **cmp.as_dict(), **summarize(res, cfg)})
        build += res.build_time
        step += res.step_time
    rmse = [m["psi_rmse"] for m in members]
    metrics = {"psi_rmse": rmse,
               "rmse_strictly_decreasing": bool(all(b < a for a, b in zip(rmse, rmse[1:])))}
    report = RunReport(config.scenario, "spiking", config.seed, build, step / config.duration, files,
                       dump_config(config), metrics, members)
    _write_report(report, out)
    return report


def _write_report(report: RunReport, out: Path):
    path = out / "report.json"
    report.files = sorted(report.files) + [str(path)]
    with open(path, "w") as fh:
        json.dump(report.as_dict(), fh, indent=2)


def compare_backends(config: ScenarioConfig, backend="spiking", reference="ideal"):
    """Run two backends on identical drives and compare their steady-state CPG output."""
    cfg = replace(config, record_spikes=False)
    ref = simulate(cfg, backend=reference)
    res = simulate(cfg, backend=backend)
    return analysis.compare_runs(res.psi, res.xy, ref.psi, ref.xy, config.dt, config.transient)


__all__ = ["RunReport", "RunResult", "compare_backends", "read_csv", "run_scenario", "simulate",
           "write_csv", "write_result", "IdealCpg", "ConfigError"]
