"""Steady-state metrics for oscillator and joint-angle time series."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.signal import lfilter

from .errors import ConfigError


def zero_crossing_frequency(signal, dt, hysteresis=0.25) -> float:
    """Mean frequency (Hz) from upward crossings of a de-meaned signal.

    A crossing counts only once the signal has been below ``-h`` and then
    rises through ``+h`` (``h = hysteresis * std``), so spike noise riding on
    the waveform does not produce spurious crossings.  Crossing times are
    interpolated at the ``+h`` level.
    """
    x = np.asarray(signal, dtype=float)
    x = x - x.mean()
    if x.std() == 0:
        return 0.0
    h = hysteresis * x.std()
    state = np.where(x > h, 1, np.where(x < -h, -1, 0))
    last = np.maximum.accumulate(np.where(state != 0, np.arange(len(x)), 0))
    filled = state[last]
    idx = np.flatnonzero((filled[:-1] == -1) & (filled[1:] == 1))
    if len(idx) < 2:
        return 0.0
    t = (idx + (h - x[idx]) / (x[idx + 1] - x[idx])) * dt
    return (len(t) - 1) / (t[-1] - t[0])


def unwrapped_phase(xy) -> np.ndarray:
    """Unwrapped oscillator phases from ``(T, n, 2)`` or ``(T, 2)`` Cartesian series."""
    xy = np.asarray(xy, dtype=float)
    return np.unwrap(np.arctan2(xy[..., 1], xy[..., 0]), axis=0)


def phase_frequency(xy, dt) -> np.ndarray:
    """Mean angular frequency (rad/s) per oscillator from the phase slope."""
    th = unwrapped_phase(xy)
    return (th[-1] - th[0]) / ((len(th) - 1) * dt)


def circular_mean(angles, axis=0):
    return np.angle(np.mean(np.exp(1j * np.asarray(angles)), axis=axis))


def wrap(angle):
    return (np.asarray(angle) + np.pi) % (2 * np.pi) - np.pi


def pairwise_lags(xy, pairs) -> np.ndarray:
    """Circular-mean phase difference ``theta_i - theta_j`` for each ``(i, j)`` pair."""
    th = unwrapped_phase(xy)
    pairs = np.asarray(pairs, dtype=int).reshape(-1, 2)
    return circular_mean(th[:, pairs[:, 0]] - th[:, pairs[:, 1]], axis=0)


def neighbour_pairs(n_segments):
    """Ipsilateral (rostral, caudal) pairs on both sides, then contralateral (left, right)."""
    ipsi = [(2 * k + s, 2 * (k + 1) + s) for s in (0, 1) for k in range(n_segments - 1)]
    contra = [(2 * k, 2 * k + 1) for k in range(n_segments)]
    return ipsi, contra


def fundamental(signals, dt, freq) -> np.ndarray:
    """Complex Fourier coefficient at ``freq`` (Hz) for each column."""
    x = np.asarray(signals, dtype=float)
    x = x - x.mean(axis=0)
    t = np.arange(len(x)) * dt
    return np.exp(-2j * np.pi * freq * t) @ x


def segment_lags(psi, dt, freq=None) -> np.ndarray:
    """Phase lag of joint ``k + 1`` behind joint ``k`` at the fundamental frequency."""
    psi = np.asarray(psi, dtype=float)
    if freq is None:
        freq = zero_crossing_frequency(psi[:, 0], dt)
    if freq <= 0:
        return np.full(psi.shape[1] - 1, np.nan)
    z = fundamental(psi, dt, freq)
    return np.angle(z[:-1] * np.conj(z[1:]))


def peak_to_peak(x, axis=0):
    return np.ptp(np.asarray(x), axis=axis)


def aligned_psi_rmse(psi, phase, psi_ref, phase_ref, grid=73) -> float:
    """RMSE of ``psi`` against the reference sampled at the same oscillator phase.

    For each sample the reference time with matching phase (plus a constant
    offset ``c``) is found by inverting the monotone reference phase, and the
    reference joint angles are interpolated there.  ``c`` is chosen to
    minimise the error, so constant start-up phase differences and small
    frequency mismatches do not masquerade as waveform error.
    """
    psi, psi_ref = np.asarray(psi, float), np.asarray(psi_ref, float)
    phase, phase_ref = np.asarray(phase, float), np.asarray(phase_ref, float)
    if np.any(np.diff(phase_ref) <= 0):
        raise ConfigError("reference phase must be strictly increasing")
    t_ref = np.arange(len(phase_ref), dtype=float)
    delta = phase_ref[0] - phase[0]

    def err(c):
        target = phase + c
        ok = (target >= phase_ref[0]) & (target <= phase_ref[-1])
        if ok.sum() < 0.5 * len(phase):
            return np.inf
        tt = np.interp(target[ok], phase_ref, t_ref)
        ref = np.column_stack([np.interp(tt, t_ref, psi_ref[:, k]) for k in range(psi.shape[1])])
        return float(np.sqrt(np.mean((psi[ok] - ref) ** 2)))

    cs = delta + np.linspace(-np.pi, np.pi, grid)
    errs = np.array([err(c) for c in cs])
    best = int(np.argmin(errs))
    if errs[best] == 0.0:
        return 0.0
    step = cs[1] - cs[0]
    res = minimize_scalar(err, bounds=(cs[best] - step, cs[best] + step), method="bounded",
                          options={"xatol": 1e-4})
    return float(min(res.fun, errs[best]))


@dataclass(frozen=True)
class BackendComparison:
    frequency_error: float
    phase_lag_error: float
    psi_rmse: float
    frequency: float
    frequency_ref: float
    lags: tuple
    lags_ref: tuple

    def as_dict(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def compare_runs(psi, xy, psi_ref, xy_ref, dt, transient=3.0) -> BackendComparison:
    """Steady-state frequency, joint phase-lag and waveform differences of two runs."""
    k0 = int(round(transient / dt))
    if k0 >= len(psi) - 10:
        raise ConfigError("run too short for the transient cut")
    psi, psi_ref = np.asarray(psi)[k0:], np.asarray(psi_ref)[k0:]
    xy, xy_ref = np.asarray(xy)[k0:], np.asarray(xy_ref)[k0:]
    f = float(np.mean([zero_crossing_frequency(psi[:, k], dt) for k in range(psi.shape[1])]))
    f_ref = float(np.mean([zero_crossing_frequency(psi_ref[:, k], dt) for k in range(psi_ref.shape[1])]))
    lags = segment_lags(psi, dt, f)
    lags_ref = segment_lags(psi_ref, dt, f_ref)
    lag_err = float(np.max(np.abs(wrap(lags - lags_ref)))) if len(lags) else 0.0
    phase = unwrapped_phase(xy[:, 0])
    phase_ref = unwrapped_phase(xy_ref[:, 0])
    rmse = aligned_psi_rmse(psi, phase, psi_ref, phase_ref)
    f_err = abs(f - f_ref) / f_ref if f_ref > 0 else math.inf
    return BackendComparison(f_err, lag_err, rmse, f, f_ref, tuple(lags.tolist()), tuple(lags_ref.tolist()))


def lowpass(x, tau, dt):
    """First-order causal low-pass along axis 0."""
    a = math.exp(-dt / tau)
    return lfilter([1.0 - a], [1.0, -a], np.asarray(x, dtype=float), axis=0)
