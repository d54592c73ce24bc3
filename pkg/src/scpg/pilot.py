"""High-level drive generation: schedules and heading feedback."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

from .cpg_math import DriveMap, DriveSignal
from .errors import ConfigError


@dataclass(frozen=True)
class SteeringConfig:
    cf: float = 4.0
    d_left0: float = 3.0
    d_right0: float = 3.0
    r_z_target: float = 0.0
    clamp: bool = True

    def __post_init__(self):
        if self.cf < 0:
            raise ConfigError("cf must be >= 0")
        if not (math.isfinite(self.d_left0) and math.isfinite(self.d_right0)):
            raise ConfigError("baseline drives must be finite")

    def validate_against(self, drive_map: DriveMap):
        for d in (self.d_left0, self.d_right0):
            if not drive_map.d_low <= d <= drive_map.d_high:
                raise ConfigError(f"baseline drive {d} outside [{drive_map.d_low}, {drive_map.d_high}]")


def steer(heading: float, config: SteeringConfig, drive_map: DriveMap | None = None) -> DriveSignal:
    """Proportional heading correction.

    A heading clockwise of the target (negative error) raises the right
    drive, a counter-clockwise one raises the left drive.  With ``drive_map``
    and ``config.clamp`` the outputs are clipped to the drive band.
    """
    e = heading - config.r_z_target
    correction = config.cf * abs(config.r_z_target - heading)
    d_left, d_right = config.d_left0, config.d_right0
    if e < 0:
        d_right += correction
    elif e > 0:
        d_left += correction
    if drive_map is not None and config.clamp:
        d_left = min(max(d_left, drive_map.d_low), drive_map.d_high)
        d_right = min(max(d_right, drive_map.d_low), drive_map.d_high)
    return DriveSignal(d_left, d_right)


@dataclass(frozen=True)
class DriveSchedule:
    """Piecewise-constant drive: entries ``(t_start, d_left, d_right)``."""

    entries: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        if not self.entries:
            raise ConfigError("drive schedule must be nonempty")
        object.__setattr__(self, "entries", tuple(tuple(float(v) for v in e) for e in self.entries))
        starts = [e[0] for e in self.entries]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ConfigError("schedule start times must be strictly increasing")
        for e in self.entries:
            DriveSignal(e[1], e[2])

    @classmethod
    def constant(cls, d_left, d_right=None):
        return cls(((0.0, d_left, d_left if d_right is None else d_right),))


def scheduled_drive(t: float, schedule: DriveSchedule) -> DriveSignal:
    """Value of the last entry starting at or before ``t`` (first entry before it starts)."""
    starts = [e[0] for e in schedule.entries]
    i = max(bisect.bisect_right(starts, t) - 1, 0)
    _, d_left, d_right = schedule.entries[i]
    return DriveSignal(d_left, d_right)


class HeadingFilter:
    """First-order low-pass of the head heading, removing the gait-frequency sway."""

    def __init__(self, tau: float, dt: float, initial: float = 0.0):
        if tau < 0 or dt <= 0:
            raise ConfigError("filter tau must be >= 0 and dt > 0")
        self.decay = math.exp(-dt / tau) if tau > 0 else 0.0
        self.value = initial

    def update(self, heading: float) -> float:
        self.value = self.decay * self.value + (1.0 - self.decay) * heading
        return self.value
