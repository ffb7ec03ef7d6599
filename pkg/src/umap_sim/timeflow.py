"""Simulation-time / real-time decoupling.

Three knobs govern time: the decision interval (simulation seconds between
two agent decisions), the baseline frame rate (simulation frames computed per
simulation second), and the dilation factor (how fast simulation time flows
relative to wall-clock time). Simulation time is counted in whole frames so
that no floating-point drift can accumulate; the dilation factor only ever
affects pacing, never state.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Protocol

#: Dilation value meaning "run unpaced, as fast as the hardware allows".
UNPACED = math.inf

# Tolerance for deciding whether interval * rate is a whole number of frames.
_FRAME_EPS = 1e-9


class InvalidTimeConfig(ValueError):
    """Raised when the three time parameters are inconsistent."""


@dataclass(frozen=True)
class TimeConfig:
    """Validated bundle of the three time-flow parameters.

    decision_interval   simulation seconds per decision step
    baseline_frame_rate simulation frames per simulation second
    dilation_factor     simulation-time / real-time ratio (inf = unpaced)
    """

    decision_interval: float = 0.5
    baseline_frame_rate: float = 30.0
    dilation_factor: float = 1.0

    def __post_init__(self) -> None:
        if not self.decision_interval > 0:
            raise InvalidTimeConfig(f"decision_interval must be > 0, got {self.decision_interval}")
        if not self.baseline_frame_rate > 0:
            raise InvalidTimeConfig(f"baseline_frame_rate must be > 0, got {self.baseline_frame_rate}")
        if not self.dilation_factor > 0:
            raise InvalidTimeConfig(f"dilation_factor must be > 0, got {self.dilation_factor}")
        frames_per_decision(self)  # validates integrality

    @property
    def frame_dt(self) -> float:
        """Simulation seconds advanced by one frame."""
        return 1.0 / self.baseline_frame_rate

    @property
    def paced(self) -> bool:
        return math.isfinite(self.dilation_factor)


def frames_per_decision(cfg: TimeConfig) -> int:
    """Whole frames simulated between two consecutive decisions.

    The product decision_interval * baseline_frame_rate must be a positive
    integer; anything else is an invalid task setup. A small tolerance
    absorbs float artifacts such as 0.1 * 30 == 3.0000000000000004.
    """
    product = cfg.decision_interval * cfg.baseline_frame_rate
    n = round(product)
    if n < 1 or abs(product - n) > _FRAME_EPS * max(1.0, abs(product)):
        raise InvalidTimeConfig(
            f"decision_interval * baseline_frame_rate must be a positive integer, "
            f"got {cfg.decision_interval} * {cfg.baseline_frame_rate} = {product}"
        )
    return int(n)


@dataclass(frozen=True)
class SimClock:
    """Frame-counted simulation clock. A plain value; advancing returns a new one."""

    frame_index: int = 0
    decision_index: int = 0

    def advanced(self, frames_per_step: int) -> "SimClock":
        """Advance by exactly one frame, crossing a decision boundary when due."""
        frame = self.frame_index + 1
        return SimClock(frame_index=frame, decision_index=frame // frames_per_step)

    def sim_seconds(self, cfg: TimeConfig) -> float:
        return self.frame_index / cfg.baseline_frame_rate


def advance_frame(clock: SimClock, cfg: TimeConfig) -> SimClock:
    return clock.advanced(frames_per_decision(cfg))


def real_time_budget(frames: int, cfg: TimeConfig) -> float:
    """Wall-clock seconds the pacer targets for `frames` simulation frames."""
    if not cfg.paced:
        return 0.0
    return frames / (cfg.baseline_frame_rate * cfg.dilation_factor)


class WallClock(Protocol):
    """Monotonic wall-clock source the pacer reads and sleeps against."""

    def monotonic(self) -> float: ...

    def sleep(self, seconds: float) -> None: ...


class SystemWallClock:
    """The real wall clock."""

    def monotonic(self) -> float:
        return time.monotonic()

    def sleep(self, seconds: float) -> None:
        time.sleep(seconds)


class SimulatedWallClock:
    """Deterministic stand-in for the system clock.

    Sleeping advances the reading instead of blocking, so paced runs can be
    exercised in tests without consuming wall time.
    """

    def __init__(self, start: float = 0.0):
        self.now = start

    def monotonic(self) -> float:
        return self.now

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            self.now += seconds

    def advance(self, seconds: float) -> None:
        self.now += seconds


def pace(clock: SimClock, cfg: TimeConfig, wall: WallClock, anchor: float) -> float:
    """Sleep duration that keeps the run on the dilation-implied schedule.

    `anchor` is the wall time at which frame 0 was (or would have been)
    completed. Returns 0.0 when the simulation is at or behind schedule:
    in that case the caller proceeds immediately, which is the best-effort
    "fastest possible" behaviour when the hardware cannot keep up.
    """
    if not cfg.paced:
        return 0.0
    target = anchor + real_time_budget(clock.frame_index, cfg)
    remaining = target - wall.monotonic()
    return remaining if remaining > 0 else 0.0


class Pacer:
    """Per-frame pacer. Re-synchronizes against the wall clock once per frame,
    which keeps slow-motion playback smooth rather than bursty."""

    def __init__(self, cfg: TimeConfig, wall: WallClock | None = None):
        self.cfg = cfg
        self.wall = wall if wall is not None else SystemWallClock()
        self._anchor: float | None = None

    def start(self) -> None:
        self._anchor = self.wall.monotonic()

    def frame_completed(self, clock: SimClock) -> float:
        """Pace after a frame; returns the seconds actually requested to sleep."""
        if not self.cfg.paced:
            return 0.0
        if self._anchor is None:
            self.start()
        assert self._anchor is not None
        duration = pace(clock, self.cfg, self.wall, self._anchor)
        if duration > 0:
            self.wall.sleep(duration)
        return duration


def parse_dilation(text: str) -> float:
    """CLI helper: accepts a positive float or the literal 'max' (unpaced)."""
    if text.strip().lower() in ("max", "inf", "unpaced"):
        return UNPACED
    value = float(text)
    if not value > 0:
        raise ValueError(f"dilation factor must be positive, got {text!r}")
    return value
