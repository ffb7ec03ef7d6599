"""umap-sim: deterministic multi-team agent simulation platform.

Simulation results depend only on (task, seed, actions): never on wall-clock
speed, the time dilation factor, pacing mode or how many worlds run next to
each other. See README.md for the tour.
"""

from .events import Event, EventKind
from .hashing import TrajectoryHasher, trajectory_hash
from .timeflow import (
    Pacer,
    SimClock,
    SimulatedWallClock,
    SystemWallClock,
    TimeConfig,
    UNPACED,
    frames_per_decision,
    real_time_budget,
)
from .world import (
    AgentKind,
    AgentState,
    Command,
    EntityState,
    HP_SCALE,
    MissingActionError,
    ObjectPool,
    World,
    discounted_team_return,
    integrate_kinematics,
)

__version__ = "0.1.0"
