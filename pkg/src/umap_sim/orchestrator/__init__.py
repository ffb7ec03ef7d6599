from .buffers import RoutingError, TeamBuffer, Transition, route_transitions
from .config import ConfigError, ExperimentConfig, PolicyBinding, load_config
from .policies import RandomPolicy, RecordedPolicy, ScriptedPolicy, TeamPolicy, make_policy
from .runner import (
    EpisodeResult,
    ReplayReport,
    RunArtifacts,
    build_policies,
    episode_seed,
    eval_points,
    eval_seed,
    evaluate,
    replay_trace,
    run_episode,
    run_eval,
    run_training,
    win_rate,
)
from .tabular_q import TabularQPolicy

__all__ = [
    "TeamBuffer",
    "Transition",
    "route_transitions",
    "RoutingError",
    "ConfigError",
    "ExperimentConfig",
    "PolicyBinding",
    "load_config",
    "TeamPolicy",
    "ScriptedPolicy",
    "RandomPolicy",
    "RecordedPolicy",
    "TabularQPolicy",
    "make_policy",
    "run_episode",
    "run_training",
    "run_eval",
    "evaluate",
    "replay_trace",
    "win_rate",
    "eval_points",
    "episode_seed",
    "eval_seed",
    "build_policies",
    "EpisodeResult",
    "RunArtifacts",
    "ReplayReport",
]
