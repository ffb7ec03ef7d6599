"""Three-section experiment configuration.

One JSON document drives a whole experiment:

  core      storage path, seed, parallel env count, evaluation cadence
  mission   task/map selection, team list, run mode
  algorithm per-team policy bindings and their parameter bundles

When several teams use the same policy name, their parameter bundles are
disambiguated by a team prefix key ("t2.scripted"); a bare policy-name key is
only legal while the binding is unique.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from ..scenarios import registry_lookup
from ..timeflow import parse_dilation

MODES = ("train", "eval", "replay", "bench")
UPDATE_SCHEDULES = ("sequential", "reversed", "concurrent")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PolicyBinding:
    team_id: int
    policy: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CoreConfig:
    storage: str = "runs"
    seed: int = 0
    parallel: int = 1
    test_interval: int = 1280
    test_episodes: int = 512
    train_episodes: int = 0
    update_schedule: str = "sequential"
    trace: bool = False


@dataclass(frozen=True)
class MissionConfig:
    task: str
    mode: str = "eval"
    map_id: Optional[str] = None
    teams: tuple[int, ...] = ()
    dilation: float = float("inf")
    decision_interval: Optional[float] = None
    frame_rate: Optional[float] = None
    trace_file: Optional[str] = None
    episodes: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    core: CoreConfig
    mission: MissionConfig
    bindings: dict[int, PolicyBinding]

    def binding(self, team_id: int) -> PolicyBinding:
        return self.bindings[team_id]


def load_config(source) -> ExperimentConfig:
    """Parse and validate a config document (dict, JSON text or file path)."""
    if isinstance(source, dict):
        doc = source
    else:
        text = str(source)
        if text.lstrip().startswith("{"):
            doc = json.loads(text)
        else:
            with open(text, "r", encoding="utf-8") as fh:
                doc = json.load(fh)

    core_doc = doc.get("core", {})
    mission_doc = doc.get("mission", {})
    algo_doc = doc.get("algorithm", {})

    if "task" not in mission_doc:
        raise ConfigError("mission.task is required")
    task_name = mission_doc["task"]
    try:
        task = registry_lookup(task_name)
    except KeyError as exc:
        raise ConfigError(str(exc)) from None

    mode = mission_doc.get("mode", "eval")
    if mode not in MODES:
        raise ConfigError(f"mission.mode must be one of {MODES}, got {mode!r}")

    teams = tuple(mission_doc.get("teams", [t.team_id for t in task.teams]))
    declared = {t.team_id for t in task.teams}
    unknown = [t for t in teams if t not in declared]
    if unknown:
        raise ConfigError(f"mission.teams {unknown} not present in task {task_name}")

    schedule = core_doc.get("update_schedule", "sequential")
    if schedule not in UPDATE_SCHEDULES:
        raise ConfigError(f"core.update_schedule must be one of {UPDATE_SCHEDULES}")

    core = CoreConfig(
        storage=core_doc.get("storage", "runs"),
        seed=int(core_doc.get("seed", 0)),
        parallel=int(core_doc.get("parallel", 1)),
        test_interval=int(core_doc.get("test_interval", 1280)),
        test_episodes=int(core_doc.get("test_episodes", 512)),
        train_episodes=int(core_doc.get("train_episodes", 0)),
        update_schedule=schedule,
        trace=bool(core_doc.get("trace", False)),
    )

    time_doc = mission_doc.get("time", {})
    dilation = time_doc.get("dilation", "max")
    mission = MissionConfig(
        task=task_name,
        mode=mode,
        map_id=mission_doc.get("map"),
        teams=teams,
        dilation=parse_dilation(str(dilation)),
        decision_interval=time_doc.get("decision_interval"),
        frame_rate=time_doc.get("frame_rate"),
        trace_file=mission_doc.get("trace_file"),
        episodes=int(mission_doc.get("episodes", 0)),
    )

    bindings = _resolve_bindings(algo_doc, teams, task, task_name)
    return ExperimentConfig(core=core, mission=mission, bindings=bindings)


def _resolve_bindings(algo_doc: dict, teams, task, task_name: str) -> dict[int, PolicyBinding]:
    raw_bindings = {int(t): name for t, name in algo_doc.get("bindings", {}).items()}
    params_doc: dict = algo_doc.get("params", {})

    bindings: dict[int, PolicyBinding] = {}
    scripted_defaults = {t.team_id for t in task.teams if t.scripted}
    missing = []
    for team in teams:
        if team in raw_bindings:
            policy = raw_bindings[team]
        elif team in scripted_defaults:
            policy = "scripted"
        else:
            missing.append(team)
            continue
        bindings[team] = PolicyBinding(team, policy)
    if missing:
        raise ConfigError(
            f"task {task_name}: no algorithm binding for team(s) {missing} "
            "(only teams marked scripted in the task may be left unbound)"
        )

    # Resolve parameter bundles: prefixed keys beat bare keys; bare keys are
    # ambiguous (and rejected) once a policy name is bound more than once.
    by_policy: dict[str, list[int]] = {}
    for team, b in bindings.items():
        by_policy.setdefault(b.policy, []).append(team)

    recognized = set()
    for team, b in sorted(bindings.items()):
        prefixed = f"t{team}.{b.policy}"
        if prefixed in params_doc:
            params = params_doc[prefixed]
            recognized.add(prefixed)
        elif b.policy in params_doc:
            if len(by_policy[b.policy]) > 1:
                raise ConfigError(
                    f"policy {b.policy!r} is bound to teams {sorted(by_policy[b.policy])}; "
                    f"parameter bundles must use distinct team prefixes like 't{team}.{b.policy}'"
                )
            params = params_doc[b.policy]
            recognized.add(b.policy)
        else:
            params = {}
        bindings[team] = PolicyBinding(team, b.policy, dict(params))

    stray = set(params_doc) - recognized - {
        b.policy for b in bindings.values() if len(by_policy[b.policy]) == 1
    }
    for key in sorted(stray):
        if "." in key:
            prefix, _, policy = key.partition(".")
            raise ConfigError(
                f"algorithm.params key {key!r} does not match any team binding "
                f"(conflicting prefix {prefix!r})"
            )
        raise ConfigError(f"algorithm.params key {key!r} does not match any bound policy")

    return bindings
