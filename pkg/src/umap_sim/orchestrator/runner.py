"""Experiment loops: episode collection, team routing, training and replay.

The runner is the glue between tasks and policies: it collects episodes
(in-process, or across protocol workers when parallel > 1), routes each
team's experience into that team's buffer, invokes update hooks under the
configured schedule, and periodically evaluates greedily, logging win rates.
"""

from __future__ import annotations

import csv
import json
import os
import threading
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from ..rng import hash_label
from ..scenarios import make_world, registry_lookup, win_rate
from ..timeflow import TimeConfig
from ..trace import EpisodeEnd, EpisodeHeader, TraceWriter, read_episodes
from ..world import World
from .buffers import TeamBuffer, Transition, route_transitions
from .config import ExperimentConfig
from .policies import TeamPolicy, make_policy


@dataclass
class EpisodeResult:
    episode: int
    seed: int
    steps: int
    digest: int
    hexdigest: str
    winners: set[int]
    done: bool
    cumulative_rewards: dict[int, float]
    action_log: list[dict[int, int]] = field(default_factory=list)

    def team_return(self, world_teams: Mapping[int, list[int]], team: int) -> float:
        members = world_teams[team]
        return self.cumulative_rewards[members[0]] if members else 0.0


def run_episode(
    world: World,
    policies: Mapping[int, TeamPolicy],
    seed: int,
    *,
    episode_index: int = 0,
    max_steps: Optional[int] = None,
    buffers: Optional[Mapping[int, TeamBuffer]] = None,
    keep_actions: bool = False,
    trace: Optional[TraceWriter] = None,
) -> EpisodeResult:
    """One full episode in-process. Policies see only snapshots (and, when
    they ask for them, observation vectors)."""
    world.reset(seed)
    for policy in policies.values():
        policy.begin_episode(seed)
    if trace is not None:
        trace.episode_header(
            EpisodeHeader(
                task=getattr(world, "task_name", world.scenario.name),
                seed=seed,
                decision_interval=world.time_config.decision_interval,
                frame_rate=world.time_config.baseline_frame_rate,
                initial_digest=world.hexdigest,
            )
        )

    needs_obs = any(p.needs_observations for p in policies.values())
    cumulative: dict[int, float] = {a.agent_id: 0.0 for a in world.agents}
    raw_steps = []  # (snapshot, actions, rewards, done) for post-hoc routing
    action_log: list[dict[int, int]] = []
    limit = max_steps if max_steps is not None else world.max_episode_steps
    steps = 0
    done = False
    while steps < limit and not done:
        snapshot = world.snapshot()
        observations = world.scenario.observe(world) if needs_obs else None
        actions: dict[int, int] = {}
        for team in sorted(policies):
            actions.update(policies[team].act(snapshot, observations))
        result = world.step(actions)
        steps += 1
        done = result.done
        for aid, r in result.rewards.items():
            cumulative[aid] += r
        if buffers is not None:
            raw_steps.append((snapshot, dict(actions), result.rewards, done))
        if keep_actions or trace is not None:
            action_log.append(dict(actions))
        if trace is not None:
            trace.step(steps - 1, world.digest, actions)

    if buffers is not None:
        final_snapshot = world.snapshot()
        route_episode_steps(policies, buffers, raw_steps, final_snapshot, episode_index)
    if trace is not None:
        trace.episode_end(
            EpisodeEnd(steps=steps, final_digest=world.hexdigest, winners=sorted(world.winner_teams))
        )

    return EpisodeResult(
        episode=episode_index,
        seed=seed,
        steps=steps,
        digest=world.digest,
        hexdigest=world.hexdigest,
        winners=set(world.winner_teams),
        done=done,
        cumulative_rewards=cumulative,
        action_log=action_log if keep_actions else [],
    )


def route_episode_steps(policies, buffers, raw_steps, final_snapshot, episode_index) -> None:
    """Turn one collected episode (list of (snapshot, actions, rewards, done))
    into per-team buffer appends, annotating tabular state keys where the
    policy wants them."""
    team_map = {a["id"]: a["team"] for a in final_snapshot["agents"]}
    snapshots = [s for s, _, _, _ in raw_steps] + [final_snapshot]
    for idx, (snapshot, actions, rewards, done) in enumerate(raw_steps):
        nxt = snapshots[idx + 1]
        transitions = []
        agents_by_id = {a["id"]: a for a in snapshot["agents"]}
        next_by_id = {a["id"]: a for a in nxt["agents"]}
        for aid in sorted(actions):
            agent = agents_by_id[aid]
            policy = policies.get(team_map[aid])
            state_key = next_key = None
            if policy is not None and hasattr(policy, "state_key"):
                state_key = policy.state_key(snapshot, agent)
                next_key = policy.state_key(nxt, next_by_id[aid])
            transitions.append(
                Transition(
                    episode=episode_index,
                    step=idx,
                    agent_id=aid,
                    action=actions[aid],
                    reward=rewards[aid],
                    done=done,
                    state_key=state_key,
                    next_state_key=next_key,
                )
            )
        route_transitions(transitions, team_map, buffers)


def episode_seed(master_seed: int, episode_index: int) -> int:
    return hash_label(master_seed, f"episode/{episode_index}")


def eval_seed(master_seed: int, point: int, index: int) -> int:
    return hash_label(master_seed, f"eval/{point}/{index}")


def eval_points(total_episodes: int, test_interval: int) -> list[int]:
    """Episode counts at which evaluation runs (1-based, inclusive)."""
    if test_interval <= 0:
        return []
    return list(range(test_interval, total_episodes + 1, test_interval))


def _update_policies(policies, buffers, episode_index, schedule: str) -> None:
    teams = sorted(policies)
    if schedule == "reversed":
        teams = list(reversed(teams))
    if schedule == "concurrent":
        threads = [
            threading.Thread(
                target=policies[t].update, args=(buffers[t].episode_slice(episode_index),)
            )
            for t in teams
        ]
        for th in threads:
            th.start()
        for th in threads:
            th.join()
    else:
        for t in teams:
            policies[t].update(buffers[t].episode_slice(episode_index))


def evaluate(
    world: World,
    policies: Mapping[int, TeamPolicy],
    seeds: Sequence[int],
    max_steps: Optional[int] = None,
) -> dict[int, dict]:
    """Greedy evaluation: exploration off, no policy state mutated."""
    greedy_flags = {}
    for team, policy in policies.items():
        if hasattr(policy, "greedy"):
            greedy_flags[team] = policy.greedy
            policy.greedy = True
    try:
        outcomes: dict[int, list[bool]] = {t: [] for t in world.teams} if world.teams else {}
        returns: dict[int, list[float]] = {}
        results = []
        for i, seed in enumerate(seeds):
            result = run_episode(world, policies, seed, episode_index=i, max_steps=max_steps)
            results.append(result)
            for team, members in world.teams.items():
                outcomes.setdefault(team, []).append(team in result.winners)
                returns.setdefault(team, []).append(result.cumulative_rewards[members[0]])
        return {
            team: {
                "win_rate": win_rate(outcomes[team]),
                "mean_return": sum(returns[team]) / len(returns[team]),
                "episodes": len(seeds),
            }
            for team in outcomes
        }
    finally:
        for team, flag in greedy_flags.items():
            policies[team].greedy = flag


@dataclass
class RunArtifacts:
    run_dir: str
    eval_rows: list[dict]
    episodes: int
    policies: dict[int, TeamPolicy]
    buffers: dict[int, TeamBuffer]


def build_policies(config: ExperimentConfig) -> dict[int, TeamPolicy]:
    return {
        team: make_policy(b.policy, team, b.params) for team, b in sorted(config.bindings.items())
    }


def _world_for(config: ExperimentConfig, wall_clock=None) -> World:
    task = registry_lookup(config.mission.task)
    kwargs = {}
    if config.mission.decision_interval is not None:
        kwargs["decision_interval"] = config.mission.decision_interval
    if config.mission.frame_rate is not None:
        kwargs["frame_rate"] = config.mission.frame_rate
    tc = task.time_config(dilation=config.mission.dilation, **kwargs)
    return make_world(task, time_config=tc, map_id=config.mission.map_id, wall_clock=wall_clock)


def run_training(config: ExperimentConfig, progress=None) -> RunArtifacts:
    """Training loop: collect -> route -> update, evaluating greedily every
    `test_interval` episodes and logging win rates per team."""
    os.makedirs(config.core.storage, exist_ok=True)
    world = _world_for(config)
    policies = build_policies(config)
    buffers = {team: TeamBuffer(team) for team in policies}
    total = config.core.train_episodes
    points = set(eval_points(total, config.core.test_interval))
    eval_rows: list[dict] = []

    trace_writer = None
    trace_fh = None
    trace_dir = os.environ.get("UMAP_TRACE_DIR")
    if config.core.trace or trace_dir:
        trace_path = os.path.join(trace_dir or config.core.storage, "train.trace")
        trace_fh = open(trace_path, "wb")
        trace_writer = TraceWriter(trace_fh)

    collector = None
    if config.core.parallel > 1:
        from ..protocol.pool import PoolCollector

        collector = PoolCollector(config, policies, buffers)
    try:
        episode = 0
        while episode < total:
            if collector is None:
                episode += 1
                seed = episode_seed(config.core.seed, episode)
                run_episode(
                    world,
                    policies,
                    seed,
                    episode_index=episode,
                    buffers=buffers,
                    trace=trace_writer,
                )
                completed = [episode]
            else:
                completed = collector.collect_wave(episode)
                episode += len(completed)
            for idx in completed:
                _update_policies(policies, buffers, idx, config.core.update_schedule)
                if idx in points:
                    seeds = [
                        eval_seed(config.core.seed, idx, i)
                        for i in range(config.core.test_episodes)
                    ]
                    report = evaluate(world, policies, seeds)
                    for team, stats in sorted(report.items()):
                        eval_rows.append({"episode": idx, "team": team, **stats})
                    _write_eval_csv(config.core.storage, eval_rows)
                    _save_checkpoints(config.core.storage, idx, policies)
                    if progress is not None:
                        progress(idx, report)
    finally:
        # abort paths still flush partial logs
        if collector is not None:
            collector.close()
        if trace_fh is not None:
            trace_fh.close()
        _write_eval_csv(config.core.storage, eval_rows)
    return RunArtifacts(
        run_dir=config.core.storage,
        eval_rows=eval_rows,
        episodes=total,
        policies=policies,
        buffers=buffers,
    )


def _write_eval_csv(storage: str, rows: list[dict]) -> None:
    path = os.path.join(storage, "win_rate.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["episode", "team", "win_rate", "mean_return", "episodes"])
        writer.writeheader()
        writer.writerows(rows)


def _save_checkpoints(storage: str, episode: int, policies: Mapping[int, TeamPolicy]) -> None:
    for team, policy in policies.items():
        state = policy.save_state()
        if not state:
            continue
        path = os.path.join(storage, f"checkpoint_team{team}_ep{episode}.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(state, fh)


def run_eval(config: ExperimentConfig) -> dict[int, dict]:
    world = _world_for(config)
    policies = build_policies(config)
    episodes = config.mission.episodes or config.core.test_episodes
    seeds = [eval_seed(config.core.seed, 0, i) for i in range(episodes)]
    return evaluate(world, policies, seeds)


@dataclass
class ReplayReport:
    episodes: int
    steps: int
    mismatches: list[str]

    @property
    def ok(self) -> bool:
        return not self.mismatches


def replay_trace(path: str) -> ReplayReport:
    """Re-run every episode in a trace and verify each recorded digest.

    Accepts both raw record streams (runner-written) and TraceChunk frame
    streams (server-written)."""
    from ..protocol.trace_stream import is_framed_trace, unwrap_framed_trace
    from ..trace import TraceError

    fh = unwrap_framed_trace(path) if is_framed_trace(path) else open(path, "rb")
    try:
        with fh:
            return _verify_episodes(read_episodes(fh))
    except TraceError as exc:
        return ReplayReport(episodes=0, steps=0, mismatches=[f"trace corrupt: {exc}"])


def _verify_episodes(traced_episodes) -> ReplayReport:
    episodes = 0
    steps = 0
    mismatches: list[str] = []
    for traced in traced_episodes:
        episodes += 1
        task = registry_lookup(traced.header.task)
        tc = TimeConfig(
            decision_interval=traced.header.decision_interval,
            baseline_frame_rate=traced.header.frame_rate,
            dilation_factor=float("inf"),
        )
        world = make_world(task, time_config=tc)
        world.reset(traced.header.seed)
        if world.hexdigest != traced.header.initial_digest:
            mismatches.append(
                f"episode {episodes}: initial digest {world.hexdigest} != "
                f"{traced.header.initial_digest}"
            )
            continue
        for record in traced.steps:
            world.step(record.actions)
            steps += 1
            if world.digest != record.digest:
                mismatches.append(f"episode {episodes} step {record.step}: digest mismatch")
                break
        if traced.end is not None and world.hexdigest != traced.end.final_digest:
            mismatches.append(f"episode {episodes}: final digest mismatch")
    return ReplayReport(episodes=episodes, steps=steps, mismatches=mismatches)
