import json
import math
import os

import pytest

from umap_sim.orchestrator import (
    ConfigError,
    RandomPolicy,
    RecordedPolicy,
    ScriptedPolicy,
    TabularQPolicy,
    TeamBuffer,
    Transition,
    RoutingError,
    build_policies,
    eval_points,
    evaluate,
    load_config,
    replay_trace,
    route_transitions,
    run_episode,
    run_training,
    win_rate,
)
from umap_sim.orchestrator.policies import _heading_action, _quantize_4way
from umap_sim.scenarios import TaskSpec, TeamSpec, registry_lookup
from umap_sim.trace import TraceWriter

from helpers import world_for


def _config_doc(**over):
    doc = {
        "core": {"storage": over.get("storage", "/tmp/umap_test_run"), "seed": 1,
                 "parallel": 1, "test_interval": 8, "test_episodes": 4,
                 "train_episodes": over.get("train_episodes", 0)},
        "mission": {"task": over.get("task", "flag_capture_2scripts"), "mode": "eval"},
        "algorithm": over.get(
            "algorithm",
            {
                "bindings": {"0": "tabular_q", "1": "scripted", "2": "scripted"},
                "params": {
                    "tabular_q": {"learning_rate": 0.2},
                    "t1.scripted": {"note": "left"},
                    "t2.scripted": {"note": "right"},
                },
            },
        ),
    }
    doc.update({k: v for k, v in over.items() if k in ("core", "mission")})
    return doc


class TestLoadConfig:
    def test_three_team_bindings_resolve_independently(self):
        config = load_config(_config_doc())
        assert config.binding(0).policy == "tabular_q"
        assert config.binding(0).params == {"learning_rate": 0.2}
        assert config.binding(1).params == {"note": "left"}
        assert config.binding(2).params == {"note": "right"}

    def test_missing_binding_for_learnable_team_is_an_error(self):
        doc = _config_doc(algorithm={"bindings": {"1": "scripted", "2": "scripted"}})
        with pytest.raises(ConfigError, match="team"):
            load_config(doc)

    def test_scripted_default_for_scripted_teams(self):
        doc = _config_doc(algorithm={"bindings": {"0": "random"}})
        config = load_config(doc)
        assert config.binding(1).policy == "scripted"
        assert config.binding(2).policy == "scripted"

    def test_duplicate_policy_with_bare_params_is_conflicting(self):
        doc = _config_doc(
            algorithm={
                "bindings": {"0": "scripted", "1": "scripted", "2": "scripted"},
                "params": {"scripted": {"x": 1}},
            }
        )
        with pytest.raises(ConfigError, match="prefix"):
            load_config(doc)

    def test_prefixed_params_for_duplicates_are_fine(self):
        doc = _config_doc(
            algorithm={
                "bindings": {"0": "scripted", "1": "scripted", "2": "scripted"},
                "params": {"t0.scripted": {"x": 1}, "t1.scripted": {"x": 2}},
            }
        )
        config = load_config(doc)
        assert config.binding(0).params == {"x": 1}
        assert config.binding(1).params == {"x": 2}
        assert config.binding(2).params == {}

    def test_unknown_task_rejected(self):
        with pytest.raises(ConfigError, match="unknown task"):
            load_config(_config_doc(task="no_such_task"))

    def test_stray_prefix_rejected(self):
        doc = _config_doc(
            algorithm={
                "bindings": {"0": "random", "1": "scripted", "2": "scripted"},
                "params": {"t5.random": {}},
            }
        )
        with pytest.raises(ConfigError, match="prefix"):
            load_config(doc)

    def test_json_text_and_file(self, tmp_path):
        doc = _config_doc()
        config = load_config(json.dumps(doc))
        assert config.mission.task == "flag_capture_2scripts"
        path = tmp_path / "exp.json"
        path.write_text(json.dumps(doc))
        assert load_config(str(path)).mission.task == "flag_capture_2scripts"


class TestRouting:
    def test_metal_clash_ten_tuples_per_team_per_step(self):
        world = world_for("metal_clash_5lc_5mc")
        buffers = {0: TeamBuffer(0), 1: TeamBuffer(1)}
        policies = {0: RandomPolicy(0), 1: RandomPolicy(1)}
        run_episode(world, policies, seed=3, max_steps=4, buffers=buffers, episode_index=1)
        assert len(buffers[0]) == 40 and len(buffers[1]) == 40
        steps0 = {}
        for t in buffers[0].transitions:
            steps0.setdefault(t.step, []).append(t.agent_id)
        assert all(len(ids) == 10 for ids in steps0.values())

    def test_three_team_partition_is_disjoint_and_complete(self):
        world = world_for("flag_capture_2scripts")
        buffers = {t: TeamBuffer(t) for t in (0, 1, 2)}
        policies = {t: ScriptedPolicy(t) for t in (0, 1, 2)}
        run_episode(world, policies, seed=5, max_steps=6, buffers=buffers, episode_index=0)
        seen = set()
        for team, buf in buffers.items():
            for t in buf.transitions:
                key = (t.step, t.agent_id)
                assert key not in seen  # intersection empty
                seen.add(key)
        assert len(seen) == 6 * 45  # union covers every agent every step

    def test_agent_without_team_is_hard_error(self):
        buffers = {0: TeamBuffer(0)}
        t = Transition(episode=0, step=0, agent_id=9, action=0, reward=0.0, done=False)
        with pytest.raises(RoutingError):
            route_transitions([t], {0: 0}, buffers)

    def test_update_order_does_not_change_buffers(self):
        signatures = []
        for order in ((0, 1), (1, 0)):
            world = world_for("metal_clash_5lc_5mc")
            buffers = {0: TeamBuffer(0), 1: TeamBuffer(1)}
            policies = {t: ScriptedPolicy(t) for t in (0, 1)}
            run_episode(world, policies, seed=11, max_steps=10, buffers=buffers, episode_index=0)
            for team in order:  # update hook ordering differs; buffers must not
                policies[team].update(buffers[team].episode_slice(0))
            signatures.append((buffers[0].signature(), buffers[1].signature()))
        assert signatures[0] == signatures[1]


class TestOrderingInvariance:
    def _train(self, schedule: str, storage: str):
        doc = {
            "core": {
                "storage": storage,
                "seed": 7,
                "parallel": 1,
                "test_interval": 6,
                "test_episodes": 4,
                "train_episodes": 6,
                "update_schedule": schedule,
            },
            "mission": {"task": "monster_crisis_easy", "mode": "train"},
            "algorithm": {"bindings": {"0": "tabular_q"},
                          "params": {"tabular_q": {"learning_rate": 0.3, "epsilon": 0.3}}},
        }
        return run_training(load_config(doc))

    def test_schedules_produce_identical_buffers_and_win_rates(self, tmp_path):
        runs = {
            schedule: self._train(schedule, str(tmp_path / schedule))
            for schedule in ("sequential", "reversed", "concurrent")
        }
        sigs = {s: r.buffers[0].signature() for s, r in runs.items()}
        assert sigs["sequential"] == sigs["reversed"] == sigs["concurrent"]
        rows = {s: r.eval_rows for s, r in runs.items()}
        assert rows["sequential"] == rows["reversed"] == rows["concurrent"]


class TestGlueNeutrality:
    def test_recorded_opponent_sees_identical_streams(self):
        # record team 0's scripted actions, then swap team 0's binding for a
        # replay of the recording: team 1's buffer must be byte-identical
        world = world_for("metal_clash_5lc_5mc")
        buffers_a = {0: TeamBuffer(0), 1: TeamBuffer(1)}
        live = {0: ScriptedPolicy(0), 1: ScriptedPolicy(1)}
        result = run_episode(
            world, live, seed=9, max_steps=12, buffers=buffers_a, episode_index=0, keep_actions=True
        )
        team0_log = [
            {aid: act for aid, act in step.items() if world.team_of(aid) == 0}
            for step in result.action_log
        ]
        buffers_b = {0: TeamBuffer(0), 1: TeamBuffer(1)}
        swapped = {0: RecordedPolicy(0, team0_log), 1: ScriptedPolicy(1)}
        result_b = run_episode(
            world, swapped, seed=9, max_steps=12, buffers=buffers_b, episode_index=0
        )
        assert result_b.digest == result.digest
        assert buffers_b[1].signature() == buffers_a[1].signature()


class TestScriptedPolicies:
    def test_identical_seeds_identical_action_streams(self):
        world = world_for("navigation_game_5_vs_2")
        a = run_episode(world, {0: ScriptedPolicy(0), 1: ScriptedPolicy(1)}, seed=3,
                        max_steps=15, keep_actions=True)
        b = run_episode(world, {0: ScriptedPolicy(0), 1: ScriptedPolicy(1)}, seed=3,
                        max_steps=15, keep_actions=True)
        assert a.action_log == b.action_log

    def test_flag_script_heads_toward_flag_quantized(self):
        world = world_for("flag_capture_1script")
        world.reset(2)
        snap = world.snapshot()
        actions = ScriptedPolicy(0).act(snap)
        flag = next(e for e in snap["entities"] if e["kind"] == "flag")
        s = 0.7071067811865476
        headings = ((1.0, 0.0), (s, s), (0.0, 1.0), (-s, s), (-1.0, 0.0), (-s, -s), (0.0, -1.0), (s, -s))
        for agent in snap["agents"]:
            if agent["team"] != 0:
                continue
            dx = flag["pos"][0] - agent["pos"][0]
            dy = flag["pos"][1] - agent["pos"][1]
            best = max(range(8), key=lambda k: (headings[k][0] * dx + headings[k][1] * dy, -k))
            assert actions[agent["id"]] == best

    def test_quantize_4way(self):
        assert _quantize_4way(10.0, 1.0) == 2  # east
        assert _quantize_4way(-10.0, 1.0) == 4  # west
        assert _quantize_4way(1.0, 10.0) == 1  # north
        assert _quantize_4way(1.0, -10.0) == 3  # south
        assert _quantize_4way(5.0, 5.0) == 2  # tie: x axis wins

    def test_heading_action_ties_pick_lowest_index(self):
        assert _heading_action(1.0, 0.0) == 0
        assert _heading_action(1.0, 1.0) == 1
        assert _heading_action(0.0, 0.0) == 0

    @pytest.mark.slow
    def test_script_beats_random_at_metal_clash(self):
        outcomes = []
        world = world_for("metal_clash_5lc_5mc")
        for seed in range(100):
            result = run_episode(world, {0: ScriptedPolicy(0), 1: RandomPolicy(1)}, seed=seed)
            outcomes.append(0 in result.winners)
        assert win_rate(outcomes) > 0.9


class TestTabularQ:
    def test_single_terminal_transition(self):
        q = TabularQPolicy(0, {"learning_rate": 0.25, "n_actions": 4})
        q.td_update(("s",), 2, 1.0, None, done=True)
        assert q.q(("s",), 2) == 0.25  # lr * reward on a zero-initialized table

    def test_two_step_chain_converges_to_bellman_fixed_point(self):
        # deterministic chain s0 -a0-> s1 -a0-> terminal, rewards 0 then 1
        gamma = 0.99
        q = TabularQPolicy(0, {"learning_rate": 0.5, "gamma": gamma, "n_actions": 1})
        for _ in range(200):
            q.td_update(("s0",), 0, 0.0, ("s1",), done=False)
            q.td_update(("s1",), 0, 1.0, None, done=True)
        assert q.q(("s1",), 0) == pytest.approx(1.0, abs=1e-9)
        assert q.q(("s0",), 0) == pytest.approx(gamma * 1.0, abs=1e-6)

    def test_greedy_action_is_argmax(self):
        q = TabularQPolicy(0, {"n_actions": 3})
        q.table[(("s",), 0)] = 0.1
        q.table[(("s",), 2)] = 0.9
        assert q.best_action(("s",), 3) == 2

    def test_eval_never_mutates_policy_state(self):
        world = world_for("monster_crisis_easy")
        policy = TabularQPolicy(0, {"epsilon": 0.5})
        policy.table[((0, 0, 0, 0), 1)] = 0.5
        before = dict(policy.table)
        evaluate(world, {0: policy}, seeds=[1, 2, 3])
        assert policy.table == before
        assert policy.greedy is False  # restored

    def test_save_load_roundtrip(self):
        q = TabularQPolicy(0, {"n_actions": 2})
        q.n_actions = 2
        q.table[((1, 2), 0)] = 0.75
        clone = TabularQPolicy(0, {})
        clone.load_state(q.save_state())
        assert clone.q((1, 2), 0) == 0.75 and clone.n_actions == 2


class TestTrainingLoop:
    def test_eval_points_cadence(self):
        assert eval_points(5120, 1280) == [1280, 2560, 3840, 5120]
        assert eval_points(32, 64) == []
        assert eval_points(128, 64) == [64, 128]

    def test_desk_scale_training_run_writes_artifacts(self, tmp_path):
        storage = str(tmp_path / "run1")
        doc = {
            "core": {"storage": storage, "seed": 3, "parallel": 1, "test_interval": 4,
                     "test_episodes": 3, "train_episodes": 8, "trace": True},
            "mission": {"task": "monster_crisis_easy", "mode": "train"},
            "algorithm": {"bindings": {"0": "tabular_q"}},
        }
        artifacts = run_training(load_config(doc))
        assert artifacts.episodes == 8
        assert [r["episode"] for r in artifacts.eval_rows] == [4, 8]
        assert os.path.exists(os.path.join(storage, "win_rate.csv"))
        checkpoints = [f for f in os.listdir(storage) if f.startswith("checkpoint_team0")]
        assert len(checkpoints) == 2
        report = replay_trace(os.path.join(storage, "train.trace"))
        assert report.ok and report.episodes == 8

    def test_parallel_pool_training_matches_episode_seeds(self, tmp_path):
        # same seeds, in-process vs 2-worker pool: identical buffers
        base = {
            "core": {"seed": 5, "test_interval": 0, "test_episodes": 1, "train_episodes": 4},
            "mission": {"task": "monster_crisis_easy", "mode": "train"},
            "algorithm": {"bindings": {"0": "random"}},
        }
        runs = {}
        for parallel in (1, 2):
            doc = json.loads(json.dumps(base))
            doc["core"]["parallel"] = parallel
            doc["core"]["storage"] = str(tmp_path / f"p{parallel}")
            runs[parallel] = run_training(load_config(doc))
        assert runs[1].buffers[0].signature() == runs[2].buffers[0].signature()


class TestReplayMode:
    def test_recorded_trace_reproduces_digests(self, tmp_path):
        path = tmp_path / "episode.trace"
        world = world_for("flag_capture_1script")
        with open(path, "wb") as fh:
            writer = TraceWriter(fh)
            run_episode(
                world,
                {0: ScriptedPolicy(0), 1: ScriptedPolicy(1)},
                seed=6,
                max_steps=20,
                trace=writer,
            )
        report = replay_trace(str(path))
        assert report.ok
        assert report.episodes == 1 and report.steps == 20

    def test_tampered_digest_is_detected(self, tmp_path):
        from umap_sim.trace import encode_end, encode_header, encode_step, read_episodes

        path = tmp_path / "episode.trace"
        world = world_for("monster_crisis_easy")
        with open(path, "wb") as fh:
            writer = TraceWriter(fh)
            run_episode(world, {0: RandomPolicy(0)}, seed=1, max_steps=10, trace=writer)
        with open(path, "rb") as fh:
            (episode,) = list(read_episodes(fh))
        episode.steps[5].digest ^= 1  # forge one recorded digest
        with open(path, "wb") as fh:
            fh.write(encode_header(episode.header))
            for record in episode.steps:
                fh.write(encode_step(record.step, record.digest, record.actions))
            fh.write(encode_end(episode.end))
        report = replay_trace(str(path))
        assert not report.ok
        assert any("step 5" in line for line in report.mismatches)

    def test_structurally_corrupt_trace_reported_not_crashing(self, tmp_path):
        path = tmp_path / "episode.trace"
        world = world_for("monster_crisis_easy")
        with open(path, "wb") as fh:
            writer = TraceWriter(fh)
            run_episode(world, {0: RandomPolicy(0)}, seed=1, max_steps=5, trace=writer)
        blob = bytearray(path.read_bytes())
        blob[-20] ^= 0x01  # lands inside the episode-end JSON
        path.write_bytes(bytes(blob))
        report = replay_trace(str(path))
        assert not report.ok
