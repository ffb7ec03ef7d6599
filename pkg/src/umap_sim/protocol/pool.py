"""Worker pool: N isolated simulation processes driven in lockstep.

Each worker owns exactly one world behind one connection and has at most one
request in flight. pool_step scatters the whole batch before gathering, so
workers simulate concurrently; a dead worker costs only its own slot
(WorkerFailed) and never poisons the others.
"""

from __future__ import annotations

import multiprocessing as mp
import os
import uuid
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .client import ConnectionClosed, ServerError, WorldClient
from .frames import MessageKind
from .transport import TransportError, shmem_client, shmem_create_pair, tcp_connect


@dataclass(frozen=True)
class WorkerFailed:
    worker_id: int
    error: str


class PoolError(Exception):
    pass


class _Worker:
    def __init__(self, worker_id: int, process, client: WorldClient, pid: int):
        self.worker_id = worker_id
        self.process = process
        self.client = client
        self.pid = pid
        self.alive = True


class WorkerPool:
    def __init__(self, n_workers: int, transport: str = "tcp"):
        if n_workers < 1:
            raise PoolError("need at least one worker")
        if transport not in ("tcp", "shmem"):
            raise PoolError(f"unknown transport {transport!r}")
        self.n_workers = n_workers
        self.transport = transport
        self.workers: dict[int, _Worker] = {}
        self._shmem_pairs = []

    def start(self) -> None:
        from .worker import worker_main

        ctx = mp.get_context("fork")
        for wid in range(self.n_workers):
            parent_end, child_end = ctx.Pipe()
            channel = None
            if self.transport == "shmem":
                channel = f"umap_{os.getpid()}_{wid}_{uuid.uuid4().hex[:8]}"
                self._shmem_pairs.append(shmem_create_pair(channel))
            proc = ctx.Process(
                target=worker_main, args=(self.transport, child_end, channel), daemon=True
            )
            proc.start()
            child_end.close()
            kind, address = parent_end.recv()
            parent_end.close()
            if kind == "error":
                raise PoolError(f"worker {wid} failed to start: {address}")
            if kind == "tcp":
                client = WorldClient(tcp_connect("127.0.0.1", address))
            else:
                client = WorldClient(shmem_client(address))
            self.workers[wid] = _Worker(wid, proc, client, proc.pid)

    # -- configuration ------------------------------------------------------

    def configure_all(
        self,
        task: str,
        seeds: Sequence[int],
        time: Optional[dict] = None,
        options: Optional[dict] = None,
        map_id: Optional[str] = None,
    ) -> dict[int, dict]:
        if len(seeds) != len(self.workers):
            raise PoolError(f"{len(seeds)} seeds for {len(self.workers)} workers")
        out = {}
        for wid, worker in sorted(self.workers.items()):
            out[wid] = worker.client.configure(
                task, seed=seeds[wid], time=time, options=options, map_id=map_id
            )
        return out

    def reset_all(self, seeds: Optional[Mapping[int, int]] = None) -> dict[int, dict]:
        out = {}
        for wid, worker in sorted(self.workers.items()):
            seed = None if seeds is None else seeds.get(wid)
            out[wid] = worker.client.reset(seed)
        return out

    # -- lockstep stepping -----------------------------------------------------

    def pool_step(self, actions_per_worker: Mapping[int, dict[int, int]]):
        """Scatter StepRequests, then gather. Result per worker id is either
        the StepResponse body or a WorkerFailed value."""
        results: dict[int, object] = {}
        sent = []
        for wid in sorted(actions_per_worker):
            worker = self.workers[wid]
            if not worker.alive:
                results[wid] = WorkerFailed(wid, "worker already failed")
                continue
            try:
                worker.client.send(
                    MessageKind.STEP_REQUEST,
                    {"actions": {str(a): int(v) for a, v in actions_per_worker[wid].items()}},
                )
                sent.append(wid)
            except (OSError, TransportError) as exc:
                worker.alive = False
                results[wid] = WorkerFailed(wid, f"send failed: {exc}")
        for wid in sent:
            worker = self.workers[wid]
            try:
                results[wid] = worker.client.recv(MessageKind.STEP_RESPONSE)
            except (ConnectionClosed, ServerError, OSError, TransportError) as exc:
                worker.alive = False
                results[wid] = WorkerFailed(wid, f"recv failed: {exc}")
        return results

    def kill_worker(self, worker_id: int) -> None:
        worker = self.workers[worker_id]
        worker.process.kill()
        worker.process.join(timeout=5)
        worker.alive = False

    def shutdown(self) -> None:
        for worker in self.workers.values():
            if worker.alive:
                try:
                    worker.client.shutdown(stop_server=True)
                except Exception:
                    pass
            worker.client.close()
        for worker in self.workers.values():
            worker.process.join(timeout=5)
            if worker.process.is_alive():
                worker.process.kill()
                worker.process.join(timeout=5)
        for c2s, s2c in self._shmem_pairs:
            for shm in (c2s, s2c):
                try:
                    shm.close()
                    shm.unlink()
                except Exception:
                    pass
        self._shmem_pairs.clear()
        self.workers.clear()

    def __enter__(self) -> "WorkerPool":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()


class PoolCollector:
    """Episode collection for run_training when parallel > 1.

    Policies are cloned per (worker, episode) so exploration randomness stays
    a pure function of the episode seed; learned state (e.g. the Q table) is
    shared by reference, and updates run only between waves.
    """

    def __init__(self, config, policies, buffers):
        from ..orchestrator.runner import episode_seed  # circular-safe

        self._episode_seed = episode_seed
        self.config = config
        self.policies = policies
        self.buffers = buffers
        self.pool = WorkerPool(config.core.parallel, transport="tcp")
        self.pool.start()
        needs_obs = any(p.needs_observations for p in policies.values())
        self.pool.configure_all(
            config.mission.task,
            seeds=[0] * config.core.parallel,
            time={"dilation": "max"},
            options={"send_observations": needs_obs},
            map_id=config.mission.map_id,
        )
        self.needs_obs = needs_obs

    def collect_wave(self, episode_base: int) -> list[int]:
        from ..orchestrator.runner import route_episode_steps

        episodes = {
            wid: episode_base + i + 1 for i, wid in enumerate(sorted(self.pool.workers))
        }
        clones: dict[int, dict] = {}
        states: dict[int, dict] = {}
        for wid, ep in episodes.items():
            seed = self._episode_seed(self.config.core.seed, ep)
            team_policies = {
                team: policy.clone_for_collection() for team, policy in self.policies.items()
            }
            for policy in team_policies.values():
                policy.begin_episode(seed)
            body = self.pool.workers[wid].client.reset(seed)
            clones[wid] = team_policies
            states[wid] = {
                "episode": ep,
                "snapshot": body["snapshot"],
                "raw_steps": [],
                "done": False,
                "steps": 0,
            }

        while any(not s["done"] for s in states.values()):
            batch = {}
            for wid, state in states.items():
                if state["done"]:
                    continue
                actions: dict[int, int] = {}
                for team in sorted(clones[wid]):
                    actions.update(clones[wid][team].act(state["snapshot"]))
                state["pending_actions"] = actions
                batch[wid] = actions
            results = self.pool.pool_step(batch)
            for wid, result in results.items():
                state = states[wid]
                if isinstance(result, WorkerFailed):
                    raise PoolError(f"worker {wid} failed mid-run: {result.error}")
                rewards = {int(a): r for a, r in result["rewards"].items()}
                state["raw_steps"].append(
                    (state["snapshot"], state["pending_actions"], rewards, result["done"])
                )
                state["snapshot"] = result["snapshot"]
                state["steps"] += 1
                state["done"] = result["done"]

        for wid in sorted(states):
            state = states[wid]
            route_episode_steps(
                self.policies,
                self.buffers,
                state["raw_steps"],
                state["snapshot"],
                state["episode"],
            )
        return sorted(s["episode"] for s in states.values())

    def close(self) -> None:
        self.pool.shutdown()
