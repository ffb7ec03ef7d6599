"""Throughput and resource measurement across (workers x dilation) grids.

TPS counts completed decision steps per real second summed over all workers.
Workers run as isolated processes behind the wire protocol; the measuring
coordinator only samples /proc-level counters, so measurement does not
perturb the simulation itself. Absolute numbers are hardware-bound; the
properties worth asserting are the trends (dilation scales paced TPS until
saturation, memory stays flat along the dilation axis, TPS scales roughly
linearly with workers in the paced low-load regime).
"""

from __future__ import annotations

import csv
import math
import os
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import psutil

from .protocol.pool import PoolError, WorkerFailed, WorkerPool
from .rng import SplitMix64, substream
from .scenarios import registry_lookup


@dataclass
class BenchSample:
    worker_count: int
    dilation_factor: float
    tps: float
    cpu_busy_fraction: float
    resident_memory_bytes: float  # mean per worker
    wall_duration: float
    steps: int
    repetitions: int

    def row(self) -> dict:
        return {
            "worker_count": self.worker_count,
            "dilation": "max" if math.isinf(self.dilation_factor) else self.dilation_factor,
            "tps": round(self.tps, 4),
            "cpu_busy_fraction": round(self.cpu_busy_fraction, 4),
            "resident_memory_bytes": int(self.resident_memory_bytes),
            "wall_duration": round(self.wall_duration, 3),
            "steps": self.steps,
            "repetitions": self.repetitions,
        }


CSV_COLUMNS = [
    "worker_count",
    "dilation",
    "tps",
    "cpu_busy_fraction",
    "resident_memory_bytes",
    "wall_duration",
    "steps",
    "repetitions",
]


def _measure_once(
    task_name: str, worker_count: int, dilation: float, duration: float, seed: int
) -> tuple[float, float, float, int, float]:
    task = registry_lookup(task_name)
    time_doc = {"dilation": "max" if math.isinf(dilation) else dilation}
    with WorkerPool(worker_count, transport="tcp") as pool:
        acks = pool.configure_all(
            task_name,
            seeds=[seed + w for w in range(worker_count)],
            time=time_doc,
            options={"send_observations": False},
        )
        roster = acks[0]["agents"]  # action-space sizes are static per task
        procs = {wid: psutil.Process(worker.pid) for wid, worker in pool.workers.items()}
        pool.reset_all()
        # Per-worker action streams are pure functions of (seed + worker id),
        # so any bench world's trajectory is reproducible in isolation.
        rngs = {wid: bench_action_stream(seed + wid) for wid in pool.workers}

        cpu_start = {wid: _cpu_seconds(p) for wid, p in procs.items()}
        rss_samples: list[float] = []
        last_sample = 0.0
        steps = 0
        episode_seeds = {wid: seed + w for wid, w in zip(pool.workers, range(worker_count))}
        start = time.monotonic()
        while True:
            now = time.monotonic()
            if now - start >= duration:
                break
            if now - start >= last_sample + 1.0:
                rss_samples.append(
                    sum(p.memory_info().rss for p in procs.values()) / worker_count
                )
                last_sample = now - start
            actions = {
                wid: {a["id"]: rngs[wid].randint(0, a["n_actions"] - 1) for a in roster}
                for wid in pool.workers
            }
            results = pool.pool_step(actions)
            for wid, result in results.items():
                if isinstance(result, WorkerFailed):
                    raise PoolError(f"worker {wid} died during bench: {result.error}")
                steps += 1
                if result["done"]:
                    episode_seeds[wid] += worker_count
                    pool.workers[wid].client.reset(episode_seeds[wid])
        wall = time.monotonic() - start
        cpu_total = sum(_cpu_seconds(p) - cpu_start[wid] for wid, p in procs.items())
        if not rss_samples:
            rss_samples.append(sum(p.memory_info().rss for p in procs.values()) / worker_count)
    cores = psutil.cpu_count(logical=True) or 1
    cpu_fraction = cpu_total / (wall * cores)
    mean_rss = sum(rss_samples) / len(rss_samples)
    return steps / wall, cpu_fraction, mean_rss, steps, wall


def _cpu_seconds(proc: psutil.Process) -> float:
    t = proc.cpu_times()
    return t.user + t.system


def bench_action_stream(stream_seed: int) -> SplitMix64:
    """The exact generator bench worlds are driven with (exposed so tests can
    replay a bench trajectory in isolation and compare digests)."""
    return substream(stream_seed, "bench_actions")


def measure_tps(
    task_name: str,
    worker_count: int,
    dilation: float,
    duration: float = 10.0,
    repetitions: int = 3,
    seed: int = 0,
) -> BenchSample:
    """Average of `repetitions` runs of `duration` wall seconds each."""
    tps_list, cpu_list, rss_list, steps_total, wall_total = [], [], [], 0, 0.0
    for rep in range(repetitions):
        tps, cpu, rss, steps, wall = _measure_once(
            task_name, worker_count, dilation, duration, seed + rep * 1000
        )
        tps_list.append(tps)
        cpu_list.append(cpu)
        rss_list.append(rss)
        steps_total += steps
        wall_total += wall
    return BenchSample(
        worker_count=worker_count,
        dilation_factor=dilation,
        tps=sum(tps_list) / len(tps_list),
        cpu_busy_fraction=sum(cpu_list) / len(cpu_list),
        resident_memory_bytes=sum(rss_list) / len(rss_list),
        wall_duration=wall_total,
        steps=steps_total,
        repetitions=repetitions,
    )


@dataclass
class TrendReport:
    dilation_tps: list[tuple[float, float]] = field(default_factory=list)
    dilation_monotonic: Optional[bool] = None
    memory_max_rel_spread: Optional[float] = None
    memory_flat: Optional[bool] = None
    worker_scaling_ratio: Optional[float] = None
    worker_scaling_ok: Optional[bool] = None

    def lines(self) -> list[str]:
        out = []
        if self.dilation_monotonic is not None:
            curve = ", ".join(f"x{d:g}: {t:.2f}" for d, t in self.dilation_tps)
            out.append(
                f"{'PASS' if self.dilation_monotonic else 'FAIL'} paced TPS non-decreasing "
                f"along dilation axis ({curve})"
            )
        if self.memory_flat is not None:
            out.append(
                f"{'PASS' if self.memory_flat else 'FAIL'} per-worker memory spread "
                f"{self.memory_max_rel_spread:.1%} < 10% across dilation axis"
            )
        if self.worker_scaling_ok is not None:
            out.append(
                f"{'PASS' if self.worker_scaling_ok else 'FAIL'} worker scaling ratio "
                f"{self.worker_scaling_ratio:.2f} >= 1.8 (4 vs 2 workers)"
            )
        return out


#: Relative tolerance on TPS comparisons (sleep jitter, sampling noise).
TPS_TOLERANCE = 0.97


def evaluate_trends(samples: Sequence[BenchSample]) -> TrendReport:
    report = TrendReport()
    by_workers: dict[int, list[BenchSample]] = {}
    for s in samples:
        by_workers.setdefault(s.worker_count, []).append(s)

    single = sorted(
        (s for s in by_workers.get(1, []) if math.isfinite(s.dilation_factor)),
        key=lambda s: s.dilation_factor,
    )
    if len(single) >= 2:
        report.dilation_tps = [(s.dilation_factor, s.tps) for s in single]
        report.dilation_monotonic = all(
            b.tps >= a.tps * TPS_TOLERANCE for a, b in zip(single, single[1:])
        )
        rss = [s.resident_memory_bytes for s in single]
        mean_rss = sum(rss) / len(rss)
        report.memory_max_rel_spread = max(abs(r - mean_rss) for r in rss) / mean_rss
        report.memory_flat = report.memory_max_rel_spread < 0.10

    def paced_low_load(ws: int) -> Optional[BenchSample]:
        candidates = [s for s in by_workers.get(ws, []) if math.isfinite(s.dilation_factor)]
        return min(candidates, key=lambda s: s.dilation_factor) if candidates else None

    two, four = paced_low_load(2), paced_low_load(4)
    if two and four:
        report.worker_scaling_ratio = four.tps / two.tps
        report.worker_scaling_ok = report.worker_scaling_ratio >= 1.8
    return report


def sweep(
    task_name: str,
    worker_counts: Sequence[int],
    dilations: Sequence[float],
    duration: float = 10.0,
    repetitions: int = 3,
    out_csv: Optional[str] = None,
    seed: int = 0,
) -> tuple[list[BenchSample], TrendReport]:
    samples = []
    for workers in worker_counts:
        for dilation in dilations:
            samples.append(
                measure_tps(task_name, workers, dilation, duration, repetitions, seed)
            )
    if out_csv:
        write_csv(out_csv, samples)
    return samples, evaluate_trends(samples)


def write_csv(path: str, samples: Sequence[BenchSample]) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for s in samples:
            writer.writerow(s.row())
