"""Command-line entry point.

    umap --config exp.json --mode train|eval|replay|bench \
         [--seed S] [--parallel N] [--time-dilation F]

Extra modes: `serve` runs a single worker endpoint (used by remote clients),
`digest` prints the trajectory digest of a scripted rollout (handy for
replay debugging and cross-client parity checks).
"""

from __future__ import annotations

import argparse
import json
import sys

from .orchestrator import load_config, replay_trace, run_eval, run_training
from .timeflow import parse_dilation


def _parse_sweep_term(term: str) -> tuple[str, list[float]]:
    key, _, values = term.partition("=")
    if not values:
        raise argparse.ArgumentTypeError(f"sweep term {term!r} must look like key=1,2,4")
    return key, [parse_dilation(v) for v in values.split(",")]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="umap", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--config", help="experiment config JSON (core/mission/algorithm)")
    parser.add_argument(
        "--mode",
        choices=["train", "eval", "replay", "bench", "serve", "digest"],
        help="overrides mission.mode from the config",
    )
    parser.add_argument("--seed", type=int, help="overrides core.seed")
    parser.add_argument("--parallel", type=int, help="overrides core.parallel")
    parser.add_argument("--time-dilation", type=parse_dilation, help="float or 'max' (unpaced)")
    parser.add_argument("--frame-rate", type=float, help="simulation frames per simulation second")
    parser.add_argument("--decision-interval", type=float, help="simulation seconds per decision")
    parser.add_argument("--task", help="task name (digest/serve/bench without a config)")
    parser.add_argument("--tasks", help="JSON file of extra task records to register")
    parser.add_argument("--episodes", type=int, help="episode count for eval/digest")
    parser.add_argument("--steps", type=int, help="step cap for digest rollouts")
    parser.add_argument("--trace", help="trace file to replay (mode=replay)")
    parser.add_argument("--port", type=int, default=0, help="TCP port for serve (0 = ephemeral)")
    parser.add_argument("--transport", choices=["tcp", "shmem"], default="tcp")
    parser.add_argument("--channel", help="shmem channel name (serve with --transport shmem)")
    parser.add_argument("--sweep", nargs="*", default=None, help="bench grid: workers=1,2 dilation=1,4")
    parser.add_argument("--duration", type=float, default=10.0, help="bench seconds per sample")
    parser.add_argument("--repetitions", type=int, default=3, help="bench repetitions per sample")
    parser.add_argument("--out", help="bench CSV output path")
    return parser


def _load_config(args) -> "ExperimentConfig":
    if not args.config:
        print("error: --config is required for this mode", file=sys.stderr)
        raise SystemExit(2)
    with open(args.config, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if args.mode:
        doc.setdefault("mission", {})["mode"] = args.mode
    if args.seed is not None:
        doc.setdefault("core", {})["seed"] = args.seed
    if args.parallel is not None:
        doc.setdefault("core", {})["parallel"] = args.parallel
    time_doc = doc.setdefault("mission", {}).setdefault("time", {})
    if args.time_dilation is not None:
        time_doc["dilation"] = "max" if args.time_dilation == float("inf") else args.time_dilation
    if args.frame_rate is not None:
        time_doc["frame_rate"] = args.frame_rate
    if args.decision_interval is not None:
        time_doc["decision_interval"] = args.decision_interval
    if args.episodes is not None:
        doc["mission"]["episodes"] = args.episodes
    return load_config(doc)


def cmd_train(args) -> int:
    config = _load_config(args)
    artifacts = run_training(
        config, progress=lambda ep, report: print(f"episode {ep}: {_fmt_report(report)}")
    )
    print(f"run artifacts in {artifacts.run_dir} ({artifacts.episodes} episodes)")
    return 0


def _fmt_report(report: dict) -> str:
    return "  ".join(
        f"team{t} win_rate={stats['win_rate']:.3f} return={stats['mean_return']:+.3f}"
        for t, stats in sorted(report.items())
    )


def cmd_eval(args) -> int:
    config = _load_config(args)
    report = run_eval(config)
    print(_fmt_report(report))
    return 0


def cmd_replay(args) -> int:
    path = args.trace or (args.config and _load_config(args).mission.trace_file)
    if not path:
        print("error: --trace <file> is required for replay", file=sys.stderr)
        return 2
    try:
        report = replay_trace(path)
    except OSError as exc:
        print(f"error: cannot read trace: {exc}", file=sys.stderr)
        return 2
    status = "OK" if report.ok else "MISMATCH"
    print(f"{status}: {report.episodes} episode(s), {report.steps} step(s) verified")
    for line in report.mismatches:
        print(f"  {line}")
    return 0 if report.ok else 1


def cmd_bench(args) -> int:
    from .bench import sweep

    task = args.task
    if not task and args.config:
        task = _load_config(args).mission.task
    if not task:
        print("error: bench needs --task or --config", file=sys.stderr)
        return 2
    grid = {"workers": [1.0], "dilation": [1.0, 4.0]}
    for term in args.sweep or []:
        key, values = _parse_sweep_term(term)
        grid[key] = values
    samples, report = sweep(
        task,
        worker_counts=[int(w) for w in grid["workers"]],
        dilations=grid["dilation"],
        duration=args.duration,
        repetitions=args.repetitions,
        out_csv=args.out,
    )
    for s in samples:
        row = s.row()
        print(
            f"workers={row['worker_count']} dilation={row['dilation']}: "
            f"tps={row['tps']} cpu={row['cpu_busy_fraction']} rss={row['resident_memory_bytes']}"
        )
    for line in report.lines():
        print(line)
    if args.out:
        print(f"csv written to {args.out}")
    return 0


def cmd_serve(args) -> int:
    from .protocol.server import serve_world
    from .protocol.transport import ShmemListener, TcpListener

    if args.transport == "shmem":
        if not args.channel:
            print("error: --channel is required with --transport shmem", file=sys.stderr)
            return 2
        listener = ShmemListener(args.channel, create=True)
        print(f"LISTENING shmem:{args.channel}", flush=True)
    else:
        listener = TcpListener("127.0.0.1", args.port)
        print(f"LISTENING {listener.port}", flush=True)
    try:
        serve_world(listener)
    except KeyboardInterrupt:
        pass
    finally:
        listener.close()
    return 0


def cmd_digest(args) -> int:
    """Scripted rollout digests: one line per episode seed."""
    from .orchestrator import ScriptedPolicy, run_episode
    from .scenarios import make_world, registry_lookup

    if not args.task:
        print("error: --task is required for digest", file=sys.stderr)
        return 2
    task = registry_lookup(args.task)
    seeds = range(args.seed or 0, (args.seed or 0) + (args.episodes or 1))
    kwargs = {}
    if args.frame_rate is not None:
        kwargs["frame_rate"] = args.frame_rate
    if args.decision_interval is not None:
        kwargs["decision_interval"] = args.decision_interval
    world = make_world(task, time_config=task.time_config(**kwargs))
    policies = {t.team_id: ScriptedPolicy(t.team_id) for t in task.teams}
    for seed in seeds:
        result = run_episode(world, policies, seed, max_steps=args.steps)
        print(f"{args.task} seed={seed} steps={result.steps} digest={result.hexdigest}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.tasks:
        from .scenarios import register_tasks_file

        register_tasks_file(args.tasks)
    mode = args.mode
    if mode is None and args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            mode = json.load(fh).get("mission", {}).get("mode")
    if mode is None:
        print("error: --mode (or mission.mode in the config) is required", file=sys.stderr)
        return 2
    handlers = {
        "train": cmd_train,
        "eval": cmd_eval,
        "replay": cmd_replay,
        "bench": cmd_bench,
        "serve": cmd_serve,
        "digest": cmd_digest,
    }
    return handlers[mode](args)


if __name__ == "__main__":
    sys.exit(main())
