"""Worker process entry: one process, one served world."""

from __future__ import annotations

import sys

from .server import serve_world
from .transport import ShmemListener, TcpListener


def worker_main(transport: str, ready, channel: str | None = None) -> None:
    """Child-process body. `ready` is a pipe end used to report the bound
    address (TCP port, or the shmem channel) back to the parent."""
    if transport == "tcp":
        listener = TcpListener("127.0.0.1", 0)
        ready.send(("tcp", listener.port))
    elif transport == "shmem":
        listener = ShmemListener(channel, create=False)
        ready.send(("shmem", channel))
    else:
        ready.send(("error", f"unknown transport {transport!r}"))
        return
    ready.close()
    try:
        serve_world(listener)
    finally:
        listener.close()


def main(argv=None) -> int:
    """Standalone worker: `python -m umap_sim.protocol.worker [--port N]`."""
    import argparse

    parser = argparse.ArgumentParser(description="serve one simulation world over TCP")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=0)
    args = parser.parse_args(argv)
    listener = TcpListener(args.host, args.port)
    print(f"LISTENING {listener.port}", flush=True)
    try:
        serve_world(listener)
    except KeyboardInterrupt:
        pass
    finally:
        listener.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
