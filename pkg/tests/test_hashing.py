from dataclasses import dataclass

from umap_sim.events import Event, EventKind
from umap_sim.hashing import FNV_OFFSET, QUANTUM, TrajectoryHasher, fnv1a64, trajectory_hash


@dataclass
class FakeAgent:
    agent_id: int
    position: tuple
    hp: float
    alive: bool = True


def test_empty_trajectory_digest_is_the_documented_constant():
    assert TrajectoryHasher().digest == FNV_OFFSET == 0xCBF29CE484222325
    assert trajectory_hash([]) == FNV_OFFSET


def test_fnv1a64_known_vectors():
    # classic FNV-1a test vectors
    assert fnv1a64(b"") == 0xCBF29CE484222325
    assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C
    assert fnv1a64(b"foobar") == 0x85944171F73967E8


def _steps(positions):
    return [
        (i + 1, [FakeAgent(0, p, hp=10.0)], [])
        for i, p in enumerate(positions)
    ]


def test_order_sensitivity():
    a = trajectory_hash(_steps([(0, 0, 0), (1, 0, 0)]))
    b = trajectory_hash(_steps([(1, 0, 0), (0, 0, 0)]))
    assert a != b


def test_sub_quantum_jitter_is_invisible():
    base = (1.0, 2.0, 3.0)
    jittered = (1.0 + QUANTUM * 0.2, 2.0, 3.0)
    moved = (1.0 + QUANTUM * 2, 2.0, 3.0)
    assert trajectory_hash(_steps([base])) == trajectory_hash(_steps([jittered]))
    assert trajectory_hash(_steps([base])) != trajectory_hash(_steps([moved]))


def test_events_enter_the_digest():
    agents = [FakeAgent(0, (0, 0, 0), hp=5.0)]
    no_event = trajectory_hash([(1, agents, [])])
    with_event = trajectory_hash(
        [(1, agents, [Event(EventKind.AGENT_DESTROYED, 1, 0)])]
    )
    assert no_event != with_event


def test_incremental_matches_batch():
    steps = _steps([(0, 0, 0), (3, 4, 0), (6, 8, 0)])
    hasher = TrajectoryHasher()
    for frame, agents, events in steps:
        hasher.absorb_step(frame, agents, events)
    assert hasher.digest == trajectory_hash(steps)
    assert hasher.hexdigest == f"{hasher.digest:016x}"
