"""Visibility computation and observation assembly.

The hot path builds an n-by-n perception matrix for all agents at once with
vectorized arithmetic; the scalar predicates (`visible`, `line_of_sight`)
are the reference semantics and the batched path must agree with them
bit-for-bit, which constrains every formula here to use the same operation
order in both forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .rng import mix64

Vec3 = tuple[float, float, float]


@dataclass(frozen=True)
class Sphere:
    radius: float

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class Cone:
    """Cone of view around the agent's heading."""

    radius: float
    half_angle: float
    cos_half: float = field(init=False)

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if not 0 < self.half_angle <= math.pi:
            raise ValueError(f"half_angle must be in (0, pi], got {self.half_angle}")
        object.__setattr__(self, "cos_half", math.cos(self.half_angle))


PerceptionShape = Sphere | Cone

#: Sentinel cone cosine that accepts every direction (used to fold spheres
#: into the batched cone formula: dot >= -2*dist is always true).
_ACCEPT_ALL = -2.0


@dataclass
class PerceptionMatrix:
    """bits[a][b] says whether agent a currently perceives agent b."""

    n: int
    bits: np.ndarray  # (n, n) bool

    def perceives(self, a: int, b: int) -> bool:
        return bool(self.bits[a, b])


def pairwise_distances(positions: Sequence[Vec3] | np.ndarray) -> np.ndarray:
    """Euclidean distance matrix; symmetric with a zero diagonal."""
    pos = np.asarray(positions, dtype=np.float64)
    if pos.ndim != 2 or pos.shape[1] != 3:
        raise ValueError(f"expected (n, 3) positions, got shape {pos.shape}")
    dx = pos[None, :, 0] - pos[:, None, 0]
    dy = pos[None, :, 1] - pos[:, None, 1]
    dz = pos[None, :, 2] - pos[:, None, 2]
    return np.sqrt(dx * dx + dy * dy + dz * dz)


def visible(position: Vec3, heading: Vec3, shape: PerceptionShape, target: Vec3) -> bool:
    """Scalar reference predicate: does an observer at `position` with unit
    `heading` and the given perception shape see `target`?"""
    dx = target[0] - position[0]
    dy = target[1] - position[1]
    dz = target[2] - position[2]
    d2 = dx * dx + dy * dy + dz * dz
    if not d2 <= shape.radius * shape.radius:
        return False
    if isinstance(shape, Sphere):
        return True
    dot = heading[0] * dx + heading[1] * dy + heading[2] * dz
    return dot >= shape.cos_half * math.sqrt(d2)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box given by center and half-sizes."""

    center: Vec3
    half: Vec3

    def contains_strict(self, p: Vec3) -> bool:
        return all(abs(p[i] - self.center[i]) < self.half[i] for i in range(3))


def line_of_sight(obstacles: Iterable[Box], a: Vec3, b: Vec3) -> bool:
    """True iff the open segment a->b passes through no obstacle interior.

    Touching a box face, edge or corner (including at the segment endpoints)
    does not block; only a positive-length crossing of the interior does.
    """
    dx = b[0] - a[0]
    dy = b[1] - a[1]
    dz = b[2] - a[2]
    d = (dx, dy, dz)
    for box in obstacles:
        tmin, tmax = 0.0, 1.0
        hit = True
        for ax in range(3):
            lo = box.center[ax] - box.half[ax]
            hi = box.center[ax] + box.half[ax]
            if d[ax] == 0.0:
                if not (lo < a[ax] < hi):
                    hit = False
                    break
            else:
                t1 = (lo - a[ax]) / d[ax]
                t2 = (hi - a[ax]) / d[ax]
                if t1 > t2:
                    t1, t2 = t2, t1
                if t1 > tmin:
                    tmin = t1
                if t2 < tmax:
                    tmax = t2
                if tmin >= tmax:
                    hit = False
                    break
        if hit and tmax > tmin:
            return False
    return True


def build_matrix(
    agents: Sequence,
    shapes: Sequence[PerceptionShape],
    occlusion: bool = False,
    obstacles: Iterable[Box] = (),
) -> PerceptionMatrix:
    """Batched n-by-n visibility.

    bits[a][b] = alive(a) and alive(b) and visible(a, b) and, when occlusion
    is on, line_of_sight(a, b). The diagonal is true exactly for living
    agents. Output is independent of any internal batching.
    """
    n = len(agents)
    if n == 0:
        return PerceptionMatrix(0, np.zeros((0, 0), dtype=bool))
    pos = np.array([a.position for a in agents], dtype=np.float64)
    alive = np.array([a.alive for a in agents], dtype=bool)
    heading = np.array([a.heading for a in agents], dtype=np.float64)
    radius = np.array([s.radius for s in shapes], dtype=np.float64)
    cos_half = np.array(
        [s.cos_half if isinstance(s, Cone) else _ACCEPT_ALL for s in shapes],
        dtype=np.float64,
    )

    dx = pos[None, :, 0] - pos[:, None, 0]
    dy = pos[None, :, 1] - pos[:, None, 1]
    dz = pos[None, :, 2] - pos[:, None, 2]
    d2 = dx * dx + dy * dy + dz * dz
    in_range = d2 <= (radius * radius)[:, None]
    dot = heading[:, None, 0] * dx + heading[:, None, 1] * dy + heading[:, None, 2] * dz
    in_cone = dot >= cos_half[:, None] * np.sqrt(d2)

    bits = in_range & in_cone
    bits &= alive[:, None]
    bits &= alive[None, :]
    np.fill_diagonal(bits, alive)

    if occlusion:
        boxes = list(obstacles)
        if boxes:
            rows, cols = np.nonzero(bits)
            for a_idx, b_idx in zip(rows.tolist(), cols.tolist()):
                if a_idx == b_idx:
                    continue
                if not line_of_sight(boxes, tuple(pos[a_idx]), tuple(pos[b_idx])):
                    bits[a_idx, b_idx] = False
    return PerceptionMatrix(n, bits)


@dataclass(frozen=True)
class ObservationSpec:
    """Fixed [self | allies | foes] observation layout for one agent kind."""

    n_ally: int
    n_foe: int
    feature_dim: int
    range: float

    @property
    def structure(self) -> tuple[int, int, int]:
        return (1, self.n_ally, self.n_foe)

    @property
    def total_dim(self) -> int:
        return (1 + self.n_ally + self.n_foe) * self.feature_dim


def id_hash_features(uid: int) -> tuple[float, float]:
    """Two-dimensional deterministic hash embedding of an id into [0, 1)."""
    h = mix64(uid)
    return ((h & 0xFFFF) / 65536.0, ((h >> 16) & 0xFFFF) / 65536.0)


@dataclass(frozen=True)
class ObservedTarget:
    """Uniform view of anything that can occupy an observation slot."""

    uid: int
    team_id: int
    kind_index: int
    position: Vec3
    velocity: Vec3
    heading: Vec3
    hp_ratio: float
    max_speed: float
    attack_range: float
    heal_capacity: float = 0.0
    support_range: float = 0.0


def target_features(observer_position: Vec3, target: ObservedTarget, feature_dim: int) -> list[float]:
    """Standard per-slot feature vector.

    Base 20 features: id hash (2), team (1), kind one-hot (3), position
    relative to the observer (3), velocity (3), heading (3), hp fraction (1),
    max speed (1), attack range (1), alive flag (1), distance to observer (1).
    A 23-wide layout appends heal capacity, support range and altitude.
    """
    f0, f1 = id_hash_features(target.uid)
    rx = target.position[0] - observer_position[0]
    ry = target.position[1] - observer_position[1]
    rz = target.position[2] - observer_position[2]
    kind_onehot = [0.0, 0.0, 0.0]
    if 0 <= target.kind_index < 3:
        kind_onehot[target.kind_index] = 1.0
    features = [
        f0,
        f1,
        float(target.team_id),
        *kind_onehot,
        rx,
        ry,
        rz,
        *target.velocity,
        *target.heading,
        target.hp_ratio,
        target.max_speed,
        target.attack_range,
        1.0,
        math.sqrt(rx * rx + ry * ry + rz * rz),
    ]
    if feature_dim == 23:
        features.extend([target.heal_capacity, target.support_range, target.position[2]])
    elif feature_dim != 20:
        raise ValueError(f"unsupported feature_dim {feature_dim}")
    return features


def assemble_observation(
    observer_uid: int,
    observer_position: Vec3,
    spec: ObservationSpec,
    self_target: ObservedTarget,
    allies: Sequence[ObservedTarget],
    foes: Sequence[ObservedTarget],
) -> np.ndarray:
    """Fixed-layout observation vector.

    Slots: [self | n_ally nearest perceived allies | n_foe nearest perceived
    foes], each feature_dim wide. Nearest-k ordering uses squared distance
    (identical ordering to Euclidean, no square roots), ties broken by
    ascending id; unfilled slots stay all-zero.
    """
    out = np.zeros(spec.total_dim, dtype=np.float64)
    fd = spec.feature_dim
    out[0:fd] = target_features(observer_position, self_target, fd)

    def ranked(targets: Sequence[ObservedTarget], limit: int) -> list[ObservedTarget]:
        def key(t: ObservedTarget):
            rx = t.position[0] - observer_position[0]
            ry = t.position[1] - observer_position[1]
            rz = t.position[2] - observer_position[2]
            return (rx * rx + ry * ry + rz * rz, t.uid)

        return sorted(targets, key=key)[:limit]

    offset = fd
    for t in ranked(allies, spec.n_ally):
        out[offset : offset + fd] = target_features(observer_position, t, fd)
        offset += fd
    offset = fd * (1 + spec.n_ally)
    for t in ranked(foes, spec.n_foe):
        out[offset : offset + fd] = target_features(observer_position, t, fd)
        offset += fd
    return out
