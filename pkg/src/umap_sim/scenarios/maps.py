"""Map definitions: playable bounds, obstacles, landmarks and spawn regions.

Maps are deliberately independent of tasks and agent kinds: any task whose
roster fits the available spawn regions can run on any registered map.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..perception import Box
from ..rng import SplitMix64


@dataclass(frozen=True)
class Landmark:
    position: tuple[float, float, float]
    radius: float


@dataclass(frozen=True)
class MapSpec:
    map_id: str
    bounds: Box
    spawn_regions: dict[int, Box] = field(default_factory=dict)
    obstacles: tuple[Box, ...] = ()
    landmarks: tuple[Landmark, ...] = ()

    def __post_init__(self) -> None:
        for team, region in self.spawn_regions.items():
            if not _box_inside(region, self.bounds):
                raise ValueError(f"map {self.map_id}: spawn region for team {team} outside bounds")
        for lm in self.landmarks:
            if not _point_inside(lm.position, self.bounds):
                raise ValueError(f"map {self.map_id}: landmark {lm.position} outside bounds")

    def spawn_point(self, team_id: int, rng: SplitMix64) -> tuple[float, float, float]:
        """Uniform point in the team's spawn region (z from the region plane)."""
        region = self.spawn_regions[team_id]
        x = rng.uniform(region.center[0] - region.half[0], region.center[0] + region.half[0])
        y = rng.uniform(region.center[1] - region.half[1], region.center[1] + region.half[1])
        return (x, y, region.center[2])

    def spawn_center(self, team_id: int) -> tuple[float, float, float]:
        return self.spawn_regions[team_id].center

    def summary(self) -> dict:
        """JSON-ready description for wire clients and scripted policies."""
        return {
            "id": self.map_id,
            "bounds": {"center": list(self.bounds.center), "half": list(self.bounds.half)},
            "spawn_centers": {str(t): list(r.center) for t, r in sorted(self.spawn_regions.items())},
            "landmarks": [[*lm.position, lm.radius] for lm in self.landmarks],
            "obstacles": [{"center": list(b.center), "half": list(b.half)} for b in self.obstacles],
        }


def _point_inside(p, bounds: Box) -> bool:
    return all(abs(p[i] - bounds.center[i]) <= bounds.half[i] for i in range(2))


def _box_inside(box: Box, bounds: Box) -> bool:
    return all(
        abs(box.center[i]) + box.half[i] <= abs(bounds.center[i]) + bounds.half[i] for i in range(2)
    )


def _four_way_spawns(offset: float, half: float) -> dict[int, Box]:
    """Mirrored spawn boxes west/east/south/north for up to four teams."""
    h = (half, half, 0.0)
    return {
        0: Box((-offset, 0.0, 0.0), h),
        1: Box((offset, 0.0, 0.0), h),
        2: Box((0.0, -offset, 0.0), h),
        3: Box((0.0, offset, 0.0), h),
    }


BUILTIN_MAPS: dict[str, MapSpec] = {}


def _register(spec: MapSpec) -> MapSpec:
    BUILTIN_MAPS[spec.map_id] = spec
    return spec


ARENA_10K = _register(
    MapSpec(
        map_id="arena_10k",
        bounds=Box((0.0, 0.0, 0.0), (5000.0, 5000.0, 600.0)),
        spawn_regions=_four_way_spawns(2500.0, 800.0),
    )
)

ARENA_14K = _register(
    MapSpec(
        map_id="arena_14k",
        bounds=Box((0.0, 0.0, 0.0), (7000.0, 7000.0, 600.0)),
        spawn_regions=_four_way_spawns(3500.0, 1000.0),
    )
)

VILLAGE = _register(
    MapSpec(
        map_id="village",
        bounds=Box((0.0, 0.0, 0.0), (4000.0, 4000.0, 600.0)),
        spawn_regions={0: Box((-2000.0, 0.0, 0.0), (600.0, 600.0, 0.0))},
    )
)

NAV_ARENA = _register(
    MapSpec(
        map_id="nav_arena",
        bounds=Box((0.0, 0.0, 0.0), (5000.0, 5000.0, 600.0)),
        spawn_regions={
            0: Box((-4000.0, 0.0, 0.0), (500.0, 1000.0, 0.0)),
            1: Box((0.0, 0.0, 0.0), (400.0, 1000.0, 0.0)),
        },
        obstacles=(
            Box((-1800.0, 1500.0, 250.0), (120.0, 900.0, 250.0)),
            Box((-1800.0, -1500.0, 250.0), (120.0, 900.0, 250.0)),
            Box((1200.0, 0.0, 250.0), (120.0, 1100.0, 250.0)),
        ),
        landmarks=(
            Landmark((-3000.0, 0.0, 0.0), 500.0),
            Landmark((3000.0, 0.0, 0.0), 500.0),
        ),
    )
)


def lookup_map(map_id: str) -> MapSpec:
    try:
        return BUILTIN_MAPS[map_id]
    except KeyError:
        raise KeyError(f"unknown map {map_id!r}; known: {sorted(BUILTIN_MAPS)}") from None


def register_map(spec: MapSpec) -> None:
    BUILTIN_MAPS[spec.map_id] = spec
