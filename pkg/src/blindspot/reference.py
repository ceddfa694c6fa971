"""Monte Carlo reference sensor: a dense LiDAR re-posed randomly every
timestep to probe which scene geometry is detectable at all.

The pose is drawn uniformly from a shell around the ego bounding box (the box
enlarged by the configured margins upward and horizontally, minus the box
itself) with uniform yaw/pitch/roll. Per-timestep RNG streams are derived
from (seed, t), so timesteps can be evaluated in any order or in parallel
without changing the draw.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .geometry import Aabb, PointCloud, RigidTransform, merge_clouds
from .scene import Actor, WorldSnapshot
from .sensors import LidarSpec, lidar_scan_attributed


@dataclass(frozen=True)
class ReferenceSamplerConfig:
    """Defaults give a 1024x1024-ray downward hemisphere scanner posed within
    a 0.5 m shell, free yaw, and +/-45 degree pitch and roll."""

    shell_margin_up: float = 0.5
    shell_margin_horizontal: float = 0.5
    channels: int = 1024
    points_per_channel: int = 1024
    elevation_min_deg: float = -90.0
    elevation_max_deg: float = 0.0
    azimuth_span_deg: float = 360.0
    yaw_min_deg: float = -180.0
    yaw_max_deg: float = 180.0
    pitch_min_deg: float = -45.0
    pitch_max_deg: float = 45.0
    roll_min_deg: float = -45.0
    roll_max_deg: float = 45.0
    max_range: float = 200.0
    seed: int = 0

    def __post_init__(self):
        if self.shell_margin_up <= 0 or self.shell_margin_horizontal <= 0:
            raise ContractViolation("shell margins must be positive")
        for lo, hi, name in (
            (self.elevation_min_deg, self.elevation_max_deg, "elevation"),
            (self.yaw_min_deg, self.yaw_max_deg, "yaw"),
            (self.pitch_min_deg, self.pitch_max_deg, "pitch"),
            (self.roll_min_deg, self.roll_max_deg, "roll"),
        ):
            if lo > hi:
                raise ContractViolation(f"{name} range is reversed")
        if self.channels < 1 or self.points_per_channel < 1:
            raise ContractViolation("channels and points_per_channel must be >= 1")
        if not 0 < self.azimuth_span_deg <= 360:
            raise ContractViolation("azimuth span must be in (0, 360]")
        if not self.max_range > 0:
            raise ContractViolation("max_range must be positive")


@dataclass(frozen=True, eq=False)
class ShellVolume:
    """Outer box minus inner box; the inner box touches the outer at the
    bottom face only (no downward enlargement)."""

    outer: Aabb
    inner: Aabb

    def __post_init__(self):
        if np.any(self.inner.lo < self.outer.lo) or np.any(self.inner.hi > self.outer.hi):
            raise ContractViolation("inner box must lie inside outer box")
        if self.volume() <= 0:
            raise ContractViolation("shell has no volume")

    @staticmethod
    def around(ego_box: Aabb, margin_up: float, margin_horizontal: float) -> "ShellVolume":
        h = float(margin_horizontal)
        grow_lo = np.array([h, h, 0.0])
        grow_hi = np.array([h, h, float(margin_up)])
        return ShellVolume(Aabb(ego_box.lo - grow_lo, ego_box.hi + grow_hi), ego_box)

    def volume(self) -> float:
        return self.outer.volume() - self.inner.volume()

    def contains(self, points: np.ndarray) -> np.ndarray:
        return self.outer.contains(points) & ~self.inner.contains(points)


def _stream(seed: int, t: int, k: int = 0) -> np.random.Generator:
    """Deterministic per-timestep RNG stream, independent of evaluation order.
    ``k`` separates the streams of additional reference sensors (k=0 keeps the
    original single-sensor derivation)."""
    words = [seed & 0xFFFFFFFFFFFFFFFF, int(t)]
    if k:
        words.append(int(k))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(words)))


def sample_reference_pose(
    cfg: ReferenceSamplerConfig, ego_box: Aabb, t: int, sensor_index: int = 0
) -> RigidTransform:
    """Draw the reference pose for timestep ``t`` (reference -> vehicle).

    Position: rejection sampling from the outer box until outside the inner
    box, which is exactly uniform over the shell (outer minus inner, see
    ShellVolume). Orientation: independent uniform yaw, pitch, roll, drawn
    in that order. This runs once per timestep but also in tight calibration
    loops, so the rejection test is scalar rather than ShellVolume.contains.
    """
    h = cfg.shell_margin_horizontal
    olo = ego_box.lo - (h, h, 0.0)
    ohi = ego_box.hi + (h, h, cfg.shell_margin_up)
    ilo, ihi = ego_box.lo, ego_box.hi
    rng = _stream(cfg.seed, t, sensor_index)
    while True:
        x, y, z = rng.uniform(olo, ohi)
        inside_inner = (
            ilo[0] <= x <= ihi[0] and ilo[1] <= y <= ihi[1] and ilo[2] <= z <= ihi[2]
        )
        if not inside_inner:
            break
    yaw = rng.uniform(cfg.yaw_min_deg, cfg.yaw_max_deg)
    pitch = rng.uniform(cfg.pitch_min_deg, cfg.pitch_max_deg)
    roll = rng.uniform(cfg.roll_min_deg, cfg.roll_max_deg)
    return RigidTransform.from_yaw_pitch_roll(yaw, pitch, roll, (x, y, z))


def reference_lidar_spec(cfg: ReferenceSamplerConfig, mount: RigidTransform) -> LidarSpec:
    half_span = cfg.azimuth_span_deg / 2.0
    return LidarSpec(
        sensor_id="reference",
        channels=cfg.channels,
        points_per_channel=cfg.points_per_channel,
        elevation_min_deg=cfg.elevation_min_deg,
        elevation_max_deg=cfg.elevation_max_deg,
        azimuth_min_deg=-half_span,
        azimuth_max_deg=half_span,
        max_range=cfg.max_range,
        mount=mount,
    )


def reference_scan(
    cfg: ReferenceSamplerConfig, world: WorldSnapshot, ego: Actor, t: int,
    count: int = 1,
) -> PointCloud:
    """Dense scan from the timestep's sampled pose, with hits on the ego's own
    body removed (probing one's own paintwork is never a coverage question).

    ``count`` > 1 unions the clouds of several independently posed reference
    sensors; the default stays a single sensor per timestep.
    """
    ego_box = ego.local_bounds()
    ego_pose = ego.trajectory.pose_at(t)
    parts = []
    for k in range(count):
        pose = sample_reference_pose(cfg, ego_box, t, sensor_index=k)
        spec = reference_lidar_spec(cfg, pose)
        cloud, actor_idx = lidar_scan_attributed(spec, world, ego_pose)
        if world.ego_index >= 0:
            keep = actor_idx != world.ego_index
            cloud = PointCloud(cloud.points[keep], cloud.frame, cloud.timestep)
        parts.append(cloud)
    if count == 1:
        return parts[0]
    return merge_clouds(parts, parts[0].frame, t)
