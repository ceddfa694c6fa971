"""Scene assembly: actors with scripted trajectories and per-timestep world
snapshots that rays can be cast into.

A snapshot holds every actor's triangles in the world frame plus a BVH; it is
immutable after construction, so any number of threads may cast rays into it
concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import bvh as _bvh
from .errors import ContractViolation, ScenarioError
from .geometry import Aabb, RigidTransform, vec3
from .meshes import TriangleMesh


class Trajectory:
    """Timestep -> local-to-world pose. Implementations must cover every
    timestep of the scenario they are used in."""

    def pose_at(self, t: int) -> RigidTransform:
        raise NotImplementedError


@dataclass(frozen=True)
class StaticTrajectory(Trajectory):
    pose: RigidTransform = field(default_factory=RigidTransform.identity)

    def pose_at(self, t: int) -> RigidTransform:
        return self.pose


@dataclass(frozen=True)
class LinearTrajectory(Trajectory):
    """Constant motion: position0 + t * step, fixed yaw (degrees)."""

    position0: tuple[float, float, float]
    step: tuple[float, float, float]
    yaw_deg: float = 0.0

    def pose_at(self, t: int) -> RigidTransform:
        p = np.asarray(self.position0, dtype=np.float64) + t * np.asarray(
            self.step, dtype=np.float64
        )
        return RigidTransform.from_yaw_pitch_roll(self.yaw_deg, 0.0, 0.0, p)


@dataclass(frozen=True)
class KeyframeTrajectory(Trajectory):
    """Piecewise-linear interpolation of (timestep, position, yaw) keyframes.

    Keyframes must be sorted by timestep; timesteps outside the keyed range
    are a scenario error (trajectories must cover the whole run).
    """

    timesteps: tuple[int, ...]
    positions: tuple[tuple[float, float, float], ...]
    yaws_deg: tuple[float, ...]

    def __post_init__(self):
        if not (len(self.timesteps) == len(self.positions) == len(self.yaws_deg)):
            raise ContractViolation("keyframe arrays must have equal length")
        if len(self.timesteps) < 1:
            raise ContractViolation("need at least one keyframe")
        if any(b <= a for a, b in zip(self.timesteps, self.timesteps[1:])):
            raise ContractViolation("keyframe timesteps must be strictly increasing")

    def pose_at(self, t: int) -> RigidTransform:
        ts = self.timesteps
        if t < ts[0] or t > ts[-1]:
            raise ScenarioError(f"timestep {t} outside keyed range [{ts[0]}, {ts[-1]}]")
        k = int(np.searchsorted(ts, t, side="right")) - 1
        if k == len(ts) - 1:
            return RigidTransform.from_yaw_pitch_roll(
                self.yaws_deg[k], 0.0, 0.0, vec3(*self.positions[k])
            )
        f = (t - ts[k]) / (ts[k + 1] - ts[k])
        p0 = np.asarray(self.positions[k], dtype=np.float64)
        p1 = np.asarray(self.positions[k + 1], dtype=np.float64)
        yaw = (1 - f) * self.yaws_deg[k] + f * self.yaws_deg[k + 1]
        return RigidTransform.from_yaw_pitch_roll(yaw, 0.0, 0.0, (1 - f) * p0 + f * p1)


@dataclass(frozen=True, eq=False)
class Actor:
    """A mesh following a trajectory. Exactly one actor per scenario is the ego."""

    actor_id: str
    mesh: TriangleMesh
    trajectory: Trajectory
    is_ego: bool = False

    def local_bounds(self) -> Aabb:
        return Aabb.of_points(self.mesh.vertices)


@dataclass(frozen=True, eq=False)
class Ray:
    """World-frame ray; ``direction`` must be unit length, ``max_range`` > 0."""

    origin: np.ndarray
    direction: np.ndarray
    max_range: float

    def __post_init__(self):
        o = np.asarray(self.origin, dtype=np.float64).reshape(3)
        d = np.asarray(self.direction, dtype=np.float64).reshape(3)
        if abs(float(np.linalg.norm(d)) - 1.0) > 1e-12:
            raise ContractViolation("ray direction must be unit length within 1e-12")
        if not self.max_range > 0:
            raise ContractViolation("ray max_range must be positive")
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "direction", d)


@dataclass(frozen=True, eq=False)
class Hit:
    point: np.ndarray
    distance: float
    actor_id: str


@dataclass(frozen=True, eq=False)
class WorldSnapshot:
    """All actor triangles in the world frame at one timestep, plus the BVH.

    ``tri_actor`` maps triangle index -> index into ``actor_ids``;
    ``ego_triangles`` flags triangles belonging to the ego actor so hits on
    the vehicle's own body can be attributed.
    """

    timestep: int
    triangles: np.ndarray        # (T, 3, 3) world-frame vertices
    tri_actor: np.ndarray        # (T,) int
    actor_ids: tuple[str, ...]
    ego_index: int               # -1 when the snapshot has no ego
    index: _bvh.Bvh

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def ego_triangles(self) -> np.ndarray:
        return self.tri_actor == self.ego_index

    def cast(self, origins, dirs, t_max) -> tuple[np.ndarray, np.ndarray]:
        """Batch form: (distances, actor indices); -1 actor index = miss."""
        t, tri = _bvh.cast_rays(self.index, origins, dirs, t_max)
        if self.n_triangles == 0:
            return t, tri
        actor = np.where(tri >= 0, self.tri_actor[np.clip(tri, 0, None)], -1)
        return t, actor


def build_world(actors: list[Actor], t: int) -> WorldSnapshot:
    """Snapshot every actor at timestep ``t`` and index the result."""
    egos = [a for a in actors if a.is_ego]
    if len(egos) > 1:
        raise ScenarioError("at most one actor may be the ego")
    tri_blocks = []
    tri_actor = []
    ids = []
    for ai, actor in enumerate(actors):
        ids.append(actor.actor_id)
        try:
            pose = actor.trajectory.pose_at(t)
        except ScenarioError as exc:
            raise ScenarioError(f"actor {actor.actor_id!r}: {exc}") from exc
        world_verts = pose.apply(actor.mesh.vertices)
        tris = world_verts[actor.mesh.triangles]
        tri_blocks.append(tris)
        tri_actor.append(np.full(tris.shape[0], ai, dtype=np.int64))
    if tri_blocks:
        triangles = np.concatenate(tri_blocks, axis=0)
        tri_actor_arr = np.concatenate(tri_actor)
    else:
        triangles = np.zeros((0, 3, 3))
        tri_actor_arr = np.zeros(0, dtype=np.int64)
    ego_index = next((i for i, a in enumerate(actors) if a.is_ego), -1)
    return WorldSnapshot(
        timestep=t,
        triangles=triangles,
        tri_actor=tri_actor_arr,
        actor_ids=tuple(ids),
        ego_index=ego_index,
        index=_bvh.build_bvh(triangles),
    )


def cast_ray(world: WorldSnapshot, ray: Ray) -> Hit | None:
    """Nearest intersection with distance in (1e-6, max_range], or None."""
    t, actor = world.cast(ray.origin, ray.direction[None, :], np.array([ray.max_range]))
    if actor[0] < 0:
        return None
    return Hit(
        point=ray.origin + t[0] * ray.direction,
        distance=float(t[0]),
        actor_id=world.actor_ids[int(actor[0])],
    )
