"""Rigid 3D geometry: frames, transforms, point clouds, boxes.

Conventions (fixed throughout the package):

* vehicle frame: x forward, y left, z up; origin at the ground-projected
  center of the ego bounding box; units are meters.
* camera frame: z forward, x right, y down.
* yaw/pitch/roll are intrinsic Z-Y'-X'' rotations, accepted in degrees at
  every external interface and converted to radians exactly once on entry.

All geometry is float64.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, FrameMismatch

ORTHONORMAL_TOL = 1e-9


def vec3(x: float, y: float, z: float) -> np.ndarray:
    """Build a finite (3,) float64 vector."""
    v = np.array([x, y, z], dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ContractViolation(f"vector components must be finite, got {v}")
    return v


def as_points(points) -> np.ndarray:
    """Coerce to an (N, 3) float64 array, rejecting NaN/inf coordinates."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        return pts.reshape(0, 3)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ContractViolation(f"expected (N, 3) points, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ContractViolation("point coordinates must be finite")
    return pts


@dataclass(frozen=True)
class Frame:
    """Coordinate frame tag carried by every point cloud.

    ``kind`` is one of "sensor", "vehicle", "world"; sensor frames carry the
    sensor id so clouds from different sensors cannot be mixed up silently.
    """

    kind: str
    sensor_id: str | None = None

    def __post_init__(self):
        if self.kind not in ("sensor", "vehicle", "world"):
            raise ContractViolation(f"unknown frame kind {self.kind!r}")
        if (self.kind == "sensor") != (self.sensor_id is not None):
            raise ContractViolation("sensor frames (and only those) need a sensor_id")

    @staticmethod
    def sensor(sensor_id: str) -> "Frame":
        return Frame("sensor", sensor_id)


VEHICLE = Frame("vehicle")
WORLD = Frame("world")

# Columns are the camera axes (x right, y down, z forward) expressed in a
# frame whose axes are x forward / y left / z up.
CAMERA_ALIGNMENT = np.array(
    [[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]], dtype=np.float64
)


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """Proper rigid motion: p -> rotation @ p + translation.

    ``rotation`` must be orthonormal with determinant +1 (checked on
    construction to within 1e-9).
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if r.shape != (3, 3):
            raise ContractViolation(f"rotation must be 3x3, got {r.shape}")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(t))):
            raise ContractViolation("transform entries must be finite")
        if np.max(np.abs(r.T @ r - np.eye(3))) > ORTHONORMAL_TOL:
            raise ContractViolation("rotation is not orthonormal within 1e-9")
        if abs(np.linalg.det(r) - 1.0) > ORTHONORMAL_TOL:
            raise ContractViolation("rotation determinant is not +1 within 1e-9")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)
        self.rotation.setflags(write=False)
        self.translation.setflags(write=False)

    @staticmethod
    def _unchecked(rotation: np.ndarray, translation: np.ndarray) -> "RigidTransform":
        # internal fast path for rotations orthonormal by construction
        obj = object.__new__(RigidTransform)
        rotation.setflags(write=False)
        translation.setflags(write=False)
        object.__setattr__(obj, "rotation", rotation)
        object.__setattr__(obj, "translation", translation)
        return obj

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform(np.eye(3), np.zeros(3))

    @staticmethod
    def from_yaw_pitch_roll(
        yaw_deg: float, pitch_deg: float, roll_deg: float, translation=(0.0, 0.0, 0.0)
    ) -> "RigidTransform":
        """Rotation applied as yaw about z, then pitch about y', then roll about x''."""
        y, p, r = (math.radians(a) for a in (yaw_deg, pitch_deg, roll_deg))
        cy, sy = math.cos(y), math.sin(y)
        cp, sp = math.cos(p), math.sin(p)
        cr, sr = math.cos(r), math.sin(r)
        rot = np.array(
            [
                [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
                [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
                [-sp, cp * sr, cp * cr],
            ]
        )
        t = np.asarray(translation, dtype=np.float64).reshape(3)
        if not (np.all(np.isfinite(rot)) and np.all(np.isfinite(t))):
            raise ContractViolation("transform entries must be finite")
        return RigidTransform._unchecked(rot, t)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Apply to one (3,) point or an (N, 3) batch."""
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.rotation.T + self.translation

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """Transform equal to applying ``other`` first, then ``self``."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def inverse(self) -> "RigidTransform":
        return RigidTransform(self.rotation.T, -(self.rotation.T @ self.translation))

    def as_matrix(self) -> np.ndarray:
        """Homogeneous 4x4 form."""
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """compose(a, b) applied to p equals a(b(p))."""
    return a.compose(b)


@dataclass(frozen=True, eq=False)
class PointCloud:
    """A set of 3D points tagged with the frame and timestep they belong to.

    May be empty: a scan where every ray escaped is a valid outcome.
    """

    points: np.ndarray
    frame: Frame
    timestep: int = 0

    def __post_init__(self):
        pts = as_points(self.points)
        object.__setattr__(self, "points", pts)
        self.points.setflags(write=False)

    def __len__(self) -> int:
        return self.points.shape[0]


def transform_cloud(
    cloud: PointCloud, transform: RigidTransform, source: Frame, target: Frame
) -> PointCloud:
    """Map a cloud from ``source`` to ``target`` via p -> R p + t.

    ``source`` states which frame the transform maps from; a cloud tagged
    with any other frame is rejected rather than silently re-tagged.
    """
    if cloud.frame != source:
        raise FrameMismatch(f"cloud is in {cloud.frame}, transform maps from {source}")
    return PointCloud(transform.apply(cloud.points), target, cloud.timestep)


def merge_clouds(clouds: list[PointCloud], frame: Frame, timestep: int) -> PointCloud:
    """Concatenate clouds that must all share ``frame`` and ``timestep``."""
    for c in clouds:
        if c.frame != frame:
            raise FrameMismatch(f"cannot merge {c.frame} cloud into {frame}")
        if c.timestep != timestep:
            raise ContractViolation(
                f"cannot merge timestep {c.timestep} cloud into timestep {timestep}"
            )
    if not clouds:
        return PointCloud(np.empty((0, 3)), frame, timestep)
    return PointCloud(np.vstack([c.points for c in clouds]), frame, timestep)


@dataclass(frozen=True, eq=False)
class Aabb:
    """Axis-aligned box; ``lo`` <= ``hi`` componentwise."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=np.float64).reshape(3)
        hi = np.asarray(self.hi, dtype=np.float64).reshape(3)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ContractViolation("box bounds must be finite")
        if np.any(lo > hi):
            raise ContractViolation(f"box min {lo} exceeds max {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        self.lo.setflags(write=False)
        self.hi.setflags(write=False)

    @staticmethod
    def of_points(points: np.ndarray) -> "Aabb":
        pts = as_points(points)
        if pts.shape[0] == 0:
            raise ContractViolation("cannot bound an empty point set")
        return Aabb(pts.min(axis=0), pts.max(axis=0))

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        inside = np.all((pts >= self.lo) & (pts <= self.hi), axis=1)
        return bool(inside[0]) if single else inside

    def size(self) -> np.ndarray:
        return self.hi - self.lo

    def volume(self) -> float:
        return float(np.prod(self.size()))
