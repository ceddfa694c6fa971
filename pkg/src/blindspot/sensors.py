"""Sensor models that turn world snapshots into vehicle-frame point clouds.

Two sensor families share one output type:

* rotating LiDAR: one ray per (channel, azimuth step); hits come back as 3D
  points directly.
* depth camera: renders a z-depth image (depth is the forward component, not
  the ray length), which `unproject_depth` lifts back to 3D by undoing the
  intrinsic matrix, the lens distortion, and the perspective divide.

Per-pixel lens-plane coordinates only depend on the camera spec, so they are
computed once per spec and cached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .errors import ContractViolation, NumericError
from .geometry import VEHICLE, PointCloud, RigidTransform
from .scene import WorldSnapshot

UNDISTORT_MAX_ITER = 50
UNDISTORT_TOL = 1e-10
_BIJECTIVITY_RESIDUAL = 1e-8


@dataclass(frozen=True)
class DistortionModel:
    """Radial polynomial lens distortion (or none).

    Forward model maps undistorted lens-plane coordinates p to
    p * (1 + k1 r^2 + k2 r^4 + k3 r^6). ``fov_radius`` is the largest
    distorted-plane radius the model must invert; when set, construction
    verifies the model is bijective over that field of view (inversion
    residual < 1e-8 on a sample grid).
    """

    kind: str = "none"
    k1: float = 0.0
    k2: float = 0.0
    k3: float = 0.0
    fov_radius: float | None = None

    def __post_init__(self):
        if self.kind not in ("none", "radial"):
            raise ContractViolation(f"unknown distortion kind {self.kind!r}")
        if self.kind == "none" and (self.k1 or self.k2 or self.k3):
            raise ContractViolation("kind 'none' cannot carry coefficients")
        if self.fov_radius is not None:
            self._check_bijective(float(self.fov_radius))

    def _scale(self, r2: np.ndarray) -> np.ndarray:
        return 1.0 + r2 * (self.k1 + r2 * (self.k2 + r2 * self.k3))

    def distort(self, points: np.ndarray) -> np.ndarray:
        """Undistorted lens plane -> distorted image plane."""
        pts = np.asarray(points, dtype=np.float64)
        if self.kind == "none":
            return pts.copy()
        r2 = np.sum(pts * pts, axis=-1, keepdims=True)
        return pts * self._scale(r2)

    def undistort(self, points: np.ndarray, *, label_fn=None) -> np.ndarray:
        """Distorted image plane -> undistorted lens plane.

        Fixed-point iteration x <- d / scale(|x|^2), capped at 50 rounds with
        tolerance 1e-10; raises NumericError naming the offending point (via
        ``label_fn(flat_index)`` when supplied) if it fails to converge.
        """
        pts = np.asarray(points, dtype=np.float64)
        if self.kind == "none":
            return pts.copy()
        x = pts.copy()
        flat = x.reshape(-1, 2)
        d = pts.reshape(-1, 2)
        for _ in range(UNDISTORT_MAX_ITER):
            r2 = np.sum(flat * flat, axis=-1, keepdims=True)
            nxt = d / self._scale(r2)
            delta = np.max(np.abs(nxt - flat))
            flat[:] = nxt
            if delta < UNDISTORT_TOL:
                break
        else:
            residual = np.max(np.abs(self.distort(flat) - d), axis=-1)
            bad = int(np.argmax(residual))
            if residual[bad] > _BIJECTIVITY_RESIDUAL:
                label = label_fn(bad) if label_fn else f"image point {tuple(d[bad])}"
                raise NumericError(
                    f"distortion inversion did not converge at {label} "
                    f"(residual {residual[bad]:.3e})"
                )
        return x

    def _check_bijective(self, fov_radius: float) -> None:
        if self.kind == "none" or fov_radius == 0.0:
            return
        # Invert a radial grid covering the field of view, then demand the
        # forward model reproduce it and stay strictly monotone in radius.
        radii = np.linspace(0.0, fov_radius, 33)
        angles = np.linspace(0.0, 2 * math.pi, 9)[:-1]
        grid = np.stack(
            [np.outer(radii, np.cos(angles)).ravel(), np.outer(radii, np.sin(angles)).ravel()],
            axis=-1,
        )
        try:
            lens = self.undistort(grid)
        except NumericError as exc:
            raise ContractViolation(
                f"distortion model is not invertible over fov radius {fov_radius}: {exc}"
            ) from exc
        residual = np.max(np.abs(self.distort(lens) - grid))
        if residual > _BIJECTIVITY_RESIDUAL:
            raise ContractViolation(
                f"distortion inversion residual {residual:.3e} over fov radius {fov_radius}"
            )
        r_need = float(np.max(np.linalg.norm(lens, axis=-1)))
        r = np.linspace(0.0, r_need * 1.001, 257)
        g = r * self._scale(r * r)
        if np.any(np.diff(g) <= 0.0):
            raise ContractViolation(
                f"distortion model is not monotone (hence not bijective) up to "
                f"lens radius {r_need:.3f}"
            )


@dataclass(frozen=True, eq=False)
class LidarSpec:
    """Rotating LiDAR: ``channels`` elevation rings spaced evenly over
    [elevation_min, elevation_max] inclusive, ``points_per_channel`` azimuth
    steps at bin centers over [azimuth_min, azimuth_max). Angles in degrees;
    ``mount`` maps sensor frame (x forward, y left, z up) to vehicle frame."""

    sensor_id: str
    channels: int
    points_per_channel: int
    elevation_min_deg: float
    elevation_max_deg: float
    azimuth_min_deg: float = 0.0
    azimuth_max_deg: float = 360.0
    max_range: float = 100.0
    mount: RigidTransform = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.mount is None:
            object.__setattr__(self, "mount", RigidTransform.identity())
        if self.channels < 1 or self.points_per_channel < 1:
            raise ContractViolation("channels and points_per_channel must be >= 1")
        if self.elevation_min_deg > self.elevation_max_deg:
            raise ContractViolation("elevation range is reversed")
        if not self.max_range > 0:
            raise ContractViolation("max_range must be positive")

    @cached_property
    def directions(self) -> np.ndarray:
        """Unit ray directions in the sensor frame, channel-major order."""
        elevations = np.radians(
            np.linspace(self.elevation_min_deg, self.elevation_max_deg, self.channels)
        )
        span = self.azimuth_max_deg - self.azimuth_min_deg
        azimuths = np.radians(
            self.azimuth_min_deg
            + (np.arange(self.points_per_channel) + 0.5) * span / self.points_per_channel
        )
        ce, se = np.cos(elevations), np.sin(elevations)
        ca, sa = np.cos(azimuths), np.sin(azimuths)
        dirs = np.empty((self.channels, self.points_per_channel, 3))
        dirs[:, :, 0] = ce[:, None] * ca[None, :]
        dirs[:, :, 1] = ce[:, None] * sa[None, :]
        dirs[:, :, 2] = se[:, None]
        return dirs.reshape(-1, 3)


@dataclass(frozen=True, eq=False)
class CameraSpec:
    """Pinhole depth camera with optional radial distortion.

    ``fx, fy, cx, cy`` are the intrinsic matrix entries in pixels; rays pass
    through pixel centers at integer pixel coordinates. ``mount`` maps the
    camera frame (z forward, x right, y down) to the vehicle frame.
    """

    sensor_id: str
    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float
    distortion: DistortionModel = DistortionModel()
    max_range: float = 100.0
    mount: RigidTransform = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.mount is None:
            object.__setattr__(self, "mount", RigidTransform.identity())
        if self.width < 1 or self.height < 1:
            raise ContractViolation("image dimensions must be positive")
        if not (self.fx > 0 and self.fy > 0):
            raise ContractViolation("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ContractViolation("principal point must lie inside the image")
        if not self.max_range > 0:
            raise ContractViolation("max_range must be positive")
        if self.distortion.fov_radius is None:
            object.__setattr__(
                self, "distortion", replace(self.distortion, fov_radius=self._corner_radius())
            )
        elif self.distortion.fov_radius < self._corner_radius() - 1e-12:
            raise ContractViolation(
                "distortion model fov_radius does not cover the image corners"
            )

    def _corner_radius(self) -> float:
        corners_x = (np.array([0.0, self.width - 1.0]) - self.cx) / self.fx
        corners_y = (np.array([0.0, self.height - 1.0]) - self.cy) / self.fy
        return float(
            max(math.hypot(x, y) for x in corners_x for y in corners_y)
        )

    @cached_property
    def pixel_lens_coords(self) -> np.ndarray:
        """(H*W, 2) undistorted lens coordinates per pixel center, row-major.

        Computed once per spec; both rendering and unprojection reuse it.
        """
        u = (np.arange(self.width) - self.cx) / self.fx
        v = (np.arange(self.height) - self.cy) / self.fy
        img = np.stack(np.meshgrid(u, v, indexing="xy"), axis=-1).reshape(-1, 2)
        label = lambda i: f"pixel ({i % self.width}, {i // self.width})"
        return self.distortion.undistort(img, label_fn=label)

    @cached_property
    def pixel_directions(self) -> np.ndarray:
        """(H*W, 3) unit ray directions in the camera frame."""
        lens = self.pixel_lens_coords
        dirs = np.concatenate([lens, np.ones((lens.shape[0], 1))], axis=1)
        return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


@dataclass(frozen=True, eq=False)
class DepthImage:
    """Per-pixel z-depth in meters; NaN marks no return. Finite depths must
    lie in (0, max_range]."""

    width: int
    height: int
    depth: np.ndarray
    max_range: float
    timestep: int = 0

    def __post_init__(self):
        d = np.asarray(self.depth, dtype=np.float64)
        if d.shape != (self.height, self.width):
            raise ContractViolation(
                f"depth shape {d.shape} does not match {self.height}x{self.width}"
            )
        finite = d[np.isfinite(d)]
        if finite.size and (np.any(finite <= 0) or np.any(finite > self.max_range + 1e-12)):
            raise ContractViolation("finite depths must lie in (0, max_range]")
        object.__setattr__(self, "depth", d)
        self.depth.setflags(write=False)


def invert_distortion(model: DistortionModel, distorted: np.ndarray) -> np.ndarray:
    """Distorted image-plane point(s) -> undistorted lens-plane point(s)."""
    pts = np.asarray(distorted, dtype=np.float64)
    single = pts.ndim == 1
    out = model.undistort(np.atleast_2d(pts))
    return out[0] if single else out


def project(spec: CameraSpec, cam_points: np.ndarray) -> np.ndarray:
    """Camera-frame 3D points -> continuous pixel coordinates.

    Perspective divide, forward distortion, then the intrinsic matrix.
    Points must have positive z.
    """
    pts = np.asarray(cam_points, dtype=np.float64).reshape(-1, 3)
    if np.any(pts[:, 2] <= 0):
        raise ContractViolation("projection requires z > 0")
    lens = pts[:, :2] / pts[:, 2:3]
    img = spec.distortion.distort(lens)
    return np.stack([img[:, 0] * spec.fx + spec.cx, img[:, 1] * spec.fy + spec.cy], axis=-1)


def unproject_pixels(spec: CameraSpec, pixels: np.ndarray, depths: np.ndarray) -> np.ndarray:
    """Continuous pixel coordinates + z-depths -> camera-frame 3D points."""
    px = np.asarray(pixels, dtype=np.float64).reshape(-1, 2)
    z = np.asarray(depths, dtype=np.float64).reshape(-1, 1)
    img = np.stack(
        [(px[:, 0] - spec.cx) / spec.fx, (px[:, 1] - spec.cy) / spec.fy], axis=-1
    )
    lens = spec.distortion.undistort(img)
    return np.concatenate([lens * z, z], axis=1)


def _sensor_world_pose(mount: RigidTransform, ego_pose: RigidTransform) -> RigidTransform:
    return ego_pose.compose(mount)


def lidar_scan_attributed(
    spec: LidarSpec, world: WorldSnapshot, ego_pose: RigidTransform
) -> tuple[PointCloud, np.ndarray]:
    """LiDAR scan returning the vehicle-frame cloud plus per-point actor index."""
    pose = _sensor_world_pose(spec.mount, ego_pose)
    dirs_world = spec.directions @ pose.rotation.T
    t, actor = world.cast(pose.translation, dirs_world, spec.max_range)
    hit = actor >= 0
    points_world = pose.translation + t[hit, None] * dirs_world[hit]
    points_vehicle = ego_pose.inverse().apply(points_world)
    cloud = PointCloud(points_vehicle, VEHICLE, world.timestep)
    return cloud, actor[hit]


def lidar_scan(spec: LidarSpec, world: WorldSnapshot, ego_pose: RigidTransform) -> PointCloud:
    """One ray per (channel, azimuth step); misses are omitted from the cloud."""
    cloud, _ = lidar_scan_attributed(spec, world, ego_pose)
    return cloud


def render_depth(spec: CameraSpec, world: WorldSnapshot, ego_pose: RigidTransform) -> DepthImage:
    """Render the z-depth of the nearest hit through each pixel center.

    The pixel value is the camera-frame z component of the hit, not the ray
    length; anything beyond ``max_range`` in z is a no-return.
    """
    pose = _sensor_world_pose(spec.mount, ego_pose)
    dirs_cam = spec.pixel_directions
    dirs_world = dirs_cam @ pose.rotation.T
    # Cap the ray length so that z-depth (= t * dir_z) never exceeds max_range.
    t_max = spec.max_range / dirs_cam[:, 2]
    t, actor = world.cast(pose.translation, dirs_world, t_max)
    depth = np.where(actor >= 0, t * dirs_cam[:, 2], np.nan)
    return DepthImage(
        spec.width, spec.height, depth.reshape(spec.height, spec.width),
        spec.max_range, world.timestep,
    )


def unproject_depth(spec: CameraSpec, image: DepthImage) -> PointCloud:
    """Lift a depth image to a vehicle-frame point cloud.

    Uses the precomputed per-pixel lens coordinates; no-return pixels
    contribute no points.
    """
    if (image.width, image.height) != (spec.width, spec.height):
        raise ContractViolation(
            f"depth image is {image.width}x{image.height}, "
            f"spec expects {spec.width}x{spec.height}"
        )
    depth = image.depth.reshape(-1)
    valid = np.isfinite(depth)
    lens = spec.pixel_lens_coords[valid]
    z = depth[valid, None]
    cam_points = np.concatenate([lens * z, z], axis=1)
    return PointCloud(spec.mount.apply(cam_points), VEHICLE, image.timestep)
