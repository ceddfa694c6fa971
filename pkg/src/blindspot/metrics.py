"""Blind-spot radii, coverage grids, and region-of-interest summaries.

Per probe point q from the reference cloud, the blind-spot radius is the
Euclidean distance to the nearest point detected by the vehicle's sensors --
the radius of the largest sphere around q containing no detection. Probes
are binned into 2D grids over vertical slabs; each cell accumulates the
probe count, the radius sum (for the mean map), and the count of probes with
radius at or below the detection threshold (for the probability map).

All probes from all timesteps pool into a single per-cell mean. Accumulation
runs in probe order within each timestep and timesteps are applied in order,
so results are bit-reproducible regardless of worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import nn
from .errors import ContractViolation, FrameMismatch
from .geometry import VEHICLE, PointCloud


@dataclass(frozen=True)
class VerticalSlab:
    """Closed z interval [z_min, z_max] in the vehicle frame."""

    name: str
    z_min: float
    z_max: float

    def __post_init__(self):
        if not self.z_min < self.z_max:
            raise ContractViolation(f"slab {self.name!r}: z_min must be < z_max")

    def contains(self, z: np.ndarray) -> np.ndarray:
        return (z >= self.z_min) & (z <= self.z_max)


GROUND_SLAB = VerticalSlab("ground", -0.5, 0.5)
OBSTACLE_SLAB = VerticalSlab("obstacles", 0.5, 2.0)


@dataclass(frozen=True)
class GridSpec:
    """Uniform 2D grid over [x_min, x_max) x [y_min, y_max); cell counts are
    ceil(extent / cell_size), so the last cells may overhang the stated max."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    cell_size: float

    def __post_init__(self):
        if not self.cell_size > 0:
            raise ContractViolation("cell_size must be positive")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ContractViolation("grid extents must be positive")

    @property
    def nx(self) -> int:
        return math.ceil((self.x_max - self.x_min) / self.cell_size)

    @property
    def ny(self) -> int:
        return math.ceil((self.y_max - self.y_min) / self.cell_size)

    @property
    def diagonal(self) -> float:
        return math.hypot(self.x_max - self.x_min, self.y_max - self.y_min)

    def cell_of(self, points_xy: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(inside_mask, ix, iy) for (N, 2) positions; half-open bounds."""
        x = points_xy[:, 0]
        y = points_xy[:, 1]
        inside = (x >= self.x_min) & (x < self.x_max) & (y >= self.y_min) & (y < self.y_max)
        ix = np.floor((x - self.x_min) / self.cell_size).astype(np.int64)
        iy = np.floor((y - self.y_min) / self.cell_size).astype(np.int64)
        np.clip(ix, 0, self.nx - 1, out=ix)
        np.clip(iy, 0, self.ny - 1, out=iy)
        return inside, ix, iy

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        cx = self.x_min + (np.arange(self.nx) + 0.5) * self.cell_size
        cy = self.y_min + (np.arange(self.ny) + 0.5) * self.cell_size
        return cx, cy


@njit(cache=True)
def _accumulate_mean(sum_r, hit, probe, flat_idx, radii, r_thresh, cap):
    # Sequential, in probe order: the sums are bit-reproducible.
    clamped = 0
    for k in range(flat_idx.shape[0]):
        i = flat_idx[k]
        r = radii[k]
        if r > cap:
            clamped += 1
            sum_r[i] += cap
        else:
            sum_r[i] += r
        probe[i] += 1
        if r <= r_thresh:
            hit[i] += 1
    return clamped


@njit(cache=True)
def _accumulate_max(max_r, hit, probe, flat_idx, radii, r_thresh, cap):
    clamped = 0
    for k in range(flat_idx.shape[0]):
        i = flat_idx[k]
        r = radii[k]
        if r > cap:
            clamped += 1
            r_use = cap
        else:
            r_use = r
        if r_use > max_r[i]:
            max_r[i] = r_use
        probe[i] += 1
        if r <= r_thresh:
            hit[i] += 1
    return clamped


class CoverageGrid:
    """Mutable per-cell accumulators for one (grid, slab) pair.

    ``aggregation`` is "mean" (default) or "max"; max favors transient
    worst cases such as temporarily occluded cells.
    """

    def __init__(self, spec: GridSpec, slab: VerticalSlab, aggregation: str = "mean"):
        if aggregation not in ("mean", "max"):
            raise ContractViolation(f"unknown aggregation {aggregation!r}")
        self.spec = spec
        self.slab = slab
        self.aggregation = aggregation
        self.value_r = np.zeros(spec.nx * spec.ny)  # sum (mean mode) or max (max mode)
        self.hit_count = np.zeros(spec.nx * spec.ny, dtype=np.int64)
        self.probe_count = np.zeros(spec.nx * spec.ny, dtype=np.int64)
        self.clamp_count = 0

    def accumulate(self, points: np.ndarray, radii: np.ndarray, r_thresh: float) -> None:
        """Fold one timestep's (q, r) samples into the accumulators.

        Probes outside the slab or grid bounds are ignored. Radii above the
        grid diagonal (including +inf from an empty sensor cloud) are clamped
        to the diagonal before summation and counted in ``clamp_count``; the
        threshold test uses the unclamped radius.
        """
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        r = np.asarray(radii, dtype=np.float64).reshape(-1)
        if pts.shape[0] != r.shape[0]:
            raise ContractViolation("points and radii lengths differ")
        if np.any(r < 0):
            raise ContractViolation("blind-spot radii must be non-negative")
        keep = self.slab.contains(pts[:, 2])
        inside, ix, iy = self.spec.cell_of(pts[:, :2])
        keep &= inside
        if not np.any(keep):
            return
        flat = np.ascontiguousarray(ix[keep] * self.spec.ny + iy[keep])
        r_kept = np.ascontiguousarray(r[keep])
        fn = _accumulate_mean if self.aggregation == "mean" else _accumulate_max
        self.clamp_count += int(
            fn(
                self.value_r, self.hit_count, self.probe_count, flat,
                r_kept, float(r_thresh), self.spec.diagonal,
            )
        )


@dataclass(frozen=True, eq=False)
class Raster:
    """Finalized per-cell values; NaN marks cells that received no probes
    ("no data" is never reported as 0)."""

    spec: GridSpec
    slab_name: str
    kind: str  # "mean_radius", "max_radius", or "detection_probability"
    values: np.ndarray  # (nx, ny)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.spec.nx, self.spec.ny):
            raise ContractViolation(
                f"raster shape {v.shape} does not match grid {self.spec.nx}x{self.spec.ny}"
            )
        object.__setattr__(self, "values", v)
        self.values.setflags(write=False)


def finalize(grid: CoverageGrid) -> tuple[Raster, Raster]:
    """(radius map, detection-probability map) from a filled grid."""
    probes = grid.probe_count.astype(np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        if grid.aggregation == "mean":
            value = np.where(grid.probe_count > 0, grid.value_r / probes, np.nan)
            kind = "mean_radius"
        else:
            value = np.where(grid.probe_count > 0, grid.value_r, np.nan)
            kind = "max_radius"
        prob = np.where(grid.probe_count > 0, grid.hit_count / probes, np.nan)
    shape = (grid.spec.nx, grid.spec.ny)
    return (
        Raster(grid.spec, grid.slab.name, kind, value.reshape(shape)),
        Raster(grid.spec, grid.slab.name, "detection_probability", prob.reshape(shape)),
    )


@dataclass(frozen=True)
class RoiSummary:
    """Unweighted means over the non-empty cells inside a region of interest.
    Means are None when the region holds no data at all."""

    name: str
    mean_blind_spot_radius: float | None
    mean_detection_probability: float | None
    nonempty_cell_count: int

    def __post_init__(self):
        p = self.mean_detection_probability
        if p is not None and not (0.0 <= p <= 1.0):
            raise ContractViolation("mean detection probability outside [0, 1]")
        if (self.nonempty_cell_count == 0) != (p is None):
            raise ContractViolation("no-data summaries must have None means")


def summarize(
    radius_map: Raster,
    probability_map: Raster,
    name: str,
    x_range: tuple[float, float],
    y_range: tuple[float, float],
) -> RoiSummary:
    """Average the two maps over non-empty cells whose centers fall inside
    the closed rectangle ``x_range`` x ``y_range``."""
    if radius_map.spec is not probability_map.spec and radius_map.spec != probability_map.spec:
        raise ContractViolation("maps come from different grids")
    spec = radius_map.spec
    if (
        x_range[0] < spec.x_min or x_range[1] > spec.x_min + spec.nx * spec.cell_size
        or y_range[0] < spec.y_min or y_range[1] > spec.y_min + spec.ny * spec.cell_size
    ):
        raise ContractViolation(f"roi {name!r} exceeds grid bounds")
    cx, cy = spec.cell_centers()
    in_x = (cx >= x_range[0]) & (cx <= x_range[1])
    in_y = (cy >= y_range[0]) & (cy <= y_range[1])
    window = np.outer(in_x, in_y)
    nonempty = window & np.isfinite(radius_map.values)
    count = int(np.count_nonzero(nonempty))
    if count == 0:
        return RoiSummary(name, None, None, 0)
    return RoiSummary(
        name,
        float(np.mean(radius_map.values[nonempty])),
        float(np.mean(probability_map.values[nonempty])),
        count,
    )


@dataclass(frozen=True, eq=False)
class ProbeRadii:
    """Reference probe positions paired with their blind-spot radii."""

    points: np.ndarray   # (N, 3) vehicle frame
    radii: np.ndarray    # (N,) meters; +inf when the sensor cloud was empty
    timestep: int


def blind_spot_radii(reference: PointCloud, sensors: PointCloud) -> ProbeRadii:
    """Radius per reference probe: exact NN distance into the sensor cloud.

    Both clouds must be vehicle-frame and from the same timestep; an empty
    sensor cloud yields +inf for every probe.
    """
    if reference.frame != VEHICLE or sensors.frame != VEHICLE:
        raise FrameMismatch("blind-spot radii require vehicle-frame clouds")
    if reference.timestep != sensors.timestep:
        raise ContractViolation(
            f"timestep mismatch: reference t={reference.timestep}, sensors t={sensors.timestep}"
        )
    tree = nn.build(sensors.points)
    radii = nn.query_distances(tree, reference.points)
    return ProbeRadii(reference.points, radii, reference.timestep)
