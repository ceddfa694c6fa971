"""End-to-end scenario execution.

Per timestep: snapshot the world, scan every rig sensor, fuse the clouds,
obtain the reference cloud (simulated or pre-recorded), compute blind-spot
radii, and fold them into every coverage grid. Grids accumulate in timestep
order with sequential per-probe updates, so outputs are byte-identical for a
fixed seed no matter how many worker threads the kernels use.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .cloud_io import ingest_cloud
from .config import ActorConfig, ReferenceConfig, ScenarioConfig, SensorConfig
from .errors import ConfigError
from .geometry import CAMERA_ALIGNMENT, VEHICLE, PointCloud, RigidTransform, merge_clouds
from .meshes import box, ground_plane, hatchback, load_mesh
from .metrics import (
    CoverageGrid,
    GridSpec,
    VerticalSlab,
    blind_spot_radii,
    finalize,
    summarize,
)
from .raster_io import emit_raster
from .reference import ReferenceSamplerConfig, reference_scan
from .report import CoverageReport, RasterRef, save_report
from .runtime import set_thread_count
from .scene import (
    Actor,
    KeyframeTrajectory,
    LinearTrajectory,
    StaticTrajectory,
    build_world,
)
from .sensors import (
    CameraSpec,
    DistortionModel,
    LidarSpec,
    lidar_scan,
    render_depth,
    unproject_depth,
)


def build_actor(cfg: ActorConfig, base_dir: Path) -> Actor:
    shape = cfg.shape
    if shape.kind == "box":
        mesh = box(shape.size, shape.center)
    elif shape.kind == "ground":
        mesh = ground_plane(shape.extent)
    elif shape.kind == "hatchback":
        mesh = hatchback()
    elif shape.kind == "mesh":
        mesh = load_mesh(base_dir / shape.path)
    else:
        raise ConfigError(f"unknown shape kind {shape.kind!r}")
    traj_cfg = cfg.trajectory
    if traj_cfg.kind == "static":
        traj = StaticTrajectory(
            RigidTransform.from_yaw_pitch_roll(traj_cfg.yaw_deg, 0, 0, traj_cfg.position)
        )
    elif traj_cfg.kind == "linear":
        traj = LinearTrajectory(traj_cfg.position, traj_cfg.step, traj_cfg.yaw_deg)
    else:
        traj = KeyframeTrajectory(
            tuple(k.t for k in traj_cfg.keyframes),
            tuple(k.position for k in traj_cfg.keyframes),
            tuple(k.yaw_deg for k in traj_cfg.keyframes),
        )
    return Actor(cfg.actor_id, mesh, traj, cfg.is_ego)


def _mount_transform(cfg: SensorConfig) -> RigidTransform:
    """Sensor-to-vehicle mount. Camera mounts fold in the axis alignment so
    that yaw/pitch/roll describe where the camera points (yaw 0 = forward)."""
    base = RigidTransform.from_yaw_pitch_roll(*cfg.mount.ypr_deg, cfg.mount.position)
    if cfg.kind == "camera":
        return base.compose(RigidTransform(CAMERA_ALIGNMENT, np.zeros(3)))
    return base


def build_sensor(cfg: SensorConfig):
    if cfg.kind == "lidar":
        return LidarSpec(
            sensor_id=cfg.sensor_id,
            channels=cfg.channels,
            points_per_channel=cfg.points_per_channel,
            elevation_min_deg=cfg.elevation_deg[0],
            elevation_max_deg=cfg.elevation_deg[1],
            azimuth_min_deg=cfg.azimuth_deg[0],
            azimuth_max_deg=cfg.azimuth_deg[1],
            max_range=cfg.max_range,
            mount=_mount_transform(cfg),
        )
    return CameraSpec(
        sensor_id=cfg.sensor_id,
        width=cfg.width,
        height=cfg.height,
        fx=cfg.fx,
        fy=cfg.fy,
        cx=cfg.cx,
        cy=cfg.cy,
        distortion=(
            DistortionModel()
            if cfg.distortion_kind == "none"
            else DistortionModel("radial", *cfg.distortion_k)
        ),
        max_range=cfg.max_range,
        mount=_mount_transform(cfg),
    )


def build_reference(cfg: ReferenceConfig, seed: int) -> ReferenceSamplerConfig:
    return ReferenceSamplerConfig(
        shell_margin_up=cfg.shell_margin_up,
        shell_margin_horizontal=cfg.shell_margin_horizontal,
        channels=cfg.channels,
        points_per_channel=cfg.points_per_channel,
        elevation_min_deg=cfg.elevation_deg[0],
        elevation_max_deg=cfg.elevation_deg[1],
        azimuth_span_deg=cfg.azimuth_span_deg,
        yaw_min_deg=cfg.yaw_deg[0],
        yaw_max_deg=cfg.yaw_deg[1],
        pitch_min_deg=cfg.pitch_deg[0],
        pitch_max_deg=cfg.pitch_deg[1],
        roll_min_deg=cfg.roll_deg[0],
        roll_max_deg=cfg.roll_deg[1],
        max_range=cfg.max_range,
        seed=seed,
    )


@dataclass
class RunResult:
    report: CoverageReport
    rasters: dict[tuple[str, str, str], object]  # (grid, slab, kind) -> Raster
    seconds: float
    timesteps_per_second: float


def scan_rig(sensor_specs, world, ego_pose) -> PointCloud:
    """All rig sensors fused into one vehicle-frame cloud."""
    clouds = []
    for spec in sensor_specs:
        if isinstance(spec, LidarSpec):
            clouds.append(lidar_scan(spec, world, ego_pose))
        else:
            clouds.append(unproject_depth(spec, render_depth(spec, world, ego_pose)))
    return merge_clouds(clouds, VEHICLE, world.timestep)


def run_scenario(
    cfg: ScenarioConfig,
    out_dir: str | Path | None = None,
    threads: int | None = None,
    probe_hook=None,
    write_images: bool = True,
) -> RunResult:
    """Execute all timesteps and emit rasters plus the coverage report.

    ``probe_hook(t, points, radii)`` is called once per timestep with the
    vehicle-frame probe positions and their blind-spot radii (used by the
    verification suite to cross-check the grid math).
    """
    set_thread_count(threads)
    base_dir = cfg.base_dir
    actors = [build_actor(a, base_dir) for a in cfg.actors]
    ego = next(a for a in actors if a.is_ego)
    sensor_specs = [build_sensor(s) for s in cfg.sensors]
    ref_cfg = (
        build_reference(cfg.reference, cfg.seed) if cfg.reference.mode == "sampled" else None
    )

    grids: list[CoverageGrid] = []
    for g in cfg.grids:
        spec = GridSpec(g.x[0], g.x[1], g.y[0], g.y[1], g.cell_size)
        for s in g.slabs:
            grids.append(
                CoverageGrid(spec, VerticalSlab(s.name, s.z[0], s.z[1]), cfg.aggregation)
            )
    grid_names = [
        (g.name, s.name) for g in cfg.grids for s in g.slabs
    ]

    started = time.perf_counter()
    for t in range(cfg.timesteps):
        world = build_world(actors, t)
        ego_pose = ego.trajectory.pose_at(t)
        fused = scan_rig(sensor_specs, world, ego_pose)
        if ref_cfg is not None:
            reference = reference_scan(ref_cfg, world, ego, t)
        else:
            path = base_dir / cfg.reference.pattern.format(t=t)
            reference = ingest_cloud(path, VEHICLE, timestep=t)
        probes = blind_spot_radii(reference, fused)
        if probe_hook is not None:
            probe_hook(t, probes.points, probes.radii)
        for grid in grids:
            grid.accumulate(probes.points, probes.radii, cfg.r_thresh)
    elapsed = time.perf_counter() - started

    rasters: dict[tuple[str, str, str], object] = {}
    raster_refs: list[RasterRef] = []
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    run_metadata = {
        "config_hash": cfg.config_hash(), "seed": cfg.seed, "timesteps": cfg.timesteps,
    }
    for (gname, sname), grid in zip(grid_names, grids):
        value_map, prob_map = finalize(grid)
        for raster in (value_map, prob_map):
            rasters[(gname, sname, raster.kind)] = raster
            if out is not None:
                stem = f"{cfg.name}_{gname}_{sname}_{raster.kind}"
                csv_path = out / f"{stem}.csv"
                ppm_path = (out / f"{stem}.ppm") if write_images else None
                emit_raster(raster, csv_path, ppm_path, run_metadata)
                raster_refs.append(
                    RasterRef(
                        gname, sname, raster.kind, csv_path.name,
                        ppm_path.name if ppm_path else None,
                    )
                )

    value_kind = "mean_radius" if cfg.aggregation == "mean" else "max_radius"
    summaries = []
    for roi in cfg.rois:
        radius_map = rasters[(roi.grid, roi.slab, value_kind)]
        prob_map = rasters[(roi.grid, roi.slab, "detection_probability")]
        summaries.append(summarize(radius_map, prob_map, roi.name, roi.x, roi.y))

    notes = list(cfg.notes)
    if not cfg.sensors:
        notes.append("sensor rig is empty: all blind-spot radii were infinite and clamped")
    report = CoverageReport(
        name=cfg.name,
        config_hash=cfg.config_hash(),
        seed=cfg.seed,
        timesteps=cfg.timesteps,
        r_thresh=cfg.r_thresh,
        aggregation=cfg.aggregation,
        package_version=__version__,
        sensor_count=len(cfg.sensors),
        clamp_counts={f"{g}/{s}": grid.clamp_count
                      for (g, s), grid in zip(grid_names, grids)},
        rois=tuple(summaries),
        rasters=tuple(raster_refs),
        notes=tuple(notes),
    )
    if out is not None:
        save_report(report, out / f"{cfg.name}_report.json")
    return RunResult(
        report=report,
        rasters=rasters,
        seconds=elapsed,
        timesteps_per_second=cfg.timesteps / elapsed if elapsed > 0 else float("inf"),
    )
