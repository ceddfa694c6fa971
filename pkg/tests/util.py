"""Shared helpers for the test suite: scene builders and analytic oracles."""

from __future__ import annotations

import numpy as np

from blindspot.geometry import Aabb
from blindspot.meshes import box, ground_plane
from blindspot.scene import Actor, StaticTrajectory, build_world


def three_box_world(ground_extent: float = 50.0):
    """Ground plane plus three boxes; a small scene with varied occlusion."""
    actors = [
        Actor("ego", box((4.0, 1.8, 1.4), (0, 0, 0.7)), StaticTrajectory(), is_ego=True),
        Actor("ground", ground_plane(ground_extent), StaticTrajectory()),
        Actor("crate", box((2.0, 2.0, 2.0), (10, 3, 1.0)), StaticTrajectory()),
        Actor("post", box((0.4, 0.4, 3.0), (6, -4, 1.5)), StaticTrajectory()),
    ]
    return build_world(actors, 0), actors


def random_directions(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def aabb_of_box(size, center) -> Aabb:
    half = np.asarray(size, dtype=float) / 2
    c = np.asarray(center, dtype=float)
    return Aabb(c - half, c + half)


def on_aabb_surface(points: np.ndarray, boxes: list[Aabb], tol: float) -> np.ndarray:
    """True per point if it lies on some face of one of the axis-aligned boxes."""
    pts = np.atleast_2d(points)
    ok = np.zeros(pts.shape[0], dtype=bool)
    for b in boxes:
        inside = np.all(
            (pts >= b.lo - tol) & (pts <= b.hi + tol), axis=1
        )
        on_face = np.zeros_like(ok)
        for a in range(3):
            on_face |= np.abs(pts[:, a] - b.lo[a]) <= tol
            on_face |= np.abs(pts[:, a] - b.hi[a]) <= tol
        ok |= inside & on_face
    return ok


def shell_axis_pdf(outer_lo, outer_hi, inner_lo, inner_hi, axis: int):
    """Piecewise-constant marginal density of a uniform draw over
    (outer box minus inner box), along one axis. Returns (breaks, densities)
    with densities normalized to integrate to 1."""
    others = [a for a in range(3) if a != axis]
    outer_area = np.prod([outer_hi[a] - outer_lo[a] for a in others])
    inner_area = np.prod([inner_hi[a] - inner_lo[a] for a in others])
    breaks = sorted({outer_lo[axis], outer_hi[axis], inner_lo[axis], inner_hi[axis]})
    dens = []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        mid = 0.5 * (lo + hi)
        area = outer_area
        if inner_lo[axis] <= mid <= inner_hi[axis]:
            area -= inner_area
        dens.append(area)
    total = sum(d * (hi - lo) for d, (lo, hi) in zip(dens, zip(breaks[:-1], breaks[1:])))
    return np.array(breaks), np.array(dens) / total


def shell_bin_probabilities(breaks, dens, edges) -> np.ndarray:
    """Integrate the piecewise-constant pdf over histogram bins."""
    probs = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        p = 0.0
        for (b_lo, b_hi), d in zip(zip(breaks[:-1], breaks[1:]), dens):
            seg = max(0.0, min(hi, b_hi) - max(lo, b_lo))
            p += d * seg
        probs.append(p)
    return np.asarray(probs)


def tiny_scenario_dict(
    name: str = "tiny",
    timesteps: int = 8,
    sensors: list | None = None,
    seed: int = 7,
    ref_channels: int = 32,
    ref_points: int = 64,
    grids: list | None = None,
    rois: list | None = None,
) -> dict:
    """A fast, fully-valid scenario dict that exercises the whole pipeline."""
    if sensors is None:
        sensors = [
            {
                "kind": "lidar",
                "id": "main",
                "channels": 16,
                "points_per_channel": 90,
                "elevation_deg": [-25.0, 2.0],
                "azimuth_deg": [0.0, 360.0],
                "max_range": 80.0,
                "mount": {"position": [2.05, 0.0, 1.2], "ypr_deg": [0.0, 0.0, 0.0]},
            }
        ]
    if grids is None:
        grids = [
            {
                "name": "main",
                "x": [-10.0, 14.0],
                "y": [-8.0, 8.0],
                "cell_size": 0.5,
                "slabs": [
                    {"name": "ground", "z": [-0.5, 0.5]},
                    {"name": "obstacles", "z": [0.5, 2.0]},
                ],
            }
        ]
    if rois is None:
        rois = [
            {"name": "front ground", "grid": "main", "slab": "ground",
             "x": [0.0, 12.0], "y": [-6.0, 6.0]},
            {"name": "front obstacles", "grid": "main", "slab": "obstacles",
             "x": [0.0, 12.0], "y": [-6.0, 6.0]},
        ]
    return {
        "name": name,
        "seed": seed,
        "timesteps": timesteps,
        "r_thresh": 0.4,
        "aggregation": "mean",
        "scene": {
            "actors": [
                {
                    "id": "ego",
                    "shape": {"kind": "box", "size": [4.0, 1.8, 1.4], "center": [0, 0, 0.7]},
                    "trajectory": {"kind": "static", "position": [0, 0, 0], "yaw_deg": 0.0},
                    "is_ego": True,
                },
                {
                    "id": "ground",
                    "shape": {"kind": "ground", "extent": 120.0},
                    "trajectory": {"kind": "static", "position": [0, 0, 0], "yaw_deg": 0.0},
                    "is_ego": False,
                },
                {
                    "id": "crate",
                    "shape": {"kind": "box", "size": [2.0, 2.0, 2.0], "center": [0, 0, 1.0]},
                    "trajectory": {
                        "kind": "keyframes",
                        "keyframes": [
                            {"t": 0, "position": [8.0, 1.0, 0.0], "yaw_deg": 0.0},
                            {"t": max(1, timesteps - 1), "position": [11.0, -1.0, 0.0],
                             "yaw_deg": 10.0},
                        ],
                    },
                    "is_ego": False,
                },
            ]
        },
        "sensors": sensors,
        "reference": {
            "mode": "sampled",
            "channels": ref_channels,
            "points_per_channel": ref_points,
            "elevation_deg": [-90.0, 0.0],
            "azimuth_span_deg": 360.0,
            "shell_margin_up": 0.5,
            "shell_margin_horizontal": 0.5,
            "yaw_deg": [-180.0, 180.0],
            "pitch_deg": [-45.0, 45.0],
            "roll_deg": [-45.0, 45.0],
            "max_range": 100.0,
        },
        "grids": grids,
        "rois": rois,
        "notes": [],
    }
