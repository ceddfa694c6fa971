"""Bundled scenario presets.

Three bundles cover the classic sensor-rig studies:

* ``camera-trio``: one forward windshield camera plus two rear-facing
  side-mirror cameras (90 degree horizontal FoV, an assumption documented in
  the configs).
* ``roof-vs-grille``: the same 128-channel LiDAR mounted at the front grille
  vs at the top of the windshield.
* ``lidar-resolution``: the roof mount swept over 32/64/128 channels.

All presets share a desk-scale straight-road scene: ego hatchback, ground
plane, and one lead vehicle drifting between roughly 17 and 70 m ahead. The
reference sensor is downsampled to 256x512 rays (from the full-scale
1024x1024 default); the note travels in the config metadata.

The JSON files under ``presets/`` are generated from the builders here by
``scripts/regen_presets.py``; edit the builders, not the files.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .errors import ConfigError

_COMMON_NOTES = [
    "desk-scale scenario: straight road, ego hatchback, one lead vehicle",
    "reference sensor downsampled to 256x512 rays (full-scale default is 1024x1024)",
]

_LEAD_KEYFRAMES = [
    # Lead vehicle center x; its rear face sits 2.1 m closer to the ego.
    {"t": 0, "position": [21.0, 0.0, 0.0], "yaw_deg": 0.0},
    {"t": 52, "position": [47.0, 0.0, 0.0], "yaw_deg": 0.0},
    {"t": 104, "position": [24.0, 0.0, 0.0], "yaw_deg": 0.0},
    {"t": 168, "position": [68.0, 0.0, 0.0], "yaw_deg": 0.0},
    {"t": 220, "position": [19.5, 0.0, 0.0], "yaw_deg": 0.0},
    {"t": 300, "position": [55.0, 0.0, 0.0], "yaw_deg": 0.0},
]


def _scene() -> dict:
    return {
        "actors": [
            {
                "id": "ego",
                "shape": {"kind": "hatchback"},
                "trajectory": {"kind": "static", "position": [0.0, 0.0, 0.0], "yaw_deg": 0.0},
                "is_ego": True,
            },
            {
                "id": "ground",
                "shape": {"kind": "ground", "extent": 250.0},
                "trajectory": {"kind": "static", "position": [0.0, 0.0, 0.0], "yaw_deg": 0.0},
                "is_ego": False,
            },
            {
                "id": "lead",
                "shape": {"kind": "box", "size": [4.2, 1.8, 2.0], "center": [0.0, 0.0, 1.0]},
                "trajectory": {"kind": "keyframes", "keyframes": list(_LEAD_KEYFRAMES)},
                "is_ego": False,
            },
        ]
    }


def _reference() -> dict:
    return {
        "mode": "sampled",
        "channels": 256,
        "points_per_channel": 512,
        "elevation_deg": [-90.0, 0.0],
        "azimuth_span_deg": 360.0,
        "shell_margin_up": 0.5,
        "shell_margin_horizontal": 0.5,
        "yaw_deg": [-180.0, 180.0],
        "pitch_deg": [-45.0, 45.0],
        "roll_deg": [-45.0, 45.0],
        "max_range": 200.0,
    }


def _grids() -> list[dict]:
    slabs = [
        {"name": "ground", "z": [-0.5, 0.5]},
        {"name": "obstacles", "z": [0.5, 2.0]},
    ]
    return [
        {"name": "close", "x": [-20.0, 20.0], "y": [-10.0, 10.0], "cell_size": 0.2,
         "slabs": [dict(s) for s in slabs]},
        {"name": "far", "x": [0.0, 160.0], "y": [-40.0, 40.0], "cell_size": 1.0,
         "slabs": [dict(s) for s in slabs]},
    ]


def _rois() -> list[dict]:
    out = []
    for slab in ("ground", "obstacles"):
        out.append({"name": f"close range (20 m) {slab}", "grid": "close", "slab": slab,
                    "x": [0.0, 20.0], "y": [-5.0, 5.0]})
        out.append({"name": f"medium range (80 m) {slab}", "grid": "far", "slab": slab,
                    "x": [0.0, 80.0], "y": [-20.0, 20.0]})
        out.append({"name": f"long range (160 m) {slab}", "grid": "far", "slab": slab,
                    "x": [0.0, 160.0], "y": [-40.0, 40.0]})
    return out


def _roof_lidar(channels: int) -> dict:
    return {
        "kind": "lidar",
        "id": f"roof-{channels}",
        "channels": channels,
        "points_per_channel": 512,
        "elevation_deg": [-15.0, 2.0],
        "azimuth_deg": [0.0, 360.0],
        "max_range": 200.0,
        "mount": {"position": [0.45, 0.0, 1.60], "ypr_deg": [0.0, 0.0, 0.0]},
    }


def _grille_lidar() -> dict:
    spec = _roof_lidar(128)
    spec["id"] = "grille-128"
    spec["mount"] = {"position": [2.30, 0.0, 0.55], "ypr_deg": [0.0, 0.0, 0.0]}
    return spec


def _base(name: str, sensors: list[dict], extra_notes: list[str] | None = None) -> dict:
    return {
        "name": name,
        "seed": 0,
        "timesteps": 256,
        "r_thresh": 0.4,
        "aggregation": "mean",
        "scene": _scene(),
        "sensors": sensors,
        "reference": _reference(),
        "grids": _grids(),
        "rois": _rois(),
        "notes": _COMMON_NOTES + (extra_notes or []),
    }


def _camera(sensor_id: str, position, yaw_deg: float) -> dict:
    return {
        "kind": "camera",
        "id": sensor_id,
        "width": 320,
        "height": 240,
        "fx": 160.0,
        "fy": 160.0,
        "cx": 159.5,
        "cy": 119.5,
        "distortion": {"kind": "none"},
        "max_range": 120.0,
        "mount": {"position": list(position), "ypr_deg": [yaw_deg, 0.0, 0.0]},
    }


def build_camera_trio() -> dict:
    sensors = [
        _camera("front", (0.55, 0.0, 1.60), 0.0),
        _camera("mirror-left", (0.90, 1.05, 1.05), 165.0),
        _camera("mirror-right", (0.90, -1.05, 1.05), -165.0),
    ]
    return _base(
        "camera-trio", sensors,
        ["camera FoV is 90 degrees horizontal (intrinsics not prescribed; assumption)"],
    )


def build_roof_vs_grille() -> dict[str, dict]:
    return {
        "roof-vs-grille-grille": _base("roof-vs-grille-grille", [_grille_lidar()]),
        "roof-vs-grille-roof": _base("roof-vs-grille-roof", [_roof_lidar(128)]),
    }


def build_lidar_resolution() -> dict[str, dict]:
    return {
        f"lidar-resolution-{c}": _base(f"lidar-resolution-{c}", [_roof_lidar(c)])
        for c in (32, 64, 128)
    }


def all_preset_configs() -> dict[str, dict]:
    out = {"camera-trio": build_camera_trio()}
    out.update(build_roof_vs_grille())
    out.update(build_lidar_resolution())
    return out


PRESET_BUNDLES: dict[str, list[str]] = {
    "camera-trio": ["camera-trio"],
    "roof-vs-grille": ["roof-vs-grille-grille", "roof-vs-grille-roof"],
    "lidar-resolution": [
        "lidar-resolution-32", "lidar-resolution-64", "lidar-resolution-128",
    ],
}


def preset_dir() -> Path:
    return Path(str(resources.files("blindspot") / "presets"))


def resolve_configs(arg: str) -> list[Path]:
    """Map a CLI config argument to one or more config files.

    Accepts a path to a config file, a bundle name (runs every member), or a
    single preset name.
    """
    p = Path(arg)
    if p.is_file():
        return [p]
    members = PRESET_BUNDLES.get(arg, [arg] if arg in all_preset_configs() else None)
    if members is None:
        raise ConfigError(
            f"{arg!r} is neither a config file nor a preset "
            f"(presets: {', '.join(sorted(PRESET_BUNDLES))})"
        )
    paths = []
    for m in members:
        path = preset_dir() / f"{m}.json"
        if not path.is_file():
            raise FileNotFoundError(f"bundled preset file missing: {path}")
        paths.append(path)
    return paths
