"""Scenario configuration: a JSON key/value tree parsed into typed dataclasses.

The schema is strict: unknown keys, wrong types, and out-of-range values all
raise ConfigError naming the offending key path. ``to_dict`` emits the
canonical form (all defaults materialized), and parse(to_dict(cfg)) == cfg.

See README.md for the documented schema and a full example.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

_REFERENCE_DEFAULTS = dict(
    channels=1024,
    points_per_channel=1024,
    elevation_deg=(-90.0, 0.0),
    azimuth_span_deg=360.0,
    shell_margin_up=0.5,
    shell_margin_horizontal=0.5,
    yaw_deg=(-180.0, 180.0),
    pitch_deg=(-45.0, 45.0),
    roll_deg=(-45.0, 45.0),
    max_range=200.0,
)


class _Node:
    """Cursor into the raw dict that tracks its key path for error messages."""

    def __init__(self, data: dict, path: str = ""):
        if not isinstance(data, dict):
            raise ConfigError("expected an object", path or "<root>")
        self.data = data
        self.path = path
        self.seen: set[str] = set()

    def _sub(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def get(self, key: str, kind, default=..., required_msg: str | None = None):
        self.seen.add(key)
        if key not in self.data:
            if default is ...:
                raise ConfigError(required_msg or "required key missing", self._sub(key))
            return default
        value = self.data[key]
        return _coerce(value, kind, self._sub(key))

    def child(self, key: str, default=...) -> "_Node | None":
        self.seen.add(key)
        if key not in self.data:
            if default is ...:
                raise ConfigError("required section missing", self._sub(key))
            return None
        if not isinstance(self.data[key], dict):
            raise ConfigError("expected an object", self._sub(key))
        return _Node(self.data[key], self._sub(key))

    def children(self, key: str, required: bool = True) -> list["_Node"]:
        self.seen.add(key)
        if key not in self.data:
            if required:
                raise ConfigError("required list missing", self._sub(key))
            return []
        items = self.data[key]
        if not isinstance(items, list):
            raise ConfigError("expected a list", self._sub(key))
        return [_Node(item, f"{self._sub(key)}[{i}]") for i, item in enumerate(items)]

    def finish(self):
        unknown = set(self.data) - self.seen
        if unknown:
            raise ConfigError(f"unknown key(s): {sorted(unknown)}", self.path or "<root>")


def _coerce(value, kind, path: str):
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", path)
        v = float(value)
        if not math.isfinite(v):
            raise ConfigError("number must be finite", path)
        return v
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", path)
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"expected a boolean, got {value!r}", path)
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", path)
        return value
    if kind == "pair":
        if not (isinstance(value, list) and len(value) == 2):
            raise ConfigError("expected a [min, max] pair", path)
        return (_coerce(value[0], float, path), _coerce(value[1], float, path))
    if kind == "vec3":
        if not (isinstance(value, list) and len(value) == 3):
            raise ConfigError("expected an [x, y, z] triple", path)
        return tuple(_coerce(v, float, path) for v in value)
    raise AssertionError(kind)


@dataclass(frozen=True)
class MountConfig:
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    ypr_deg: tuple[float, float, float] = (0.0, 0.0, 0.0)

    @staticmethod
    def parse(node: _Node | None) -> "MountConfig":
        if node is None:
            return MountConfig()
        pos = node.get("position", "vec3", (0.0, 0.0, 0.0))
        ypr = node.get("ypr_deg", "vec3", (0.0, 0.0, 0.0))
        node.finish()
        return MountConfig(pos, ypr)

    def to_dict(self) -> dict:
        return {"position": list(self.position), "ypr_deg": list(self.ypr_deg)}


@dataclass(frozen=True)
class ShapeConfig:
    kind: str  # "box" | "ground" | "hatchback" | "mesh"
    size: tuple[float, float, float] | None = None
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    extent: float | None = None
    path: str | None = None

    @staticmethod
    def parse(node: _Node) -> "ShapeConfig":
        kind = node.get("kind", str)
        if kind == "box":
            shape = ShapeConfig(
                "box",
                size=node.get("size", "vec3"),
                center=node.get("center", "vec3", (0.0, 0.0, 0.0)),
            )
        elif kind == "ground":
            shape = ShapeConfig("ground", extent=node.get("extent", float))
        elif kind == "hatchback":
            shape = ShapeConfig("hatchback")
        elif kind == "mesh":
            shape = ShapeConfig("mesh", path=node.get("path", str))
        else:
            raise ConfigError(f"unknown shape kind {kind!r}", node._sub("kind"))
        node.finish()
        return shape

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.kind == "box":
            d["size"] = list(self.size)
            d["center"] = list(self.center)
        elif self.kind == "ground":
            d["extent"] = self.extent
        elif self.kind == "mesh":
            d["path"] = self.path
        return d


@dataclass(frozen=True)
class KeyframeConfig:
    t: int
    position: tuple[float, float, float]
    yaw_deg: float = 0.0


@dataclass(frozen=True)
class TrajectoryConfig:
    kind: str  # "static" | "linear" | "keyframes"
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    yaw_deg: float = 0.0
    step: tuple[float, float, float] = (0.0, 0.0, 0.0)
    keyframes: tuple[KeyframeConfig, ...] = ()

    @staticmethod
    def parse(node: _Node) -> "TrajectoryConfig":
        kind = node.get("kind", str, "static")
        if kind == "static":
            out = TrajectoryConfig(
                "static",
                position=node.get("position", "vec3", (0.0, 0.0, 0.0)),
                yaw_deg=node.get("yaw_deg", float, 0.0),
            )
        elif kind == "linear":
            out = TrajectoryConfig(
                "linear",
                position=node.get("position", "vec3"),
                step=node.get("step", "vec3"),
                yaw_deg=node.get("yaw_deg", float, 0.0),
            )
        elif kind == "keyframes":
            frames = []
            for kf in node.children("keyframes"):
                frames.append(
                    KeyframeConfig(
                        t=kf.get("t", int),
                        position=kf.get("position", "vec3"),
                        yaw_deg=kf.get("yaw_deg", float, 0.0),
                    )
                )
                kf.finish()
            if not frames:
                raise ConfigError("need at least one keyframe", node._sub("keyframes"))
            out = TrajectoryConfig("keyframes", keyframes=tuple(frames))
        else:
            raise ConfigError(f"unknown trajectory kind {kind!r}", node._sub("kind"))
        node.finish()
        return out

    def to_dict(self) -> dict:
        if self.kind == "static":
            return {"kind": "static", "position": list(self.position), "yaw_deg": self.yaw_deg}
        if self.kind == "linear":
            return {
                "kind": "linear",
                "position": list(self.position),
                "step": list(self.step),
                "yaw_deg": self.yaw_deg,
            }
        return {
            "kind": "keyframes",
            "keyframes": [
                {"t": k.t, "position": list(k.position), "yaw_deg": k.yaw_deg}
                for k in self.keyframes
            ],
        }


@dataclass(frozen=True)
class ActorConfig:
    actor_id: str
    shape: ShapeConfig
    trajectory: TrajectoryConfig
    is_ego: bool = False

    @staticmethod
    def parse(node: _Node) -> "ActorConfig":
        out = ActorConfig(
            actor_id=node.get("id", str),
            shape=ShapeConfig.parse(node.child("shape")),
            trajectory=TrajectoryConfig.parse(node.child("trajectory")),
            is_ego=node.get("is_ego", bool, False),
        )
        node.finish()
        return out

    def to_dict(self) -> dict:
        return {
            "id": self.actor_id,
            "shape": self.shape.to_dict(),
            "trajectory": self.trajectory.to_dict(),
            "is_ego": self.is_ego,
        }


@dataclass(frozen=True)
class SensorConfig:
    kind: str  # "lidar" | "camera"
    sensor_id: str
    mount: MountConfig
    max_range: float
    # lidar
    channels: int = 0
    points_per_channel: int = 0
    elevation_deg: tuple[float, float] = (0.0, 0.0)
    azimuth_deg: tuple[float, float] = (0.0, 360.0)
    # camera
    width: int = 0
    height: int = 0
    fx: float = 0.0
    fy: float = 0.0
    cx: float = 0.0
    cy: float = 0.0
    distortion_kind: str = "none"
    distortion_k: tuple[float, float, float] = (0.0, 0.0, 0.0)

    @staticmethod
    def parse(node: _Node) -> "SensorConfig":
        kind = node.get("kind", str)
        sensor_id = node.get("id", str)
        mount = MountConfig.parse(node.child("mount", None))
        if kind == "lidar":
            out = SensorConfig(
                kind="lidar",
                sensor_id=sensor_id,
                mount=mount,
                max_range=node.get("max_range", float),
                channels=node.get("channels", int),
                points_per_channel=node.get("points_per_channel", int),
                elevation_deg=node.get("elevation_deg", "pair"),
                azimuth_deg=node.get("azimuth_deg", "pair", (0.0, 360.0)),
            )
        elif kind == "camera":
            dist = node.child("distortion", None)
            dist_kind, dist_k = "none", (0.0, 0.0, 0.0)
            if dist is not None:
                dist_kind = dist.get("kind", str, "none")
                if dist_kind == "radial":
                    dist.seen.add("k")
                    raw = dist.data.get("k")
                    if not (isinstance(raw, list) and 1 <= len(raw) <= 3):
                        raise ConfigError("expected 1-3 coefficients", dist._sub("k"))
                    kvals = [_coerce(v, float, dist._sub("k")) for v in raw]
                    dist_k = tuple(kvals + [0.0] * (3 - len(kvals)))
                elif dist_kind != "none":
                    raise ConfigError(
                        f"unknown distortion kind {dist_kind!r}", dist._sub("kind")
                    )
                dist.finish()
            out = SensorConfig(
                kind="camera",
                sensor_id=sensor_id,
                mount=mount,
                max_range=node.get("max_range", float),
                width=node.get("width", int),
                height=node.get("height", int),
                fx=node.get("fx", float),
                fy=node.get("fy", float),
                cx=node.get("cx", float),
                cy=node.get("cy", float),
                distortion_kind=dist_kind,
                distortion_k=dist_k,
            )
        else:
            raise ConfigError(f"unknown sensor kind {kind!r}", node._sub("kind"))
        node.finish()
        return out

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind, "id": self.sensor_id, "mount": self.mount.to_dict(),
                   "max_range": self.max_range}
        if self.kind == "lidar":
            d.update(
                channels=self.channels,
                points_per_channel=self.points_per_channel,
                elevation_deg=list(self.elevation_deg),
                azimuth_deg=list(self.azimuth_deg),
            )
        else:
            d.update(
                width=self.width, height=self.height,
                fx=self.fx, fy=self.fy, cx=self.cx, cy=self.cy,
                distortion={"kind": self.distortion_kind}
                if self.distortion_kind == "none"
                else {"kind": "radial", "k": list(self.distortion_k)},
            )
        return d


@dataclass(frozen=True)
class ReferenceConfig:
    mode: str = "sampled"  # "sampled" | "files"
    channels: int = 1024
    points_per_channel: int = 1024
    elevation_deg: tuple[float, float] = (-90.0, 0.0)
    azimuth_span_deg: float = 360.0
    shell_margin_up: float = 0.5
    shell_margin_horizontal: float = 0.5
    yaw_deg: tuple[float, float] = (-180.0, 180.0)
    pitch_deg: tuple[float, float] = (-45.0, 45.0)
    roll_deg: tuple[float, float] = (-45.0, 45.0)
    max_range: float = 200.0
    pattern: str = ""  # "files" mode: path template with {t}

    @staticmethod
    def parse(node: _Node | None) -> "ReferenceConfig":
        if node is None:
            return ReferenceConfig()
        mode = node.get("mode", str, "sampled")
        if mode == "files":
            out = ReferenceConfig(mode="files", pattern=node.get("pattern", str))
            node.finish()
            return out
        if mode != "sampled":
            raise ConfigError(f"unknown reference mode {mode!r}", node._sub("mode"))
        d = _REFERENCE_DEFAULTS
        out = ReferenceConfig(
            mode="sampled",
            channels=node.get("channels", int, d["channels"]),
            points_per_channel=node.get("points_per_channel", int, d["points_per_channel"]),
            elevation_deg=node.get("elevation_deg", "pair", d["elevation_deg"]),
            azimuth_span_deg=node.get("azimuth_span_deg", float, d["azimuth_span_deg"]),
            shell_margin_up=node.get("shell_margin_up", float, d["shell_margin_up"]),
            shell_margin_horizontal=node.get(
                "shell_margin_horizontal", float, d["shell_margin_horizontal"]
            ),
            yaw_deg=node.get("yaw_deg", "pair", d["yaw_deg"]),
            pitch_deg=node.get("pitch_deg", "pair", d["pitch_deg"]),
            roll_deg=node.get("roll_deg", "pair", d["roll_deg"]),
            max_range=node.get("max_range", float, d["max_range"]),
        )
        node.finish()
        return out

    def to_dict(self) -> dict:
        if self.mode == "files":
            return {"mode": "files", "pattern": self.pattern}
        return {
            "mode": "sampled",
            "channels": self.channels,
            "points_per_channel": self.points_per_channel,
            "elevation_deg": list(self.elevation_deg),
            "azimuth_span_deg": self.azimuth_span_deg,
            "shell_margin_up": self.shell_margin_up,
            "shell_margin_horizontal": self.shell_margin_horizontal,
            "yaw_deg": list(self.yaw_deg),
            "pitch_deg": list(self.pitch_deg),
            "roll_deg": list(self.roll_deg),
            "max_range": self.max_range,
        }


@dataclass(frozen=True)
class SlabConfig:
    name: str
    z: tuple[float, float]


@dataclass(frozen=True)
class GridConfig:
    name: str
    x: tuple[float, float]
    y: tuple[float, float]
    cell_size: float
    slabs: tuple[SlabConfig, ...]

    @staticmethod
    def parse(node: _Node) -> "GridConfig":
        slabs = []
        for sn in node.children("slabs"):
            slabs.append(SlabConfig(sn.get("name", str), sn.get("z", "pair")))
            sn.finish()
        if not slabs:
            raise ConfigError("grid needs at least one slab", node._sub("slabs"))
        out = GridConfig(
            name=node.get("name", str),
            x=node.get("x", "pair"),
            y=node.get("y", "pair"),
            cell_size=node.get("cell_size", float),
            slabs=tuple(slabs),
        )
        node.finish()
        return out

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "x": list(self.x),
            "y": list(self.y),
            "cell_size": self.cell_size,
            "slabs": [{"name": s.name, "z": list(s.z)} for s in self.slabs],
        }


@dataclass(frozen=True)
class RoiConfig:
    name: str
    grid: str
    slab: str
    x: tuple[float, float]
    y: tuple[float, float]

    @staticmethod
    def parse(node: _Node) -> "RoiConfig":
        out = RoiConfig(
            name=node.get("name", str),
            grid=node.get("grid", str),
            slab=node.get("slab", str),
            x=node.get("x", "pair"),
            y=node.get("y", "pair"),
        )
        node.finish()
        return out

    def to_dict(self) -> dict:
        return {
            "name": self.name, "grid": self.grid, "slab": self.slab,
            "x": list(self.x), "y": list(self.y),
        }


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    seed: int
    timesteps: int
    r_thresh: float
    aggregation: str
    actors: tuple[ActorConfig, ...]
    sensors: tuple[SensorConfig, ...]
    reference: ReferenceConfig
    grids: tuple[GridConfig, ...]
    rois: tuple[RoiConfig, ...]
    notes: tuple[str, ...] = ()
    base_dir: Path = field(default=Path("."), compare=False)

    @staticmethod
    def parse(data: dict, base_dir: str | Path = ".") -> "ScenarioConfig":
        root = _Node(data)
        scene = root.child("scene")
        actors = tuple(ActorConfig.parse(a) for a in scene.children("actors"))
        scene.finish()
        root.seen.add("notes")
        raw_notes = root.data.get("notes", [])
        if not isinstance(raw_notes, list):
            raise ConfigError("expected a list of strings", "notes")
        notes = tuple(_coerce(n, str, f"notes[{i}]") for i, n in enumerate(raw_notes))
        cfg = ScenarioConfig(
            name=root.get("name", str),
            seed=root.get("seed", int, 0),
            timesteps=root.get("timesteps", int),
            r_thresh=root.get("r_thresh", float, 0.4),
            aggregation=root.get("aggregation", str, "mean"),
            actors=actors,
            sensors=tuple(SensorConfig.parse(s) for s in root.children("sensors")),
            reference=ReferenceConfig.parse(root.child("reference", None)),
            grids=tuple(GridConfig.parse(g) for g in root.children("grids")),
            rois=tuple(RoiConfig.parse(r) for r in root.children("rois", required=False)),
            notes=notes,
            base_dir=Path(base_dir),
        )
        root.finish()
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.timesteps < 1:
            raise ConfigError("must be >= 1", "timesteps")
        if not self.r_thresh > 0:
            raise ConfigError("must be positive", "r_thresh")
        if self.aggregation not in ("mean", "max"):
            raise ConfigError("must be 'mean' or 'max'", "aggregation")
        for s in self.sensors:
            where = f"sensors[{s.sensor_id}]"
            if not s.max_range > 0:
                raise ConfigError("max_range must be positive", where)
            if s.kind == "lidar":
                if s.channels < 1 or s.points_per_channel < 1:
                    raise ConfigError("channels/points_per_channel must be >= 1", where)
                if s.elevation_deg[0] > s.elevation_deg[1]:
                    raise ConfigError("elevation range is reversed", where)
            else:
                if s.width < 1 or s.height < 1:
                    raise ConfigError("image dimensions must be >= 1", where)
                if not (s.fx > 0 and s.fy > 0):
                    raise ConfigError("focal lengths must be positive", where)
        for g in self.grids:
            where = f"grids[{g.name}]"
            if not g.cell_size > 0:
                raise ConfigError("cell_size must be positive", where)
            if g.x[0] >= g.x[1] or g.y[0] >= g.y[1]:
                raise ConfigError("grid extents must be ordered", where)
            for s in g.slabs:
                if s.z[0] >= s.z[1]:
                    raise ConfigError(f"slab {s.name!r} z range is reversed", where)
        for r in self.rois:
            if r.x[0] >= r.x[1] or r.y[0] >= r.y[1]:
                raise ConfigError("roi extents must be ordered", f"rois[{r.name}]")
        if sum(a.is_ego for a in self.actors) != 1:
            raise ConfigError("exactly one actor must have is_ego = true", "scene.actors")
        ids = [a.actor_id for a in self.actors]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate actor ids", "scene.actors")
        sids = [s.sensor_id for s in self.sensors]
        if len(set(sids)) != len(sids):
            raise ConfigError("duplicate sensor ids", "sensors")
        gnames = [g.name for g in self.grids]
        if len(set(gnames)) != len(gnames):
            raise ConfigError("duplicate grid names", "grids")
        rnames = [r.name for r in self.rois]
        if len(set(rnames)) != len(rnames):
            raise ConfigError("duplicate roi names", "rois")
        by_name = {g.name: g for g in self.grids}
        for r in self.rois:
            if r.grid not in by_name:
                raise ConfigError(f"unknown grid {r.grid!r}", f"rois[{r.name}]")
            if r.slab not in {s.name for s in by_name[r.grid].slabs}:
                raise ConfigError(f"unknown slab {r.slab!r}", f"rois[{r.name}]")
        for a in self.actors:
            if a.shape.kind == "mesh":
                path = self.base_dir / a.shape.path
                if not path.is_file():
                    raise FileNotFoundError(f"mesh file not found: {path}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "seed": self.seed,
            "timesteps": self.timesteps,
            "r_thresh": self.r_thresh,
            "aggregation": self.aggregation,
            "scene": {"actors": [a.to_dict() for a in self.actors]},
            "sensors": [s.to_dict() for s in self.sensors],
            "reference": self.reference.to_dict(),
            "grids": [g.to_dict() for g in self.grids],
            "rois": [r.to_dict() for r in self.rois],
            "notes": list(self.notes),
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def load_config(path: str | Path) -> ScenarioConfig:
    """Parse and validate a scenario file; errors carry the key path."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError:
        raise
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return ScenarioConfig.parse(data, base_dir=path.parent)


def save_config(cfg: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=False) + "\n")
