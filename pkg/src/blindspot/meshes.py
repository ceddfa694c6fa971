"""Triangle meshes: container, built-in primitives, and a minimal OBJ-style reader."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractViolation, ScenarioError
from .geometry import as_points

MIN_TRIANGLE_AREA = 1e-12  # m^2; anything smaller is a degenerate sliver


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Indexed triangle set in a local frame.

    ``vertices`` is (V, 3) float64 meters, ``triangles`` (T, 3) int64 vertex
    indices. Degenerate triangles (area < 1e-12 m^2) are rejected.
    """

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        verts = as_points(self.vertices)
        tris = np.asarray(self.triangles, dtype=np.int64)
        if tris.size == 0:
            tris = tris.reshape(0, 3)
        if tris.ndim != 2 or tris.shape[1] != 3:
            raise ContractViolation(f"triangles must be (T, 3), got {tris.shape}")
        if tris.size and (tris.min() < 0 or tris.max() >= verts.shape[0]):
            raise ContractViolation("triangle index out of vertex range")
        if tris.size:
            a = verts[tris[:, 0]]
            cross = np.cross(verts[tris[:, 1]] - a, verts[tris[:, 2]] - a)
            areas = 0.5 * np.linalg.norm(cross, axis=1)
            if np.any(areas < MIN_TRIANGLE_AREA):
                bad = int(np.argmin(areas))
                raise ContractViolation(
                    f"triangle {bad} is degenerate (area {areas[bad]:.3e} m^2)"
                )
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "triangles", tris)
        self.vertices.setflags(write=False)
        self.triangles.setflags(write=False)

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]


def ground_plane(extent: float) -> TriangleMesh:
    """Two triangles tiling the square [-extent, extent]^2 at z = 0."""
    if extent <= 0:
        raise ContractViolation("ground plane extent must be positive")
    e = float(extent)
    verts = np.array([[-e, -e, 0.0], [e, -e, 0.0], [e, e, 0.0], [-e, e, 0.0]])
    tris = np.array([[0, 1, 2], [0, 2, 3]])
    return TriangleMesh(verts, tris)


def box(size, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Axis-aligned closed box: 8 vertices, 12 triangles, outward winding."""
    sx, sy, sz = (float(s) for s in size)
    if min(sx, sy, sz) <= 0:
        raise ContractViolation("box dimensions must be positive")
    cx, cy, cz = (float(c) for c in center)
    hx, hy, hz = sx / 2, sy / 2, sz / 2
    v = np.array(
        [
            [cx - hx, cy - hy, cz - hz],
            [cx + hx, cy - hy, cz - hz],
            [cx + hx, cy + hy, cz - hz],
            [cx - hx, cy + hy, cz - hz],
            [cx - hx, cy - hy, cz + hz],
            [cx + hx, cy - hy, cz + hz],
            [cx + hx, cy + hy, cz + hz],
            [cx - hx, cy + hy, cz + hz],
        ]
    )
    t = np.array(
        [
            [0, 2, 1], [0, 3, 2],  # bottom (-z)
            [4, 5, 6], [4, 6, 7],  # top (+z)
            [0, 1, 5], [0, 5, 4],  # -y side
            [2, 3, 7], [2, 7, 6],  # +y side
            [1, 2, 6], [1, 6, 5],  # +x side
            [3, 0, 4], [3, 4, 7],  # -x side
        ]
    )
    return TriangleMesh(v, t)


# Tapered two-box stand-in for a hatchback ego vehicle. The lower body spans
# the full footprint; the cabin is shorter and sits rearward so the hood and
# rear deck stay low -- the taper is what drives near-field self-occlusion.
HATCHBACK_BODY = dict(size=(4.5, 1.9, 0.8), center=(0.0, 0.0, 0.4))
HATCHBACK_CABIN = dict(size=(2.4, 1.7, 0.7), center=(-0.65, 0.0, 1.15))


def hatchback() -> TriangleMesh:
    """Built-in ego mesh: 4.5 x 1.9 x 0.8 m body plus a rear-offset cabin box."""
    body = box(**HATCHBACK_BODY)
    cabin = box(**HATCHBACK_CABIN)
    return merge_meshes([body, cabin])


def merge_meshes(meshes: list[TriangleMesh]) -> TriangleMesh:
    verts = []
    tris = []
    offset = 0
    for m in meshes:
        verts.append(m.vertices)
        tris.append(m.triangles + offset)
        offset += m.vertices.shape[0]
    return TriangleMesh(np.vstack(verts), np.vstack(tris))


def load_mesh(path: str | Path) -> TriangleMesh:
    """Read an ASCII triangle mesh with Wavefront-style ``v``/``f`` lines.

    Only triangulated faces are accepted; ``f`` entries may carry ``/``
    suffixes, which are ignored. Indices are 1-based.
    """
    path = Path(path)
    verts: list[list[float]] = []
    tris: list[list[int]] = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "v":
                if len(parts) != 4:
                    raise ScenarioError(f"{path}:{lineno}: vertex line needs 3 coordinates")
                try:
                    verts.append([float(p) for p in parts[1:]])
                except ValueError as exc:
                    raise ScenarioError(f"{path}:{lineno}: bad vertex coordinate") from exc
            elif parts[0] == "f":
                if len(parts) != 4:
                    raise ScenarioError(
                        f"{path}:{lineno}: only triangulated faces are supported"
                    )
                try:
                    idx = [int(p.split("/")[0]) for p in parts[1:]]
                except ValueError as exc:
                    raise ScenarioError(f"{path}:{lineno}: bad face index") from exc
                if any(i < 1 for i in idx):
                    raise ScenarioError(f"{path}:{lineno}: face indices are 1-based")
                tris.append([i - 1 for i in idx])
            # other line kinds (vn, vt, o, g, s, usemtl, ...) are ignored
    try:
        return TriangleMesh(np.array(verts, dtype=np.float64).reshape(-1, 3),
                            np.array(tris, dtype=np.int64).reshape(-1, 3))
    except ContractViolation as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
