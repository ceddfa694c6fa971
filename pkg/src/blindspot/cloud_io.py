"""Point-cloud file ingestion and emission.

Two formats:

* text XYZ: one ``x y z`` triple per line, meters, ASCII;
* binary BSPC: magic ``BSPC``, little-endian uint32 count, then
  count x 3 float64 coordinates -- lossless for round trips.

Format is auto-detected from the leading magic bytes unless forced.
Ingested clouds enter the identical metric path as simulated ones.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import CloudFormatError
from .geometry import Frame, PointCloud

MAGIC = b"BSPC"


def read_xyz(path: str | Path, frame: Frame, timestep: int = 0) -> PointCloud:
    """Parse a text XYZ file; blank lines and '#' comments are allowed."""
    rows: list[tuple[float, float, float]] = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise CloudFormatError(
                    f"expected 3 coordinates, got {len(parts)}", line=lineno
                )
            try:
                rows.append((float(parts[0]), float(parts[1]), float(parts[2])))
            except ValueError:
                raise CloudFormatError(f"bad number in {line!r}", line=lineno) from None
    pts = np.array(rows, dtype=np.float64).reshape(-1, 3)
    return PointCloud(pts, frame, timestep)


def write_xyz(cloud: PointCloud, path: str | Path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for x, y, z in cloud.points:
            fh.write(f"{float(x)!r} {float(y)!r} {float(z)!r}\n")


def read_bspc(path: str | Path, frame: Frame, timestep: int = 0) -> PointCloud:
    """Parse the binary format; errors name the byte offset."""
    blob = Path(path).read_bytes()
    if len(blob) < 4 or blob[:4] != MAGIC:
        raise CloudFormatError("missing BSPC magic", offset=0)
    if len(blob) < 8:
        raise CloudFormatError("truncated header", offset=len(blob))
    (count,) = struct.unpack_from("<I", blob, 4)
    expected = 8 + count * 24
    if len(blob) != expected:
        raise CloudFormatError(
            f"expected {expected} bytes for {count} points, file has {len(blob)}",
            offset=min(len(blob), expected),
        )
    pts = np.frombuffer(blob, dtype="<f8", count=count * 3, offset=8).reshape(-1, 3)
    return PointCloud(pts.astype(np.float64, copy=True), frame, timestep)


def write_bspc(cloud: PointCloud, path: str | Path) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(cloud)))
        fh.write(np.ascontiguousarray(cloud.points, dtype="<f8").tobytes())


def ingest_cloud(
    path: str | Path, frame: Frame, timestep: int = 0, fmt: str | None = None
) -> PointCloud:
    """Read either supported format; ``fmt`` forces "xyz" or "bspc"."""
    path = Path(path)
    if fmt is None:
        with open(path, "rb") as fh:
            fmt = "bspc" if fh.read(4) == MAGIC else "xyz"
    if fmt == "bspc":
        return read_bspc(path, frame, timestep)
    if fmt == "xyz":
        return read_xyz(path, frame, timestep)
    raise CloudFormatError(f"unknown cloud format {fmt!r}")
