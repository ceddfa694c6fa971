"""Raster emission: CSV (exact, re-parseable) and PPM images (bird's-eye view).

CSV layout: a header row naming the metadata fields, one row with their
values, then the cell values row-major (one line per x index, ascending;
columns are y indices ascending). "nan" marks no-data cells. Floats are
written with shortest round-trip repr, so re-parsing reproduces the raster
exactly.

Images are binary PPM: value maps linearly to gray over a range stated in a
header comment; no-data cells render as magenta. Bird's-eye orientation:
vehicle +x (forward) points up, +y (left) points left.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import CloudFormatError
from .metrics import GridSpec, Raster

CSV_HEADER = "x_min,y_min,cell_size,slab,value_kind"
NO_DATA_RGB = (255, 0, 255)


def _fmt(v: float) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    return repr(v)


def write_raster_csv(raster: Raster, path: str | Path) -> None:
    spec = raster.spec
    lines = [CSV_HEADER]
    lines.append(
        f"{float(spec.x_min)!r},{float(spec.y_min)!r},{float(spec.cell_size)!r},"
        f"{raster.slab_name},{raster.kind}"
    )
    for ix in range(spec.nx):
        lines.append(",".join(_fmt(v) for v in raster.values[ix]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_raster_csv(path: str | Path) -> Raster:
    """Re-parse an emitted CSV into the exact in-memory raster."""
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln]
    if not lines or lines[0] != CSV_HEADER:
        raise CloudFormatError(f"not a raster CSV (bad header): {path}", line=1)
    meta = lines[1].split(",")
    if len(meta) != 5:
        raise CloudFormatError("metadata row needs 5 fields", line=2)
    try:
        x_min, y_min, cell = float(meta[0]), float(meta[1]), float(meta[2])
    except ValueError:
        raise CloudFormatError("bad metadata number", line=2) from None
    slab, kind = meta[3], meta[4]
    rows = []
    width = None
    for lineno, ln in enumerate(lines[2:], start=3):
        try:
            row = [float(v) for v in ln.split(",")]
        except ValueError:
            raise CloudFormatError("bad cell value", line=lineno) from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise CloudFormatError("ragged row", line=lineno)
        rows.append(row)
    if not rows:
        raise CloudFormatError("raster has no cells", line=3)
    values = np.array(rows, dtype=np.float64)
    nx, ny = values.shape
    spec = GridSpec(x_min, x_min + nx * cell, y_min, y_min + ny * cell, cell)
    return Raster(spec, slab, kind, values)


def value_range(raster: Raster) -> tuple[float, float]:
    """Display range: probabilities are fixed to [0, 1], radii to [0, max]."""
    if raster.kind == "detection_probability":
        return 0.0, 1.0
    finite = raster.values[np.isfinite(raster.values)]
    hi = float(finite.max()) if finite.size else 1.0
    return 0.0, hi if hi > 0 else 1.0


def write_raster_ppm(
    raster: Raster, path: str | Path, run_metadata: dict | None = None
) -> None:
    lo, hi = value_range(raster)
    # Rows top-to-bottom are +x descending; columns left-to-right are +y descending.
    vals = raster.values[::-1, ::-1]
    h, w = vals.shape
    finite = np.isfinite(vals)
    scaled = np.zeros_like(vals)
    scaled[finite] = np.clip((vals[finite] - lo) / (hi - lo), 0.0, 1.0)
    gray = np.round(scaled * 255).astype(np.uint8)
    rgb = np.repeat(gray[:, :, None], 3, axis=2)
    rgb[~finite] = NO_DATA_RGB
    meta = ""
    if run_metadata:
        pairs = " ".join(f"{k}={v}" for k, v in sorted(run_metadata.items()))
        meta = f"# {pairs}\n"
    header = (
        f"P6\n# {raster.kind} slab={raster.slab_name} value_range=[{float(lo)!r}, {float(hi)!r}]"
        f" no_data=magenta orientation=+x-up-+y-left\n{meta}{w} {h}\n255\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(rgb.tobytes())


def emit_raster(
    raster: Raster,
    csv_path: str | Path,
    ppm_path: str | Path | None = None,
    run_metadata: dict | None = None,
):
    """Write the CSV (and image unless suppressed); returns the paths.

    ``run_metadata`` (config hash, seed, timesteps) is embedded in the image
    header comment; the CSV layout is fixed, so its metadata lives in the
    accompanying report file.
    """
    write_raster_csv(raster, csv_path)
    if ppm_path is not None:
        write_raster_ppm(raster, ppm_path, run_metadata)
    return csv_path, ppm_path
