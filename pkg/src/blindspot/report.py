"""Coverage reports: per-ROI summary tables plus run metadata, and the
comparison tooling for putting two sensor setups side by side."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ContractViolation
from .metrics import RoiSummary


@dataclass(frozen=True)
class RasterRef:
    grid: str
    slab: str
    kind: str
    csv: str
    ppm: str | None


@dataclass(frozen=True)
class CoverageReport:
    """Everything needed to interpret or re-run a finished scenario run.

    Metadata (config hash, seed, timesteps) is sufficient to reproduce the
    run; clamp counts disclose how many probe radii were capped at the grid
    diagonal before averaging.
    """

    name: str
    config_hash: str
    seed: int
    timesteps: int
    r_thresh: float
    aggregation: str
    package_version: str
    sensor_count: int
    clamp_counts: dict[str, int]
    rois: tuple[RoiSummary, ...]
    rasters: tuple[RasterRef, ...]
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        names = [r.name for r in self.rois]
        if len(set(names)) != len(names):
            raise ContractViolation("duplicate ROI names in report")

    def roi(self, name: str) -> RoiSummary:
        for r in self.rois:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "timesteps": self.timesteps,
            "r_thresh": self.r_thresh,
            "aggregation": self.aggregation,
            "package_version": self.package_version,
            "sensor_count": self.sensor_count,
            "clamp_counts": dict(sorted(self.clamp_counts.items())),
            "notes": list(self.notes),
            "rois": [
                {
                    "name": r.name,
                    "mean_blind_spot_radius_m": r.mean_blind_spot_radius,
                    "mean_detection_probability": r.mean_detection_probability,
                    "nonempty_cell_count": r.nonempty_cell_count,
                }
                for r in self.rois
            ],
            "rasters": [
                {"grid": x.grid, "slab": x.slab, "kind": x.kind, "csv": x.csv, "ppm": x.ppm}
                for x in self.rasters
            ],
        }


def save_report(report: CoverageReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")


def load_report(path: str | Path) -> CoverageReport:
    data = json.loads(Path(path).read_text())
    return CoverageReport(
        name=data["name"],
        config_hash=data["config_hash"],
        seed=data["seed"],
        timesteps=data["timesteps"],
        r_thresh=data["r_thresh"],
        aggregation=data["aggregation"],
        package_version=data["package_version"],
        sensor_count=data["sensor_count"],
        clamp_counts=dict(data["clamp_counts"]),
        rois=tuple(
            RoiSummary(
                r["name"],
                r["mean_blind_spot_radius_m"],
                r["mean_detection_probability"],
                r["nonempty_cell_count"],
            )
            for r in data["rois"]
        ),
        rasters=tuple(
            RasterRef(x["grid"], x["slab"], x["kind"], x["csv"], x["ppm"])
            for x in data["rasters"]
        ),
        notes=tuple(data.get("notes", [])),
    )


@dataclass(frozen=True)
class RoiDelta:
    """Per-ROI difference row; deltas are B minus A. Winners: higher
    probability wins, lower radius wins; None when either side has no data."""

    name: str
    probability_a: float | None
    probability_b: float | None
    probability_delta: float | None
    probability_winner: str | None
    radius_a: float | None
    radius_b: float | None
    radius_delta: float | None
    radius_winner: str | None


@dataclass(frozen=True)
class ReportComparison:
    label_a: str
    label_b: str
    rows: tuple[RoiDelta, ...]

    def to_text(self) -> str:
        """Two-column table, winner values marked with '*'."""
        def cell(v, winner, side):
            if v is None:
                return "no data"
            mark = "*" if winner == side else " "
            return f"{v:10.4f}{mark}"

        w = max([len(r.name) for r in self.rows] + [len("region of interest")])
        lines = [
            f"{'region of interest':<{w}}  {self.label_a:>11} {self.label_b:>11}",
            "-" * (w + 26),
            "mean detection probability (higher wins)",
        ]
        for r in self.rows:
            lines.append(
                f"{r.name:<{w}}  {cell(r.probability_a, r.probability_winner, 'A')} "
                f"{cell(r.probability_b, r.probability_winner, 'B')}"
            )
        lines.append("mean blind spot radius [m] (lower wins)")
        for r in self.rows:
            lines.append(
                f"{r.name:<{w}}  {cell(r.radius_a, r.radius_winner, 'A')} "
                f"{cell(r.radius_b, r.radius_winner, 'B')}"
            )
        return "\n".join(lines)


def _winner(a: float | None, b: float | None, higher_wins: bool) -> str | None:
    if a is None or b is None or a == b:
        return None
    return ("A" if a > b else "B") if higher_wins else ("A" if a < b else "B")


def compare_reports(a: CoverageReport, b: CoverageReport) -> ReportComparison:
    """Per-ROI deltas between two runs that share the same ROI set."""
    names_a = [r.name for r in a.rois]
    names_b = [r.name for r in b.rois]
    if names_a != names_b:
        raise ContractViolation(
            f"reports have different ROI sets: {names_a} vs {names_b}"
        )
    rows = []
    for ra in a.rois:
        rb = b.roi(ra.name)
        pa, pb = ra.mean_detection_probability, rb.mean_detection_probability
        xa, xb = ra.mean_blind_spot_radius, rb.mean_blind_spot_radius
        rows.append(
            RoiDelta(
                name=ra.name,
                probability_a=pa,
                probability_b=pb,
                probability_delta=None if (pa is None or pb is None) else pb - pa,
                probability_winner=_winner(pa, pb, higher_wins=True),
                radius_a=xa,
                radius_b=xb,
                radius_delta=None if (xa is None or xb is None) else xb - xa,
                radius_winner=_winner(xa, xb, higher_wins=False),
            )
        )
    return ReportComparison(a.name, b.name, tuple(rows))
