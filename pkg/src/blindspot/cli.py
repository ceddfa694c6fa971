"""Command-line interface.

Verbs:
  run <config|preset>   execute a scenario (or every member of a preset
                        bundle) and emit rasters + report
  compare <A> <B>       per-ROI difference table between two report files
  render <raster.csv>   re-render an emitted raster CSV as a PPM image

Exit codes: 0 success, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ScenarioConfig, load_config
from .errors import CloudFormatError, ConfigError, ContractViolation, ScenarioError
from .pipeline import run_scenario
from .presets import resolve_configs
from .raster_io import read_raster_csv, write_raster_ppm
from .report import compare_reports, load_report

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def _cmd_run(args) -> int:
    paths = resolve_configs(args.config)
    out_dir = Path(args.out_dir)
    reports = []
    for path in paths:
        cfg = load_config(path)
        overrides = {
            key: value
            for key, value in (("seed", args.seed), ("timesteps", args.timesteps),
                               ("r_thresh", args.r_thresh))
            if value is not None
        }
        if overrides:
            cfg = ScenarioConfig.parse({**cfg.to_dict(), **overrides}, cfg.base_dir)
        result = run_scenario(cfg, out_dir=out_dir, threads=args.threads)
        reports.append(result.report)
        print(
            f"{cfg.name}: {cfg.timesteps} timesteps in {result.seconds:.1f} s "
            f"({result.timesteps_per_second:.2f}/s), report: "
            f"{out_dir / (cfg.name + '_report.json')}"
        )
        for roi in result.report.rois:
            r = roi.mean_blind_spot_radius
            p = roi.mean_detection_probability
            r_s = "no data" if r is None else f"r={r:.3f} m"
            p_s = "no data" if p is None else f"p={p:.3f}"
            print(f"  {roi.name}: {r_s} {p_s} ({roi.nonempty_cell_count} cells)")
    if len(reports) == 2:
        print()
        print(compare_reports(reports[0], reports[1]).to_text())
    return EXIT_OK


def _cmd_compare(args) -> int:
    a = load_report(args.report_a)
    b = load_report(args.report_b)
    print(compare_reports(a, b).to_text())
    return EXIT_OK


def _cmd_render(args) -> int:
    raster = read_raster_csv(args.raster)
    out = Path(args.out) if args.out else Path(args.raster).with_suffix(".ppm")
    write_raster_ppm(raster, out)
    print(f"wrote {out}")
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blindspot",
        description="Sensor-rig blind-spot and coverage estimation",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    run_p = sub.add_parser("run", help="run a scenario config or preset bundle")
    run_p.add_argument("config", help="config file path, preset name, or bundle name")
    run_p.add_argument("--seed", type=int, default=None, help="override the config seed")
    run_p.add_argument("--timesteps", type=int, default=None, help="override timestep count")
    run_p.add_argument("--threads", type=int, default=None, help="worker thread count")
    run_p.add_argument("--out-dir", default="out", help="output directory (default: out)")
    run_p.add_argument("--r-thresh", type=float, default=None,
                       help="override the detection radius threshold [m]")
    run_p.set_defaults(fn=_cmd_run)

    cmp_p = sub.add_parser("compare", help="compare two report JSON files")
    cmp_p.add_argument("report_a")
    cmp_p.add_argument("report_b")
    cmp_p.set_defaults(fn=_cmd_compare)

    render_p = sub.add_parser("render", help="render an emitted raster CSV to PPM")
    render_p.add_argument("raster")
    render_p.add_argument("--out", default=None, help="output image path")
    render_p.set_defaults(fn=_cmd_render)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ScenarioError, ContractViolation) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, CloudFormatError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
