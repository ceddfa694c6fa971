#!/usr/bin/env python3
"""Run the three bundled sensor-rig studies end to end.

1. camera-trio       blind-spot inspection of a three-camera rig
2. roof-vs-grille    same LiDAR at two mounting positions, compared per ROI
3. lidar-resolution  32/64/128-channel sweep at the roof mount

Outputs (rasters, images, reports, comparison tables) land under --out-dir.
"""

import argparse
import sys
from pathlib import Path

from blindspot.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="out/experiments")
    parser.add_argument("--timesteps", type=int, default=None,
                        help="override the preset timestep count (default 256)")
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args()

    for bundle in ("camera-trio", "roof-vs-grille", "lidar-resolution"):
        out = Path(args.out_dir) / bundle
        argv = ["run", bundle, "--out-dir", str(out)]
        for flag, value in (("--timesteps", args.timesteps),
                            ("--threads", args.threads), ("--seed", args.seed)):
            if value is not None:
                argv += [flag, str(value)]
        print(f"=== {bundle} ===")
        code = cli_main(argv)
        if code != 0:
            return code
        print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
