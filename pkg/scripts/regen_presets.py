#!/usr/bin/env python3
"""Regenerate the bundled preset JSON files from the builders in
blindspot.presets. Run after editing any builder."""

import json
from pathlib import Path

from blindspot.config import ScenarioConfig
from blindspot.presets import all_preset_configs

OUT = Path(__file__).resolve().parents[1] / "src" / "blindspot" / "presets"


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for name, data in all_preset_configs().items():
        cfg = ScenarioConfig.parse(data)  # validate before writing
        path = OUT / f"{name}.json"
        path.write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
