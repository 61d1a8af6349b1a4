#!/usr/bin/env python3
"""Regenerate the built-in gait machine files under machines/.

The checked-in files are golden fixtures: tests assert they match the
builder's output byte for byte.
"""

from pathlib import Path

from gaitrm.machine import Gait, build_gait_rm, save_rm

MACHINES_DIR = Path(__file__).resolve().parent.parent / "machines"


def main() -> None:
    MACHINES_DIR.mkdir(exist_ok=True)
    for gait in Gait:
        path = MACHINES_DIR / f"{gait.value}.json"
        save_rm(build_gait_rm(gait), path)
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
