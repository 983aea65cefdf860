#!/usr/bin/env python3
"""Copy the built page scripts into the Python package's static directory."""

from __future__ import annotations

import shutil
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
DIST = ROOT / "frontend" / "dist"
STATIC = ROOT / "src" / "privacyharness" / "static"


def main() -> int:
    if not DIST.is_dir():
        print("frontend/dist missing; run `npm run build` in frontend/ first", file=sys.stderr)
        return 1
    synced = []
    for js in sorted(DIST.glob("*.js")):
        shutil.copy2(js, STATIC / js.name)
        synced.append(js.name)
    for stale in STATIC.glob("*.js"):
        if stale.name not in synced:
            stale.unlink()
            print(f"removed stale {stale.name}")
    print(f"synced {len(synced)} scripts into {STATIC}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
