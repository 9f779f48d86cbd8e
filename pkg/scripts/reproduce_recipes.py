"""Run every JSON recipe in docs/recipes and write its CSV next to it.

Usage: python scripts/reproduce_recipes.py [name ...]
"""

import os
import sys
from pathlib import Path

from srlab.cli import main

RECIPES = Path(__file__).resolve().parent.parent / "docs" / "recipes"


def run(names):
    os.chdir(RECIPES)
    configs = sorted(RECIPES.glob("*.json"))
    if names:
        configs = [c for c in configs if c.stem in names]
    status = 0
    for cfg in configs:
        rc = main(["--config", cfg.name])
        if rc:
            print(f"{cfg.stem}: exit {rc}", file=sys.stderr)
            status = rc
    return status


if __name__ == "__main__":
    sys.exit(run(sys.argv[1:]))
