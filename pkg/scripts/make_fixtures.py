"""Regenerate the shipped synthetic fixture files in src/ocean_recipes/data."""

import argparse
from pathlib import Path

from ocean_recipes.fixtures import data_dir, write_fixture_library


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=data_dir())
    args = parser.parse_args()
    written = write_fixture_library(args.out)
    print(f"manifest:   {written['manifest']}")
    print(f"pure water: {written['pure_water']}")
    for path in written["additives"]:
        print(f"additive:   {path}")


if __name__ == "__main__":
    main()
