"""Recipes and corner-method variation for every shipped reference over a range of depth scales.

Prints one ingredient table per (reference, k) and a variation summary; optionally
writes the whole sweep as JSON.
"""

import argparse
from pathlib import Path

from ocean_recipes.fixtures import data_dir
from ocean_recipes.fmt import dumps_json, write_text
from ocean_recipes.library import load_manifest, load_reference, validate_additive
from ocean_recipes.recipe import TankConfig, compose
from ocean_recipes.report import format_table
from ocean_recipes.uncertainty import RecipeInputs, ToleranceSet, propagate_corners


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--volume-l", type=float, default=1600.0)
    parser.add_argument("--depth-scales", type=float, nargs="+", default=[1.0, 5.0, 10.0])
    parser.add_argument("--workers", type=int, default=4)
    parser.add_argument("--json", type=Path, help="write the sweep here")
    args = parser.parse_args()

    lib = data_dir()
    manifest = load_manifest(lib / "manifest.json")
    additives = [validate_additive(p) for p in sorted(lib.glob("*.json")) if p.name != "manifest.json"]
    dyes = [a for a in additives if a.role == "dye"]
    scatterer = next(a for a in additives if a.role == "scatterer")
    tol = ToleranceSet()

    sweep = []
    for label in manifest.labels:
        ref = load_reference(manifest, label)
        for k in args.depth_scales:
            tank = TankConfig(args.volume_l, depth_scale=k)
            recipe = compose(ref, dyes, scatterer, tank)
            report = propagate_corners(RecipeInputs(ref, dyes, scatterer, tank), tol, workers=args.workers)
            print(format_table(recipe), end="")
            print("variation: " + ", ".join(
                f"{n} {e['variation_percent']:.2f}%" if e["variation_percent"] is not None else f"{n} n/a"
                for n, e in report.additives.items()
            ))
            print(f"residual {recipe.residual_norm:.3g} 1/m, warnings: {len(recipe.warnings)}\n")
            sweep.append({"label": label, "depth_scale": k, "amounts": recipe.amounts_by_name(),
                          "residual_norm": recipe.residual_norm, "variation": report.to_dict()["additives"]})
    if args.json:
        write_text(args.json, dumps_json(sweep))


if __name__ == "__main__":
    main()
