"""Command-line entry point: ``ocean-recipes <command> ...``.

Exit codes: 0 success, 1 domain error (JSON on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .decomposition import split
from .errors import OceanRecipeError
from .fmt import dumps_json, write_text
from .library import file_checksum, load_manifest, load_reference, load_spectrum, validate_additive, validate_all
from .recipe import PURE_WATER_MODES, SCATTER_AGGREGATIONS, TankConfig, compose
from .render import (
    BandSet,
    SceneInput,
    attenuate,
    channel_coefficients,
    encode_image,
    load_distance_map,
    load_image,
    save_png,
    write_ppm,
)
from .report import format_table, recipe_report
from .spectral import (
    CANONICAL_GRID,
    DEFAULT_ABSORBANCE_MAX,
    Grid,
    from_absorbance,
    integrate,
    normalize_standard,
    read_spectrum_csv,
    resample,
    write_spectrum_csv,
)
from .uncertainty import RecipeInputs, ToleranceSet, propagate_corners, propagate_mc

FORMATS = """\
file formats
------------
Spectrum CSV:
  header  wavelength_nm,value,kind,unit
  kind    attenuation | absorption | scattering | absorbance
  unit    per_m | per_mm | absorbance   (per_mm values are multiplied by 1000 on ingest)
  one row per wavelength, strictly increasing, within 350-800 nm

Reference manifest JSON:
  {"entries": [{"label": str, "absorption_csv": path, "scattering_csv": path,
                "provenance": str,
                "checksums": {"absorption_csv": "sha256:<hex>", "scattering_csv": "sha256:<hex>"}}]}

Additive sidecar JSON (spectrum_csv relative to the sidecar):
  {"name": str, "role": "dye" | "scatterer", "spectrum_csv": path,
   "base_volume_l": float, "base_mass_g": float (scatterer only),
   "standard_scale": float (optional; computed when absent),
   "measurement": {"cuvette_path_mm": float, "dilution_base_ml": float,
                   "dilution_total_ml": float} (optional)}

Tolerance JSON (all fields optional):
  {"cup_ml": 2.5, "scale_repro_g": 0.02, "scale_linearity_g": 0.03,
   "ruler_mm": 0.5, "precipitation_loss_frac": -0.073,
   "spectrophotometer": [[0, 0.5, 0.002], [0.5, 1.0, 0.004], [1.0, 2.0, 0.008]],
   "tank_footprint_m2": 2.0}

Recipe JSON:
  {"reference_label", "depth_scale", "tank_volume_l", "pure_water_mode", "grid",
   "additives": [{"name", "role", "weight", "volume_ml", "standard_volume_ml" | "mass_g"}],
   "scatter_weight", "scatter_spectral_weight", "scatterer_mass_g", "residual_norm",
   "kkt_violation", "diagnostics",
   "predicted_spectrum_csv_path", "warnings"}

Every output is accompanied by <output>.manifest.json recording the command,
arguments, input checksums, tool version, grid and a timestamp.
"""


def _run_manifest(command: str, args: argparse.Namespace, inputs: list, grid: Grid) -> dict:
    record = {}
    for key, value in sorted(vars(args).items()):
        if key == "func":
            continue
        if isinstance(value, Grid):
            value = value.as_dict()
        elif isinstance(value, BandSet):
            value = value.to_dict()
        elif isinstance(value, list):
            value = [str(v) if isinstance(v, Path) else v for v in value]
        elif isinstance(value, Path):
            value = str(value)
        record[key] = value
    return {
        "command": command,
        "arguments": record,
        "input_checksums": {str(p): file_checksum(p) for p in inputs if p is not None},
        "tool_version": __version__,
        "grid": grid.as_dict(),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def _write_manifest(output: Path, command: str, args, inputs, grid) -> None:
    path = output.with_name(output.name + ".manifest.json")
    write_text(path, dumps_json(_run_manifest(command, args, inputs, grid)))


def _recipe_inputs(args) -> tuple[RecipeInputs, list]:
    grid = args.grid
    additives = [validate_additive(p, grid) for p in args.additives]
    dyes = [a for a in additives if a.role == "dye"]
    scatterers = [a for a in additives if a.role == "scatterer"]
    if len(scatterers) > 1:
        raise ValueError("at most one scatterer is supported")
    pure_water = None
    if args.pure_water is not None:
        pure_water = load_spectrum(args.pure_water, grid, kind="absorption")
    tank = TankConfig(
        volume_l=args.tank_volume_l,
        depth_scale=args.depth_scale,
        pure_water_mode=args.pure_water_mode,
        pure_water_absorption=pure_water,
    )
    manifest = load_manifest(args.reference)
    entry = manifest.entry(args.label)
    reference_files = [manifest.base_dir / entry.absorption_csv, manifest.base_dir / entry.scattering_csv]
    reference = load_reference(manifest, args.label, grid)
    inputs = [args.reference, *reference_files, *args.additives]
    if args.pure_water is not None:
        inputs.append(args.pure_water)
    return RecipeInputs(reference, dyes, scatterers[0] if scatterers else None, tank, args.aggregation), inputs


# -- commands -------------------------------------------------------------------


def cmd_normalize(args) -> int:
    s = read_spectrum_csv(args.spectrum)
    if s.kind == "absorbance":
        s = from_absorbance(s, args.path_mm, args.dilution, args.instrument_max)
    s = resample(s, args.grid)
    before = integrate(s)
    normalized, factor = normalize_standard(s)
    write_spectrum_csv(normalized, args.out)
    summary = {"scale_factor": factor, "integral_before_per_m_nm": before, "output": str(args.out)}
    sys.stdout.write(dumps_json(summary))
    _write_manifest(Path(args.out), "normalize", args, [args.spectrum], args.grid)
    return 0


def cmd_decompose(args) -> int:
    c = resample(read_spectrum_csv(args.attenuation), args.grid)
    shape = resample(read_spectrum_csv(args.scatter_shape), args.grid)
    result = split(c, shape)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_spectrum_csv(result.absorption, out / "absorption.csv")
    write_spectrum_csv(result.scattering, out / "scattering.csv")
    diag = out / "decomposition.json"
    write_text(diag, dumps_json(result.diagnostics()))
    _write_manifest(diag, "decompose", args, [args.attenuation, args.scatter_shape], args.grid)
    return 0


def cmd_fit(args) -> int:
    inputs, files = _recipe_inputs(args)
    recipe = compose(inputs.reference, inputs.dyes, inputs.scatterer, inputs.tank, inputs.aggregation)
    out = Path(args.out)
    predicted = Path(args.predicted) if args.predicted else out.with_name("predicted.csv")
    write_spectrum_csv(recipe.predicted, predicted)
    write_text(out, dumps_json(recipe_report(recipe, args.grid, predicted.name)))
    _write_manifest(out, "fit", args, files, args.grid)
    if args.table:
        sys.stdout.write(format_table(recipe))
    return 0


def cmd_uncertainty(args) -> int:
    inputs, files = _recipe_inputs(args)
    tol = ToleranceSet()
    if args.tolerances is not None:
        with open(args.tolerances, encoding="utf-8") as fh:
            tol = ToleranceSet.from_dict(json.load(fh))
        files.append(args.tolerances)
    if args.method == "corner":
        report = propagate_corners(inputs, tol, workers=args.workers)
    else:
        report = propagate_mc(inputs, tol, args.samples, args.seed, workers=args.workers)
    body = {"reference_label": args.label, "depth_scale": args.depth_scale,
            "tank_volume_l": args.tank_volume_l, **report.to_dict()}
    out = Path(args.out)
    write_text(out, dumps_json(body))
    _write_manifest(out, "uncertainty", args, files, args.grid)
    return 0


def cmd_render(args) -> int:
    spectrum = resample(read_spectrum_csv(args.spectrum), args.grid)
    if spectrum.kind != "attenuation":
        raise ValueError(f"render needs an attenuation spectrum, got {spectrum.kind}")
    bands = args.bands
    coeffs = channel_coefficients(spectrum, bands)
    scene = SceneInput(
        load_image(args.image),
        load_distance_map(args.distance, args.distance_scale),
        tuple(args.ambient),
    )
    image8 = encode_image(attenuate(scene, coeffs))
    out = Path(args.out)
    write_ppm(out, image8)
    if args.png:
        save_png(args.png, image8)
    coeff_path = Path(args.coeffs) if args.coeffs else out.with_name(out.stem + ".coefficients.json")
    write_text(coeff_path, dumps_json({
        "bands_nm": bands.to_dict(),
        "coefficients_per_m": dict(zip(("R", "G", "B"), coeffs)),
        "image_shape": list(image8.shape),
    }))
    _write_manifest(out, "render", args, [args.image, args.distance, args.spectrum], args.grid)
    return 0


def cmd_validate(args) -> int:
    report = validate_all(args.additives or (), args.reference, args.grid)
    text = dumps_json(report)
    if args.out:
        write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0 if report["ok"] else 1


# -- parser ---------------------------------------------------------------------


def _floats3(text: str) -> list[float]:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise ValueError("expected three comma-separated values")
    return parts


def _recipe_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--reference", required=True, type=Path, help="reference manifest JSON")
    p.add_argument("--label", required=True, help="reference label in the manifest")
    p.add_argument("--additives", required=True, nargs="+", type=Path, help="additive sidecar JSON files")
    p.add_argument("--tank-volume-l", required=True, type=float, help="tank water volume V in litres")
    p.add_argument("--depth-scale", type=float, default=1.0, help="attenuation scale factor k >= 1")
    p.add_argument("--pure-water-mode", choices=PURE_WATER_MODES, default="zero_baseline")
    p.add_argument("--pure-water", type=Path, help="pure-water absorption CSV (subtract_pure_water mode)")
    p.add_argument("--aggregation", choices=SCATTER_AGGREGATIONS, default="projection",
                   help="how the scatterer weight is aggregated over wavelengths")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ocean-recipes",
        description="Fit additive recipes that reproduce a reference water's optics in a tank.",
        epilog=FORMATS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text, epilog=FORMATS,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--grid", type=Grid.parse, default=CANONICAL_GRID,
                       help="wavelength grid lo,hi,step in nm (default 400,700,2)")
        p.set_defaults(func=func)
        return p

    p = add("normalize", cmd_normalize, "scale a spectrum to the virtual standard solution")
    p.add_argument("--spectrum", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--path-mm", type=float, default=10.0, help="cuvette path for absorbance input")
    p.add_argument("--dilution", type=float, default=1.0, help="dilution factor for absorbance input")
    p.add_argument("--instrument-max", type=float, default=DEFAULT_ABSORBANCE_MAX)

    p = add("decompose", cmd_decompose, "split attenuation into absorption and scattering")
    p.add_argument("--attenuation", required=True, type=Path)
    p.add_argument("--scatter-shape", required=True, type=Path)
    p.add_argument("--out-dir", required=True, type=Path)

    p = add("fit", cmd_fit, "compute a recipe for a reference water")
    _recipe_flags(p)
    p.add_argument("--out", required=True, type=Path, help="recipe JSON")
    p.add_argument("--predicted", type=Path, help="predicted spectrum CSV (default: predicted.csv next to --out)")
    p.add_argument("--table", action="store_true", help="print an ingredient table")

    p = add("uncertainty", cmd_uncertainty, "propagate instrument tolerances through the recipe")
    _recipe_flags(p)
    p.add_argument("--tolerances", type=Path, help="tolerance JSON (defaults to the built-in set)")
    p.add_argument("--method", choices=("corner", "mc"), default="corner")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, type=Path)

    p = add("render", cmd_render, "preview a scene through the water (direct beam only)")
    p.add_argument("--image", required=True, type=Path, help="PPM or PNG, sRGB encoded")
    p.add_argument("--distance", required=True, type=Path, help="distance map: CSV or PGM")
    p.add_argument("--distance-scale", type=float, default=1.0, help="metres per distance-map unit")
    p.add_argument("--spectrum", required=True, type=Path, help="attenuation spectrum CSV")
    p.add_argument("--bands", type=BandSet.parse, default=BandSet(), help="R,G,B bands, e.g. 600-700,500-600,400-500")
    p.add_argument("--ambient", type=_floats3, default=[1.0, 1.0, 1.0], help="per-channel I0 scale r,g,b")
    p.add_argument("--out", required=True, type=Path, help="output PPM")
    p.add_argument("--png", type=Path, help="also write a PNG")
    p.add_argument("--coeffs", type=Path, help="channel coefficient JSON path")

    p = add("validate", cmd_validate, "check additive sidecars and a reference manifest")
    p.add_argument("--additives", nargs="*", type=Path)
    p.add_argument("--reference", type=Path)
    p.add_argument("--out", type=Path)

    return parser


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (OceanRecipeError, ValueError, OSError) as exc:
        kind = exc.kind if isinstance(exc, OceanRecipeError) else type(exc).__name__
        sys.stderr.write(json.dumps({"error": kind, "message": str(exc)}) + "\n")
        return 1


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
