import json
import subprocess
import sys

import numpy as np
import pytest

from cli_helpers import golden_runs, output_bytes, recipe_args
from ocean_recipes.cli import dispatch
from ocean_recipes.fixtures import synthetic_dyes
from ocean_recipes.library import serialize_additive
from ocean_recipes.render import read_pnm
from ocean_recipes.spectral import read_spectrum_csv


def test_fit(workspace, capsys):
    out = workspace["dir"] / "recipe.json"
    assert dispatch(["fit", *recipe_args(workspace), "--out", str(out), "--table"]) == 0
    recipe = json.loads(out.read_text())
    assert [a["name"] for a in recipe["additives"]] == ["blue", "green", "brown", "mgoh2"]
    assert recipe["depth_scale"] == 5 and recipe["reference_label"] == "synthetic-3C"
    assert recipe["warnings"][0].startswith("spectra resampled to 400-700 nm at 2 nm")
    assert recipe["predicted_spectrum_csv_path"] == "predicted.csv"
    assert recipe["scatterer_mass_g"] == recipe["additives"][3]["mass_g"] > 0
    assert recipe["scatter_weight"] > 0
    predicted = read_spectrum_csv(workspace["dir"] / "predicted.csv")
    assert predicted.kind == "attenuation" and len(predicted) == 151
    manifest = json.loads((workspace["dir"] / "recipe.json.manifest.json").read_text())
    assert manifest["command"] == "fit" and len(manifest["input_checksums"]) == 7
    table = capsys.readouterr().out
    assert "Ingredient" in table and "mgoh2" in table and "ml (standard)" in table


def test_fit_subtract_pure_water(workspace):
    out = workspace["dir"] / "r.json"
    code = dispatch(["fit", *recipe_args(workspace), "--pure-water-mode", "subtract_pure_water",
                     "--pure-water", str(workspace["pure_water"]), "--out", str(out)])
    assert code == 0
    assert json.loads(out.read_text())["pure_water_mode"] == "subtract_pure_water"


def test_fit_subtract_needs_pure_water(workspace, capsys):
    code = dispatch(["fit", *recipe_args(workspace), "--pure-water-mode", "subtract_pure_water",
                     "--out", str(workspace["dir"] / "r.json")])
    assert code == 1
    assert json.loads(capsys.readouterr().err)["error"] == "ValueError"


def test_collinear_dyes_exit_one(workspace, capsys):
    twin = synthetic_dyes()[0]
    from dataclasses import replace

    twin = replace(twin, name="twin", base_spectrum=twin.base_spectrum.scaled(2.0))
    sidecar = serialize_additive(twin, workspace["dir"])
    args = recipe_args(workspace)
    args[args.index("--additives") + 1] = str(sidecar)
    args.insert(args.index("--additives") + 1, str(workspace["additives"][0]))
    code = dispatch(["fit", *args, "--out", str(workspace["dir"] / "r.json")])
    assert code == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "RankError"


def test_missing_flag_exit_two(workspace, capsys):
    assert dispatch(["fit", "--label", "synthetic-3C"]) == 2
    assert dispatch(["fit", *recipe_args(workspace), "--out", "x.json", "--grid", "400,700"]) == 2
    assert dispatch([]) == 2


def test_unknown_label_exit_one(workspace, capsys):
    code = dispatch(["fit", *recipe_args(workspace, label="nope"), "--out", str(workspace["dir"] / "r.json")])
    assert code == 1
    assert json.loads(capsys.readouterr().err)["error"] == "ParseError"


def test_grid_override(workspace):
    out = workspace["dir"] / "r.json"
    assert dispatch(["fit", *recipe_args(workspace), "--grid", "400,700,5", "--out", str(out)]) == 0
    recipe = json.loads(out.read_text())
    assert recipe["grid"] == {"lo_nm": 400, "hi_nm": 700, "step_nm": 5}
    assert "at 5 nm" in recipe["warnings"][0]
    assert len(read_spectrum_csv(workspace["dir"] / "predicted.csv")) == 61


def test_uncertainty_corner(workspace):
    out = workspace["dir"] / "u.json"
    assert dispatch(["uncertainty", *recipe_args(workspace), "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["method"] == "corner" and report["sample_count"] == 64
    for entry in report["additives"].values():
        assert entry["min"] <= entry["nominal"] <= entry["max"]


def test_uncertainty_tolerance_file(workspace):
    tol = workspace["dir"] / "tol.json"
    tol.write_text(json.dumps({"cup_ml": 0, "scale_repro_g": 0, "scale_linearity_g": 0, "ruler_mm": 0,
                               "precipitation_loss_frac": 0,
                               "spectrophotometer": [[0, 0.5, 0], [0.5, 1, 0], [1, 2, 0]]}))
    out = workspace["dir"] / "u.json"
    assert dispatch(["uncertainty", *recipe_args(workspace), "--tolerances", str(tol), "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert all(e["variation_percent"] == 0 for e in report["additives"].values())
    tol.write_text('{"cup": 1}')
    assert dispatch(["uncertainty", *recipe_args(workspace), "--tolerances", str(tol), "--out", str(out)]) == 1


def test_decompose(workspace):
    out = workspace["dir"] / "dec"
    assert dispatch(["decompose", "--attenuation", str(workspace["attenuation"]),
                     "--scatter-shape", str(workspace["shape"]), "--out-dir", str(out)]) == 0
    a = read_spectrum_csv(out / "absorption.csv")
    b = read_spectrum_csv(out / "scattering.csv")
    c = read_spectrum_csv(workspace["attenuation"])
    diag = json.loads((out / "decomposition.json").read_text())
    assert set(diag) >= {"anchor_wavelength_nm", "scatter_scale", "clamped_points"}
    kept = c.values >= b.values
    assert np.count_nonzero(~kept) == diag["clamped_points"]
    np.testing.assert_allclose(a.values[kept] + b.values[kept], c.values[kept], rtol=1e-8)


def test_normalize(workspace, capsys):
    out = workspace["dir"] / "n.csv"
    src = workspace["additives"][0].with_suffix(".csv")
    assert dispatch(["normalize", "--spectrum", str(src), "--out", str(out)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["scale_factor"] == pytest.approx(synthetic_dyes()[0].standard_scale, rel=1e-8)
    from ocean_recipes.spectral import integrate

    assert integrate(read_spectrum_csv(out)) == pytest.approx(1000.0, rel=1e-8)


def test_render(workspace):
    out = workspace["dir"] / "view.ppm"
    png = workspace["dir"] / "view.png"
    args = ["render", "--image", str(workspace["image"]), "--distance", str(workspace["distance"]),
            "--spectrum", str(workspace["attenuation"]), "--out", str(out), "--bands", "600-700,500-600,400-500",
            "--ambient", "1,1,1"]
    if _has_pillow():
        args += ["--png", str(png)]
    assert dispatch(args) == 0
    arr, _ = read_pnm(out)
    original, _ = read_pnm(workspace["image"])
    # the top row sits at distance zero
    np.testing.assert_array_equal(arr[0], original[0])
    assert np.all(arr[-1].astype(int) <= original[-1].astype(int))
    coeffs = json.loads((workspace["dir"] / "view.coefficients.json").read_text())
    assert coeffs["image_shape"] == [64, 64, 3]
    r, g, b = coeffs["coefficients_per_m"].values()
    assert r > g  # red is absorbed hardest in the fixture water


def test_render_shape_mismatch(workspace, capsys):
    np.savetxt(workspace["distance"], np.ones((3, 3)), delimiter=",")
    code = dispatch(["render", "--image", str(workspace["image"]), "--distance", str(workspace["distance"]),
                     "--spectrum", str(workspace["attenuation"]), "--out", str(workspace["dir"] / "v.ppm")])
    assert code == 1
    assert json.loads(capsys.readouterr().err)["error"] == "DimensionError"


def test_validate(workspace, capsys):
    args = ["validate", "--additives", *map(str, workspace["additives"]), "--reference", str(workspace["manifest"])]
    assert dispatch(args) == 0
    assert json.loads(capsys.readouterr().out)["ok"]
    broken = workspace["dir"] / "lib" / "synthetic-IB.scattering.csv"
    broken.write_text(broken.read_text() + "\n")
    assert dispatch(args) == 1


def test_outputs_byte_identical(workspace):
    assert set(golden_runs(workspace, workspace["dir"] / "a").values()) == {0}
    assert set(golden_runs(workspace, workspace["dir"] / "b").values()) == {0}
    first, second = output_bytes(workspace["dir"] / "a"), output_bytes(workspace["dir"] / "b")
    assert first.keys() == second.keys() and len(first) >= 10
    for name in first:
        assert first[name] == second[name], name


def test_outputs_use_lf_and_nine_digits(workspace):
    golden_runs(workspace, workspace["dir"] / "a")
    text = (workspace["dir"] / "a" / "predicted.csv").read_bytes()
    assert b"\r" not in text
    for line in text.decode().splitlines()[1:]:
        value = line.split(",")[1]
        assert len(value.replace(".", "").replace("-", "").lstrip("0")) <= 9


def test_help_documents_formats(capsys):
    assert dispatch(["fit", "--help"]) == 0
    text = capsys.readouterr().out
    for needle in ("wavelength_nm,value,kind,unit", "checksums", "standard_scale", "spectrophotometer"):
        assert needle in text


def test_console_script_entry_point(workspace):
    result = subprocess.run([sys.executable, "-m", "ocean_recipes.cli", "--version"], capture_output=True, text=True)
    assert result.returncode == 0 and "0.1.0" in result.stdout


def _has_pillow():
    try:
        import PIL  # noqa: F401
    except ImportError:
        return False
    return True
