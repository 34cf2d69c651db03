"""Synthetic spectra standing in for measured data.

Neither the reference waters nor the measured base additives are available
numerically, so these are analytic curves with the right qualitative shape:

* reference absorption rises toward the red (pure water) with a blue CDOM tail
  and chlorophyll bumps; scattering decreases monotonically with wavelength;
* dyes are one- or two-peaked Gaussians (blue absorbs orange-red, green absorbs
  violet and red, brown absorbs blue-green);
* the scatterer is a smooth, nearly linear, decreasing curve.

Everything is deterministic; ``scripts/make_fixtures.py`` writes these to
``ocean_recipes/data``.
"""

from __future__ import annotations

import numpy as np

from .recipe import Additive, MeasurementInfo, WaterReference
from .spectral import CANONICAL_GRID, Grid, Spectrum, normalize_standard

PROVENANCE = "synthetic analytic fixture"


def _gauss(wl, center, width):
    return np.exp(-0.5 * ((wl - center) / width) ** 2)


def pure_water_absorption(wl) -> np.ndarray:
    wl = np.asarray(wl, dtype=float)
    return 0.008 + 0.6 / (1.0 + np.exp(-(wl - 600.0) / 18.0))


# label -> (CDOM at 440 nm, chlorophyll amplitude, scattering at 550 nm), all 1/m
JERLOV_PARAMS = {
    "synthetic-IB": (0.01, 0.01, 0.05),
    "synthetic-II": (0.04, 0.03, 0.12),
    "synthetic-3C": (0.25, 0.12, 0.6),
}


def reference_absorption(wl, cdom440: float, chl: float) -> np.ndarray:
    wl = np.asarray(wl, dtype=float)
    cdom = cdom440 * np.exp(-0.015 * (wl - 440.0))
    pigment = chl * (_gauss(wl, 440.0, 25.0) + 0.5 * _gauss(wl, 675.0, 12.0))
    return pure_water_absorption(wl) + cdom + pigment


def reference_scattering(wl, b550: float) -> np.ndarray:
    wl = np.asarray(wl, dtype=float)
    return b550 * (550.0 / wl)


def synthetic_reference(label: str = "synthetic-IB", grid: Grid = CANONICAL_GRID) -> WaterReference:
    cdom, chl, b550 = JERLOV_PARAMS[label]
    wl = grid.points
    return WaterReference(
        label,
        Spectrum(wl, reference_absorption(wl, cdom, chl), "absorption", PROVENANCE),
        Spectrum(wl, reference_scattering(wl, b550), "scattering", PROVENANCE),
    )


def pure_water(grid: Grid = CANONICAL_GRID) -> Spectrum:
    wl = grid.points
    return Spectrum(wl, pure_water_absorption(wl), "absorption", "synthetic pure water")


# name -> list of (peak 1/m, center nm, width nm), plus a small flat floor
DYE_SHAPES = {
    "blue": [(8000.0, 638.0, 28.0), (1100.0, 410.0, 20.0)],
    "green": [(6000.0, 405.0, 22.0), (2800.0, 630.0, 22.0)],
    "brown": [(5000.0, 470.0, 45.0)],
}
DYE_FLOOR = 2.0
DYE_DILUTION = (100.0, 2000.0)  # ml of base made up to ml total for measurement

SCATTERER_NAME = "mgoh2"
SCATTERER_MASS_G = 2.0
SCATTERER_VOLUME_L = 1.0


def dye_spectrum(name: str, grid: Grid = CANONICAL_GRID) -> Spectrum:
    wl = grid.points
    values = np.full(wl.shape, DYE_FLOOR)
    for peak, center, width in DYE_SHAPES[name]:
        values = values + peak * _gauss(wl, center, width)
    return Spectrum(wl, values, "attenuation", f"synthetic dye {name}")


def scatterer_spectrum(grid: Grid = CANONICAL_GRID) -> Spectrum:
    wl = grid.points
    values = 160.0 - 0.12 * (wl - 550.0) + 2e-5 * (wl - 550.0) ** 2
    return Spectrum(wl, values, "attenuation", "synthetic Mg(OH)2 suspension")


def synthetic_dyes(grid: Grid = CANONICAL_GRID) -> list[Additive]:
    dyes = []
    for name in DYE_SHAPES:
        spectrum = dye_spectrum(name, grid)
        _, scale = normalize_standard(spectrum)
        dyes.append(
            Additive(
                name=name,
                role="dye",
                base_spectrum=spectrum,
                base_volume_l=0.25,
                standard_scale=scale,
                measurement=MeasurementInfo(10.0, *DYE_DILUTION),
            )
        )
    return dyes


def synthetic_scatterer(grid: Grid = CANONICAL_GRID) -> Additive:
    spectrum = scatterer_spectrum(grid)
    _, scale = normalize_standard(spectrum)
    return Additive(
        name=SCATTERER_NAME,
        role="scatterer",
        base_spectrum=spectrum,
        base_volume_l=SCATTERER_VOLUME_L,
        base_mass_g=SCATTERER_MASS_G,
        standard_scale=scale,
        measurement=MeasurementInfo(10.0),
    )


def mixture_reference(
    dye_weights,
    scatter_spectral_weight: float,
    dyes: list[Additive] | None = None,
    scatterer: Additive | None = None,
    label: str = "synthetic-mixture",
) -> WaterReference:
    """A reference that is exactly reproducible by the given additives."""
    dyes = synthetic_dyes() if dyes is None else dyes
    scatterer = synthetic_scatterer() if scatterer is None else scatterer
    wl = dyes[0].base_spectrum.wavelengths_nm
    absorption = sum(w * d.base_spectrum.values for w, d in zip(dye_weights, dyes))
    scattering = scatter_spectral_weight * scatterer.base_spectrum.values
    return WaterReference(
        label,
        Spectrum(wl, absorption, "absorption", "constructed mixture"),
        Spectrum(wl, scattering, "scattering", "constructed mixture"),
    )


def write_fixture_library(directory) -> dict:
    """Write references, manifest, pure water and additive files to ``directory``.

    Returns the written paths keyed by role.
    """
    from pathlib import Path

    from .library import serialize_additive, write_manifest
    from .spectral import write_spectrum_csv

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for label in JERLOV_PARAMS:
        ref = synthetic_reference(label)
        a_name, b_name = f"{label}.absorption.csv", f"{label}.scattering.csv"
        write_spectrum_csv(ref.absorption, directory / a_name)
        write_spectrum_csv(ref.scattering, directory / b_name)
        entries.append({"label": label, "absorption_csv": a_name, "scattering_csv": b_name,
                        "provenance": PROVENANCE})
    write_manifest(directory / "manifest.json", entries)
    write_spectrum_csv(pure_water(), directory / "pure_water.csv")
    additives = [serialize_additive(d, directory) for d in synthetic_dyes()]
    additives.append(serialize_additive(synthetic_scatterer(), directory))
    return {
        "manifest": directory / "manifest.json",
        "pure_water": directory / "pure_water.csv",
        "additives": additives,
    }


def data_dir():
    """Directory of the shipped fixture files."""
    from pathlib import Path

    return Path(__file__).parent / "data"
