"""Recipe JSON report and the human-readable table."""

from __future__ import annotations

from .recipe import Recipe
from .spectral import CANONICAL_GRID, Grid

GRID_NOTE = (
    "spectra resampled to {lo:g}-{hi:g} nm at {step:g} nm; the grid is an implementation "
    "choice, the measurement resolution of the source data is not known"
)


def recipe_report(recipe: Recipe, grid: Grid = CANONICAL_GRID, predicted_csv_path: str | None = None) -> dict:
    additives = []
    for a in recipe.amounts:
        entry = {"name": a.name, "role": a.role, "weight": a.weight}
        if a.role == "scatterer":
            entry["mass_g"] = a.mass_g
        else:
            entry["volume_ml"] = a.volume_ml
            entry["standard_volume_ml"] = a.standard_volume_ml
        additives.append(entry)
    scatterer = next((a for a in recipe.amounts if a.role == "scatterer"), None)
    warnings = [GRID_NOTE.format(lo=grid.lo_nm, hi=grid.hi_nm, step=grid.step_nm)]
    warnings.extend(recipe.warnings)
    return {
        "reference_label": recipe.reference_label,
        "depth_scale": recipe.tank.depth_scale,
        "tank_volume_l": recipe.tank.volume_l,
        "pure_water_mode": recipe.tank.pure_water_mode,
        "grid": grid.as_dict(),
        "additives": additives,
        "scatter_weight": recipe.scatter_weight,
        "scatter_spectral_weight": recipe.scatter_spectral_weight,
        "scatterer_mass_g": None if scatterer is None else scatterer.mass_g,
        "residual_norm": recipe.residual_norm,
        "kkt_violation": recipe.diagnostics["kkt_violation"],
        "diagnostics": dict(recipe.diagnostics),
        "predicted_spectrum_csv_path": predicted_csv_path,
        "warnings": warnings,
    }


def format_table(recipe: Recipe) -> str:
    """Ingredient / amount / unit table; dye amounts in standard-solution ml."""
    rows = []
    for a in recipe.amounts:
        if a.role == "scatterer":
            rows.append((a.name, f"{a.mass_g:.1f}", "g"))
        else:
            rows.append((a.name, f"{a.standard_volume_ml:.0f}", "ml (standard)"))
    title = f"{recipe.reference_label} (depth x{recipe.tank.depth_scale:g}, {recipe.tank.volume_l:g} l)"
    width = max([len("Ingredient")] + [len(r[0]) for r in rows])
    num = max([len("Amount")] + [len(r[1]) for r in rows])
    lines = [title, f"{'Ingredient':<{width}}  {'Amount':>{num}}  Unit"]
    lines.append("-" * len(lines[1]))
    lines.extend(f"{n:<{width}}  {v:>{num}}  {u}" for n, v, u in rows)
    return "\n".join(lines) + "\n"
