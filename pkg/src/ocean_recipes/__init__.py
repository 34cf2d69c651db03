"""Optical ocean recipes: additive proportions that give tank water the optics of a reference water."""

__version__ = "0.1.0"

from .decomposition import DecompositionResult, split
from .errors import OceanRecipeError
from .nnls import NnlsSolution, nnls
from .recipe import (
    Additive,
    MeasurementInfo,
    Recipe,
    TankConfig,
    WaterReference,
    compose,
    fit_dyes,
    fit_scatterer,
    plan_dilution,
    scale_target,
)
from .render import BandSet, SceneInput, attenuate, channel_coefficients
from .spectral import (
    CANONICAL_GRID,
    Grid,
    Spectrum,
    from_absorbance,
    integrate,
    lin_combine,
    normalize_standard,
    resample,
)
from .uncertainty import (
    DecayModel,
    RecipeInputs,
    ToleranceSet,
    VariationReport,
    decay_at,
    fit_decay,
    propagate_corners,
    propagate_mc,
)

__all__ = [
    "CANONICAL_GRID", "Additive", "BandSet", "DecayModel", "DecompositionResult", "Grid",
    "MeasurementInfo", "NnlsSolution", "OceanRecipeError", "Recipe", "RecipeInputs", "SceneInput",
    "Spectrum", "TankConfig", "ToleranceSet", "VariationReport", "WaterReference", "attenuate",
    "channel_coefficients", "compose", "decay_at", "fit_decay", "fit_dyes", "fit_scatterer",
    "from_absorbance", "integrate", "lin_combine", "nnls", "normalize_standard", "plan_dilution",
    "propagate_corners", "propagate_mc", "resample", "scale_target", "split",
]
