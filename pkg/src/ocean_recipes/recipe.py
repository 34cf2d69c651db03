"""Recipe computation: how much of each additive turns a tank of clear water into a reference water.

Two steps, never joint:

1. dye weights ``w_i = V_i / V`` from an NNLS fit of the dye base spectra to the
   (depth-scaled) reference absorption;
2. scatterer amount from the attenuation still missing after step 1, projected
   onto the scatterer base spectrum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSpectrumError, GridMismatchError, RankError, RoleError
from .nnls import DEFAULT_TOL, nnls
from .spectral import Spectrum, lin_combine

ROLES = ("dye", "scatterer")
PURE_WATER_MODES = ("zero_baseline", "subtract_pure_water")
SCATTER_AGGREGATIONS = ("projection", "mean_ratio")

DESIGN_COND_LIMIT = 1e8
# additive volume is neglected in V; warn once it stops being small
ADDITIVE_VOLUME_WARN_FRAC = 0.01


@dataclass(frozen=True)
class MeasurementInfo:
    """How a base spectrum was measured; only needed for uncertainty propagation.

    The base solution is diluted by measuring ``dilution_base_ml`` of it with
    the measuring cup and making it up to ``dilution_total_ml``.
    """

    cuvette_path_mm: float = 10.0
    dilution_base_ml: float | None = None
    dilution_total_ml: float | None = None

    def __post_init__(self):
        if not self.cuvette_path_mm > 0:
            raise ValueError("cuvette path must be positive")
        if (self.dilution_base_ml is None) != (self.dilution_total_ml is None):
            raise ValueError("dilution needs both base and total volume")
        if self.dilution_base_ml is not None:
            if not 0 < self.dilution_base_ml <= self.dilution_total_ml:
                raise ValueError("dilution volumes need 0 < base <= total")

    @property
    def dilution_factor(self) -> float:
        if self.dilution_base_ml is None:
            return 1.0
        return self.dilution_total_ml / self.dilution_base_ml


@dataclass(frozen=True)
class Additive:
    name: str
    role: str
    base_spectrum: Spectrum
    base_volume_l: float = 1.0
    base_mass_g: float | None = None
    standard_scale: float = 1.0
    measurement: MeasurementInfo = field(default_factory=MeasurementInfo)

    def __post_init__(self):
        if self.role not in ROLES:
            raise RoleError(f"{self.name}: role must be one of {ROLES}, got {self.role!r}")
        if not self.standard_scale > 0:
            raise ValueError(f"{self.name}: standard_scale must be positive")
        if not self.base_volume_l > 0:
            raise ValueError(f"{self.name}: base_volume_l must be positive")
        if self.role == "scatterer" and not (self.base_mass_g is not None and self.base_mass_g > 0):
            raise RoleError(f"{self.name}: a scatterer needs a positive base_mass_g")


@dataclass(frozen=True)
class WaterReference:
    label: str
    absorption: Spectrum
    scattering: Spectrum

    def __post_init__(self):
        if not self.absorption.same_grid(self.scattering):
            raise GridMismatchError(f"{self.label}: absorption and scattering grids differ")

    @property
    def attenuation(self) -> Spectrum:
        return Spectrum(
            self.absorption.wavelengths_nm,
            self.absorption.values + self.scattering.values,
            "attenuation",
            self.label,
        )


@dataclass(frozen=True)
class TankConfig:
    volume_l: float
    depth_scale: float = 1.0
    pure_water_mode: str = "zero_baseline"
    pure_water_absorption: Spectrum | None = None

    def __post_init__(self):
        if not self.volume_l > 0:
            raise ValueError("tank volume must be positive")
        if not self.depth_scale >= 1:
            raise ValueError("depth_scale must be >= 1")
        if self.pure_water_mode not in PURE_WATER_MODES:
            raise ValueError(f"pure_water_mode must be one of {PURE_WATER_MODES}")
        if self.pure_water_mode == "subtract_pure_water" and self.pure_water_absorption is None:
            raise ValueError("subtract_pure_water mode needs a pure-water absorption spectrum")


@dataclass(frozen=True)
class DyeFit:
    weights: np.ndarray
    fitted: Spectrum
    residual_norm: float
    effective_target: Spectrum
    kkt_violation: float
    condition: float
    clamped_points: int = 0


@dataclass(frozen=True)
class ScatterFit:
    spectral_weight: float
    weight: float
    mass_g: float
    clamped_points: int


@dataclass(frozen=True)
class AdditiveAmount:
    name: str
    role: str
    weight: float
    volume_ml: float | None = None
    standard_volume_ml: float | None = None
    mass_g: float | None = None

    @property
    def amount(self) -> float:
        return self.mass_g if self.role == "scatterer" else self.volume_ml

    @property
    def unit(self) -> str:
        return "g" if self.role == "scatterer" else "ml"


@dataclass(frozen=True)
class Recipe:
    reference_label: str
    tank: TankConfig
    amounts: list
    weights: np.ndarray
    scatter_weight: float
    scatter_spectral_weight: float
    residual_norm: float
    predicted: Spectrum
    target: Spectrum
    target_absorption: Spectrum
    fitted_absorption: Spectrum
    diagnostics: dict
    warnings: list

    @property
    def depth_scale(self) -> float:
        return self.tank.depth_scale

    @property
    def wavelengths_nm(self) -> np.ndarray:
        return self.predicted.wavelengths_nm

    def amount(self, name: str) -> AdditiveAmount:
        for a in self.amounts:
            if a.name == name:
                return a
        raise KeyError(name)

    def amounts_by_name(self) -> dict[str, float]:
        return {a.name: a.amount for a in self.amounts}


def scale_target(ref: WaterReference, k: float) -> WaterReference:
    """Multiply the reference optics by ``k`` to mimic a ``k`` times longer water path."""
    if not k >= 1:
        raise ValueError(f"depth scale must be >= 1, got {k}")
    if k == 1:
        return ref
    return WaterReference(
        f"{ref.label} ×{k:g}",
        ref.absorption.scaled(k),
        ref.scattering.scaled(k),
    )


def _check_same_grid(reference: Spectrum, spectra, what: str) -> None:
    for s in spectra:
        if not reference.same_grid(s):
            raise GridMismatchError(f"{what} is not on the reference grid")


def fit_dyes(
    target_absorption: Spectrum,
    dyes: list[Additive],
    tank: TankConfig,
    tol: float = DEFAULT_TOL,
) -> DyeFit:
    if not dyes:
        raise ValueError("need at least one dye")
    for d in dyes:
        if d.role != "dye":
            raise RoleError(f"{d.name} is a {d.role}, not a dye")
    bases = [d.base_spectrum for d in dyes]
    _check_same_grid(target_absorption, bases, "dye base spectrum")

    A = np.column_stack([s.values for s in bases])
    m, n = A.shape
    if n >= m:
        raise RankError(f"{n} dyes need more than {n} wavelengths, grid has {m}")
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > DESIGN_COND_LIMIT:
        names = ", ".join(d.name for d in dyes)
        raise RankError(f"dye base spectra ({names}) are not linearly independent (condition {cond:.3g})")

    b = target_absorption.values
    clamped = 0
    if tank.pure_water_mode == "subtract_pure_water":
        water = tank.pure_water_absorption
        _check_same_grid(target_absorption, [water], "pure-water absorption")
        diff = b - water.values
        clamped = int(np.count_nonzero(diff < 0))
        b = np.maximum(diff, 0.0)
    effective = Spectrum(target_absorption.wavelengths_nm, b, "absorption", target_absorption.meta)

    sol = nnls(A, b, tol=tol)
    fitted = lin_combine(sol.weights, bases)
    fitted = Spectrum(fitted.wavelengths_nm, fitted.values, "absorption")
    return DyeFit(
        weights=sol.weights,
        fitted=fitted,
        residual_norm=float(np.linalg.norm(b - fitted.values)),
        effective_target=effective,
        kkt_violation=sol.kkt_violation,
        condition=cond,
        clamped_points=clamped,
    )


def fit_scatterer(
    target_attenuation: Spectrum,
    fitted_absorption: Spectrum,
    scatterer: Additive,
    tank: TankConfig,
    aggregation: str = "projection",
) -> ScatterFit:
    """Scatterer amount covering the attenuation gap ``max(0, target - fitted)``.

    ``aggregation="projection"`` projects the gap onto the base spectrum (least
    squares); ``"mean_ratio"`` averages the pointwise ratio gap / base.
    """
    if scatterer.role != "scatterer":
        raise RoleError(f"{scatterer.name} is a {scatterer.role}, not a scatterer")
    bs = scatterer.base_spectrum
    _check_same_grid(target_attenuation, [fitted_absorption, bs], "spectrum")

    diff = target_attenuation.values - fitted_absorption.values
    clamped = int(np.count_nonzero(diff < 0))
    gap = np.maximum(diff, 0.0)

    if aggregation == "projection":
        denom = float(bs.values @ bs.values)
        if denom == 0.0:
            raise DegenerateSpectrumError(f"{scatterer.name}: base spectrum is identically zero")
        spectral_weight = float(bs.values @ gap) / denom
    elif aggregation == "mean_ratio":
        if np.any(bs.values <= 0):
            raise DegenerateSpectrumError(f"{scatterer.name}: base spectrum has non-positive points")
        spectral_weight = float(np.mean(gap / bs.values))
    else:
        raise ValueError(f"aggregation must be one of {SCATTER_AGGREGATIONS}")

    weight = spectral_weight * tank.volume_l / scatterer.base_volume_l
    return ScatterFit(
        spectral_weight=spectral_weight,
        weight=weight,
        mass_g=weight * scatterer.base_mass_g,
        clamped_points=clamped,
    )


def compose(
    ref: WaterReference,
    dyes: list[Additive],
    scatterer: Additive | None,
    tank: TankConfig,
    aggregation: str = "projection",
    tol: float = DEFAULT_TOL,
) -> Recipe:
    scaled = scale_target(ref, tank.depth_scale)
    target = scaled.attenuation
    dye_fit = fit_dyes(scaled.absorption, dyes, tank, tol=tol)

    amounts = []
    for d, w in zip(dyes, dye_fit.weights):
        volume_ml = float(w) * tank.volume_l * 1000.0
        amounts.append(
            AdditiveAmount(
                name=d.name,
                role="dye",
                weight=float(w),
                volume_ml=volume_ml,
                standard_volume_ml=volume_ml * d.standard_scale,
            )
        )

    predicted_values = dye_fit.fitted.values
    scatter_weight = scatter_spectral = 0.0
    clamped = dye_fit.clamped_points
    if scatterer is not None:
        sfit = fit_scatterer(target, dye_fit.fitted, scatterer, tank, aggregation)
        scatter_weight, scatter_spectral = sfit.weight, sfit.spectral_weight
        clamped += sfit.clamped_points
        predicted_values = predicted_values + scatter_spectral * scatterer.base_spectrum.values
        amounts.append(
            AdditiveAmount(
                name=scatterer.name,
                role="scatterer",
                weight=sfit.weight,
                mass_g=sfit.mass_g,
            )
        )

    warnings = []
    dye_volume_l = sum(a.volume_ml for a in amounts if a.role == "dye") / 1000.0
    if dye_volume_l > ADDITIVE_VOLUME_WARN_FRAC * tank.volume_l:
        warnings.append(
            f"additive volume {dye_volume_l:.3g} l exceeds {ADDITIVE_VOLUME_WARN_FRAC:.0%} "
            f"of the tank volume; neglecting it in V is no longer accurate"
        )
    if clamped:
        warnings.append(f"{clamped} negative residual points clamped to zero")

    return Recipe(
        reference_label=ref.label,
        tank=tank,
        amounts=amounts,
        weights=dye_fit.weights,
        scatter_weight=scatter_weight,
        scatter_spectral_weight=scatter_spectral,
        residual_norm=dye_fit.residual_norm,
        predicted=Spectrum(target.wavelengths_nm, predicted_values, "attenuation", "predicted"),
        target=target,
        target_absorption=dye_fit.effective_target,
        fitted_absorption=dye_fit.fitted,
        diagnostics={
            "clamped_points": clamped,
            "condition_estimate": dye_fit.condition,
            "kkt_violation": dye_fit.kkt_violation,
        },
        warnings=warnings,
    )


def plan_dilution(peak_absorbance_estimate: float, instrument_max: float = 3.0) -> int:
    """Smallest integer dilution that brings the peak absorbance within the instrument range."""
    if not peak_absorbance_estimate > 0 or not instrument_max > 0:
        raise ValueError("peak and instrument maximum must be positive")
    d = max(1, math.ceil(peak_absorbance_estimate / instrument_max))
    while peak_absorbance_estimate / d > instrument_max:
        d += 1
    while d > 1 and peak_absorbance_estimate / (d - 1) <= instrument_max:
        d -= 1
    return d
