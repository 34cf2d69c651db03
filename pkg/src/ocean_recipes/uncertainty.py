"""Instrument-tolerance propagation through recipe computation, and scatterer precipitation.

Tolerance sources and where they enter the recipe calculation:

=====================  ==========================================================
cup_ml                 volume of base solution taken for the measurement dilution
scale_repro_g          initial scatterer mass ``m0`` of the base suspension
scale_linearity_g      same, second additive offset
ruler_mm               water depth, hence tank volume (depth x footprint)
precipitation          scatterer base attenuation measured low by up to the loss
spectrophotometer      absorbance offset, magnitude chosen by absorbance band
=====================  ==========================================================
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.optimize import brentq, least_squares

from .errors import FitError, OceanRecipeError, ParseError
from .recipe import Additive, TankConfig, WaterReference, compose

MAX_SOURCES = 8
SOURCES = ("cup", "scale_repro", "scale_linearity", "ruler", "precipitation", "spectrophotometer")

DEFAULT_SPECTRO_BANDS = ((0.0, 0.5, 0.002), (0.5, 1.0, 0.004), (1.0, 2.0, 0.008))


@dataclass(frozen=True)
class ToleranceSet:
    cup_ml: float = 2.5
    scale_repro_g: float = 0.02
    scale_linearity_g: float = 0.03
    ruler_mm: float = 0.5
    # one-sided: the measured scatterer attenuation is low by up to this fraction
    precipitation_loss_frac: float = -0.073
    # (absorbance lo, absorbance hi, +/- tolerance); above the last band its tolerance applies
    spectrophotometer: tuple = DEFAULT_SPECTRO_BANDS
    tank_footprint_m2: float = 2.0

    def __post_init__(self):
        bands = tuple(tuple(float(x) for x in band) for band in self.spectrophotometer)
        object.__setattr__(self, "spectrophotometer", bands)
        for name in ("cup_ml", "scale_repro_g", "scale_linearity_g", "ruler_mm"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not -1 < self.precipitation_loss_frac <= 0:
            raise ValueError("precipitation_loss_frac must lie in (-1, 0]")
        if not self.tank_footprint_m2 > 0:
            raise ValueError("tank footprint must be positive")
        prev_hi = None
        for lo, hi, tol in bands:
            if not lo < hi or tol < 0:
                raise ValueError(f"bad spectrophotometer band {(lo, hi, tol)}")
            if prev_hi is not None and lo != prev_hi:
                raise ValueError("spectrophotometer bands must be contiguous and non-overlapping")
            prev_hi = hi

    @classmethod
    def zero(cls) -> "ToleranceSet":
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, tuple((lo, hi, 0.0) for lo, hi, _ in DEFAULT_SPECTRO_BANDS))

    @classmethod
    def from_dict(cls, data: dict) -> "ToleranceSet":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ParseError(f"unknown tolerance fields {sorted(unknown)}")
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"invalid tolerance set: {exc}") from exc

    def to_dict(self) -> dict:
        d = asdict(self)
        d["spectrophotometer"] = [list(b) for b in self.spectrophotometer]
        return d

    def magnitude(self, source: str) -> float:
        if source == "cup":
            return self.cup_ml
        if source == "scale_repro":
            return self.scale_repro_g
        if source == "scale_linearity":
            return self.scale_linearity_g
        if source == "ruler":
            return self.ruler_mm
        if source == "precipitation":
            return abs(self.precipitation_loss_frac)
        if source == "spectrophotometer":
            return max((tol for _, _, tol in self.spectrophotometer), default=0.0)
        raise KeyError(source)

    def active_sources(self) -> list[str]:
        return [s for s in SOURCES if self.magnitude(s) > 0]

    def absorbance_tolerance(self, absorbance: np.ndarray) -> np.ndarray:
        bands = self.spectrophotometer
        out = np.full(absorbance.shape, bands[-1][2] if bands else 0.0)
        # walk backwards so that a value on a shared edge takes the lower band
        for lo, hi, tol in reversed(bands):
            out[(absorbance >= lo) & (absorbance <= hi)] = tol
        return out


@dataclass(frozen=True)
class Perturbation:
    """One realization of all tolerance sources.

    ``precipitation`` is the fraction of the maximum loss in [0, 1];
    ``spectrophotometer`` scales the band tolerance, in [-1, 1].
    The other fields are offsets in their instrument's unit.
    """

    cup_ml: float = 0.0
    scale_repro_g: float = 0.0
    scale_linearity_g: float = 0.0
    ruler_mm: float = 0.0
    precipitation: float = 0.0
    spectrophotometer: float = 0.0


@dataclass(frozen=True)
class RecipeInputs:
    reference: WaterReference
    dyes: list
    scatterer: Additive | None
    tank: TankConfig
    aggregation: str = "projection"

    def nominal(self):
        return compose(self.reference, self.dyes, self.scatterer, self.tank, self.aggregation)


def _perturb_additive(add: Additive, p: Perturbation, tol: ToleranceSet) -> Additive:
    m = add.measurement
    s = add.base_spectrum
    vals = s.values
    if p.spectrophotometer or p.cup_ml:
        d_nominal = m.dilution_factor
        to_abs = m.cuvette_path_mm / 1000.0 / (math.log(10.0) * d_nominal)
        absorbance = vals * to_abs
        if p.spectrophotometer:
            absorbance = absorbance + p.spectrophotometer * tol.absorbance_tolerance(absorbance)
            absorbance = np.maximum(absorbance, 0.0)
        d_true = d_nominal
        if m.dilution_base_ml is not None and p.cup_ml:
            d_true = m.dilution_total_ml / (m.dilution_base_ml + p.cup_ml)
        vals = absorbance * (math.log(10.0) * d_true / (m.cuvette_path_mm / 1000.0))
    base_mass = add.base_mass_g
    if add.role == "scatterer":
        if p.precipitation:
            vals = vals / (1.0 + tol.precipitation_loss_frac * p.precipitation)
        base_mass = base_mass + p.scale_repro_g + p.scale_linearity_g
        if not base_mass > 0:
            raise ValueError(f"{add.name}: perturbed base mass is not positive")
    if vals is s.values and base_mass == add.base_mass_g:
        return add
    return replace(add, base_spectrum=s.with_values(vals), base_mass_g=base_mass)


def evaluate(inputs: RecipeInputs, p: Perturbation, tol: ToleranceSet) -> dict[str, float]:
    """Recompute the recipe under one perturbation; returns amount (ml or g) per additive."""
    dyes = [_perturb_additive(d, p, tol) for d in inputs.dyes]
    scatterer = None if inputs.scatterer is None else _perturb_additive(inputs.scatterer, p, tol)
    tank = inputs.tank
    if p.ruler_mm:
        volume = tank.volume_l + p.ruler_mm * tol.tank_footprint_m2
        tank = replace(tank, volume_l=volume)
    recipe = compose(inputs.reference, dyes, scatterer, tank, inputs.aggregation)
    return recipe.amounts_by_name()


def _corner_perturbation(signs: dict[str, int], tol: ToleranceSet) -> Perturbation:
    def two_sided(source):
        return signs.get(source, 0) * tol.magnitude(source)

    return Perturbation(
        cup_ml=two_sided("cup"),
        scale_repro_g=two_sided("scale_repro"),
        scale_linearity_g=two_sided("scale_linearity"),
        ruler_mm=two_sided("ruler"),
        precipitation=1.0 if signs.get("precipitation", 0) > 0 else 0.0,
        spectrophotometer=float(signs.get("spectrophotometer", 0)),
    )


def sample_perturbation(tol: ToleranceSet, seed: int, index: int) -> Perturbation:
    """Uniform draw within every tolerance bound; depends only on (seed, index)."""
    rng = np.random.default_rng([seed, index])
    u = rng.uniform(-1.0, 1.0, size=5)
    frac = rng.uniform(0.0, 1.0)
    return Perturbation(
        cup_ml=u[0] * tol.cup_ml,
        scale_repro_g=u[1] * tol.scale_repro_g,
        scale_linearity_g=u[2] * tol.scale_linearity_g,
        ruler_mm=u[3] * tol.ruler_mm,
        precipitation=frac if tol.precipitation_loss_frac else 0.0,
        spectrophotometer=u[4] if tol.magnitude("spectrophotometer") else 0.0,
    )


@dataclass
class VariationReport:
    method: str
    additives: dict
    sample_count: int
    seed: int | None = None
    failures: list = field(default_factory=list)
    accumulated: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)

    def variation(self, name: str) -> float | None:
        return self.additives[name]["variation_percent"]

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "sample_count": self.sample_count,
            "seed": self.seed,
            "additives": self.additives,
            "accumulated": self.accumulated,
            "failures": self.failures,
            "tolerances": self.tolerances,
        }


def variation_percent(nominal: float, lo: float, hi: float) -> float | None:
    if nominal > 0:
        return (hi - lo) / (2.0 * nominal) * 100.0
    return 0.0 if hi == lo else None


def _summarize(nominal: dict, results: list[dict]) -> dict:
    out = {}
    for name, nom in nominal.items():
        vals = np.array([r[name] for r in results] + [nom])
        lo, hi = float(vals.min()), float(vals.max())
        out[name] = {
            "nominal": nom,
            "min": lo,
            "max": hi,
            "variation_percent": variation_percent(nom, lo, hi),
        }
    return out


def _run(fn, items, workers: int | None):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _safe(inputs, tol):
    def call(p):
        try:
            return evaluate(inputs, p, tol)
        except (OceanRecipeError, ValueError) as exc:
            return exc

    return call


def propagate_corners(inputs: RecipeInputs, tol: ToleranceSet, workers: int | None = None) -> VariationReport:
    """Recompute the recipe at every corner of the tolerance hypercube.

    Only sources with a non-zero tolerance span a dimension, so ``k`` active
    sources cost ``2**k`` recipe evaluations. The two accumulated scenarios
    (all sources at their lower / upper bound) are reported separately.
    """
    sources = tol.active_sources()
    if len(sources) > MAX_SOURCES:
        raise ValueError(f"at most {MAX_SOURCES} tolerance sources, got {len(sources)}")
    nominal = evaluate(inputs, Perturbation(), tol)
    corners = [dict(zip(sources, signs)) for signs in itertools.product((-1, 1), repeat=len(sources))]
    perturbations = [_corner_perturbation(c, tol) for c in corners]
    raw = _run(_safe(inputs, tol), perturbations, workers)

    ok, failures = [], []
    for i, (corner, result) in enumerate(zip(corners, raw)):
        if isinstance(result, Exception):
            failures.append({"corner": i, "signs": corner, "error": type(result).__name__, "message": str(result)})
        else:
            ok.append(result)
    if not ok:
        raise next(r for r in raw if isinstance(r, Exception))

    accumulated = {}
    for label, sign in (("lower", -1), ("upper", 1)):
        result = raw[corners.index({s: sign for s in sources})]
        accumulated[label] = None if isinstance(result, Exception) else result

    return VariationReport(
        method="corner",
        additives=_summarize(nominal, ok),
        sample_count=len(corners),
        failures=failures,
        accumulated=accumulated,
        tolerances=tol.to_dict(),
    )


def propagate_mc(
    inputs: RecipeInputs,
    tol: ToleranceSet,
    n_samples: int,
    seed: int,
    workers: int | None = None,
) -> VariationReport:
    """Monte Carlo with uniform draws inside every tolerance bound.

    Sample ``i`` is drawn from a generator seeded by ``(seed, i)`` alone, so the
    report does not depend on how samples are scheduled across workers.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    nominal = evaluate(inputs, Perturbation(), tol)
    perturbations = [sample_perturbation(tol, seed, i) for i in range(n_samples)]
    raw = _run(_safe(inputs, tol), perturbations, workers)

    ok, failures = [], []
    for i, result in enumerate(raw):
        if isinstance(result, Exception):
            failures.append({"sample": i, "error": type(result).__name__, "message": str(result)})
        else:
            ok.append(result)
    if not ok:
        raise next(r for r in raw if isinstance(r, Exception))

    additives = _summarize(nominal, ok)
    for name, entry in additives.items():
        vals = np.array([r[name] for r in ok])
        p_lo, p_mid, p_hi = np.percentile(vals, [2.5, 50.0, 97.5])
        entry.update({"p2_5": float(p_lo), "p50": float(p_mid), "p97_5": float(p_hi)})
        entry["sample_min"] = float(vals.min())
        entry["sample_max"] = float(vals.max())

    return VariationReport(
        method="monte_carlo",
        additives=additives,
        sample_count=n_samples,
        seed=seed,
        failures=failures,
        tolerances=tol.to_dict(),
    )


# -- precipitation ------------------------------------------------------------


@dataclass(frozen=True)
class DecayModel:
    """Relative attenuation ``r(t) = f + (1 - f) exp(-t / tau)`` of a settling suspension.

    ``restore_frac`` is the share of the lost attenuation a shake recovers.
    """

    plateau_frac: float
    time_constant_min: float
    restore_frac: float = 1.0

    def __post_init__(self):
        if not 0 <= self.plateau_frac <= 1:
            raise ValueError("plateau_frac must lie in [0, 1]")
        if not self.time_constant_min > 0:
            raise ValueError("time constant must be positive")
        if not 0 <= self.restore_frac <= 1:
            raise ValueError("restore_frac must lie in [0, 1]")

    def __call__(self, t_min):
        f = self.plateau_frac
        return f + (1.0 - f) * np.exp(-np.asarray(t_min, dtype=float) / self.time_constant_min)

    def age(self, level: float) -> float:
        """Settling time after which a fresh suspension has decayed to ``level``."""
        f = self.plateau_frac
        if level >= 1.0 or f >= 1.0:
            return 0.0
        if level <= f:
            return math.inf
        return -self.time_constant_min * math.log((level - f) / (1.0 - f))


def _two_point(t1, r1, t2, r2) -> tuple[float, float]:
    d1, d2 = 1.0 - r1, 1.0 - r2
    ratio, span = d2 / d1, t2 / t1
    if not 1.0 < ratio < span:
        raise FitError(
            f"losses {d1:.4g} at {t1:g} min and {d2:.4g} at {t2:g} min admit no plateau decay"
        )

    def growth(x):
        return (1.0 - x**span) / (1.0 - x) - ratio

    x = brentq(growth, 1e-300, 1.0 - 1e-15, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=500)
    tau = -t1 / math.log(x)
    plateau = 1.0 - d1 / (1.0 - x)
    if not 0 <= plateau <= 1:
        raise FitError(f"fitted plateau {plateau:.4g} outside [0, 1]")
    return plateau, tau


def fit_decay(samples, restore_frac: float = 1.0) -> DecayModel:
    """Least-squares fit of the plateau decay model to ``(t_min, relative_attenuation)`` samples.

    Two informative samples are interpolated exactly.
    """
    pts = sorted((float(t), float(r)) for t, r in samples)
    if len(pts) < 2:
        raise FitError("need at least two samples")
    t = np.array([p[0] for p in pts])
    r = np.array([p[1] for p in pts])
    if np.any(t < 0) or np.any(r <= 0) or np.any(r > 1):
        raise FitError("samples need t >= 0 and relative attenuation in (0, 1]")
    if np.all(np.diff(r) >= 0):
        raise FitError("samples do not decay")

    informative = t > 0
    ti, ri = t[informative], r[informative]
    if ti.size < 2:
        raise FitError("need at least two samples at t > 0")
    if ti.size == 2:
        plateau, tau = _two_point(ti[0], ri[0], ti[1], ri[1])
        return DecayModel(plateau, tau, restore_frac)

    try:
        f0, tau0 = _two_point(ti[0], ri[0], ti[-1], ri[-1])
    except FitError:
        f0, tau0 = float(np.min(r)), float(np.median(ti))

    def residuals(params):
        f, log_tau = params
        return f + (1.0 - f) * np.exp(-t / math.exp(log_tau)) - r

    fit = least_squares(
        residuals,
        x0=[min(max(f0, 0.0), 1.0), math.log(tau0)],
        bounds=([0.0, -30.0], [1.0, 30.0]),
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
        method="trf",
    )
    if not fit.success:
        raise FitError(f"decay fit failed: {fit.message}")
    jac_rank = np.linalg.matrix_rank(fit.jac)
    if jac_rank < 2:
        raise FitError("decay fit is degenerate (parameters not identifiable)")
    return DecayModel(float(fit.x[0]), float(math.exp(fit.x[1])), restore_frac)


def decay_at(model: DecayModel, t_min: float, shake_events=()) -> float:
    """Relative attenuation at ``t_min`` given shakes at ``shake_events`` (minutes).

    A shake lifts the current level back toward 1 by ``restore_frac`` of the
    deficit; afterwards the suspension decays as a fresh one would from that
    level.
    """
    if t_min < 0:
        raise ValueError("time must be >= 0")
    shakes = [float(s) for s in shake_events]
    if shakes != sorted(shakes):
        raise ValueError("shake events must be sorted")
    age, last = 0.0, 0.0
    for s in shakes:
        if s > t_min:
            break
        current = float(model(age + (s - last)))
        level = current + model.restore_frac * (1.0 - current)
        age, last = model.age(level), s
    return float(model(age + (t_min - last)))
