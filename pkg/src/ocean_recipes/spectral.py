"""Optical spectra on wavelength grids: resampling, integration, standard-solution scaling.

All coefficient spectra are carried internally in 1/m (natural-log). Files may use
1/mm, which is converted by x1000 on ingest. The standard solution integrates to
1 mm^-1 over 400-700 nm, i.e. 1000 m^-1 nm in internal units.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    CoverageError,
    DegenerateSpectrumError,
    GridMismatchError,
    ParseError,
    RangeError,
)
from .fmt import fmt_float

KINDS = ("attenuation", "absorption", "scattering", "absorbance")
COEFFICIENT_KINDS = ("attenuation", "absorption", "scattering")
UNITS = ("per_m", "per_mm", "absorbance")

WAVELENGTH_MIN_NM = 350.0
WAVELENGTH_MAX_NM = 800.0

VISIBLE_LO_NM = 400.0
VISIBLE_HI_NM = 700.0
# 1 mm^-1 integrated over 400-700 nm, expressed in m^-1 nm
STANDARD_INTEGRAL = 1000.0

DEFAULT_ABSORBANCE_MAX = 3.0

_COVERAGE_SLACK_NM = 1e-9


@dataclass(frozen=True)
class Grid:
    lo_nm: float
    hi_nm: float
    step_nm: float

    def __post_init__(self):
        if not self.lo_nm < self.hi_nm:
            raise ValueError(f"grid needs lo < hi, got {self.lo_nm}, {self.hi_nm}")
        if not self.step_nm > 0:
            raise ValueError(f"grid step must be positive, got {self.step_nm}")
        n = (self.hi_nm - self.lo_nm) / self.step_nm
        if abs(n - round(n)) > 1e-9:
            raise ValueError(
                f"grid span {self.hi_nm - self.lo_nm} nm is not a multiple of step {self.step_nm} nm"
            )

    @property
    def size(self) -> int:
        return int(round((self.hi_nm - self.lo_nm) / self.step_nm)) + 1

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.lo_nm, self.hi_nm, self.size)

    @classmethod
    def parse(cls, text: str) -> "Grid":
        """Parse ``"lo,hi,step"``."""
        try:
            lo, hi, step = (float(part) for part in text.split(","))
        except ValueError as exc:
            raise ValueError(f"grid must be 'lo,hi,step', got {text!r}") from exc
        return cls(lo, hi, step)

    def as_dict(self) -> dict:
        return {"lo_nm": self.lo_nm, "hi_nm": self.hi_nm, "step_nm": self.step_nm}


CANONICAL_GRID = Grid(400.0, 700.0, 2.0)


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Wavelength-indexed coefficient curve.

    ``values`` are 1/m for attenuation, absorption and scattering; decadic,
    unitless absorbance for ``kind="absorbance"``.
    """

    wavelengths_nm: np.ndarray
    values: np.ndarray
    kind: str
    meta: str = field(default="")

    def __post_init__(self):
        wl = _frozen(self.wavelengths_nm)
        vals = _frozen(self.values)
        object.__setattr__(self, "wavelengths_nm", wl)
        object.__setattr__(self, "values", vals)
        if self.kind not in KINDS:
            raise ValueError(f"unknown spectrum kind {self.kind!r}; expected one of {KINDS}")
        if wl.ndim != 1 or wl.shape != vals.shape:
            raise ValueError(
                f"wavelengths ({wl.shape}) and values ({vals.shape}) must be 1-D of equal length"
            )
        if wl.size < 2:
            raise ValueError("a spectrum needs at least two wavelengths")
        if not np.all(np.diff(wl) > 0):
            raise ValueError("wavelengths must be strictly increasing")
        if wl[0] < WAVELENGTH_MIN_NM or wl[-1] > WAVELENGTH_MAX_NM:
            raise ValueError(
                f"wavelengths must lie within [{WAVELENGTH_MIN_NM}, {WAVELENGTH_MAX_NM}] nm"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("spectrum values must be finite")
        if self.kind in COEFFICIENT_KINDS and np.any(vals < 0):
            raise ValueError(f"{self.kind} coefficients must be non-negative")

    def __len__(self) -> int:
        return self.wavelengths_nm.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, Spectrum):
            return NotImplemented
        return (
            self.kind == other.kind
            and np.array_equal(self.wavelengths_nm, other.wavelengths_nm)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def with_values(self, values, kind: str | None = None, meta: str | None = None) -> "Spectrum":
        return Spectrum(
            self.wavelengths_nm,
            values,
            self.kind if kind is None else kind,
            self.meta if meta is None else meta,
        )

    def scaled(self, factor: float) -> "Spectrum":
        return self.with_values(self.values * factor)

    def same_grid(self, other: "Spectrum") -> bool:
        return np.array_equal(self.wavelengths_nm, other.wavelengths_nm)

    def on_grid(self, grid: Grid) -> bool:
        return self.wavelengths_nm.size == grid.size and np.array_equal(
            self.wavelengths_nm, grid.points
        )

    @property
    def range_nm(self) -> tuple[float, float]:
        return float(self.wavelengths_nm[0]), float(self.wavelengths_nm[-1])


def _check_coverage(s: Spectrum, lo: float, hi: float) -> None:
    s_lo, s_hi = s.range_nm
    if lo < s_lo - _COVERAGE_SLACK_NM or hi > s_hi + _COVERAGE_SLACK_NM:
        raise CoverageError(
            f"spectrum covers [{s_lo:g}, {s_hi:g}] nm but [{lo:g}, {hi:g}] nm is required"
        )


def resample(s: Spectrum, grid: Grid = CANONICAL_GRID) -> Spectrum:
    """Linearly interpolate ``s`` onto ``grid``. Extrapolation is an error."""
    _check_coverage(s, grid.lo_nm, grid.hi_nm)
    points = grid.points
    if s.on_grid(grid):
        return s
    values = np.interp(points, s.wavelengths_nm, s.values)
    return Spectrum(points, values, s.kind, s.meta)


def integrate(s: Spectrum, lo_nm: float = VISIBLE_LO_NM, hi_nm: float = VISIBLE_HI_NM) -> float:
    """Trapezoidal integral of ``s`` over ``[lo_nm, hi_nm]`` (units of values times nm).

    Interval ends that fall between samples are linearly interpolated, so the
    result is the exact integral of the piecewise-linear interpolant.
    """
    if not lo_nm <= hi_nm:
        raise ValueError(f"integration bounds reversed: {lo_nm} > {hi_nm}")
    _check_coverage(s, lo_nm, hi_nm)
    wl, vals = s.wavelengths_nm, s.values
    lo_nm = max(lo_nm, float(wl[0]))
    hi_nm = min(hi_nm, float(wl[-1]))
    inside = (wl > lo_nm) & (wl < hi_nm)
    x = np.concatenate(([lo_nm], wl[inside], [hi_nm]))
    y = np.concatenate(
        ([np.interp(lo_nm, wl, vals)], vals[inside], [np.interp(hi_nm, wl, vals)])
    )
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


def normalize_standard(s: Spectrum) -> tuple[Spectrum, float]:
    """Rescale ``s`` to the virtual standard solution.

    Returns the normalized spectrum and the divisor that was applied, so that
    a base solution ``scale_factor`` times stronger than the standard is reported
    with ``scale_factor > 1``.
    """
    if s.kind not in ("attenuation", "absorption"):
        raise ValueError(f"cannot normalize a {s.kind} spectrum to a standard solution")
    area = integrate(s, VISIBLE_LO_NM, VISIBLE_HI_NM)
    if not area > 0:
        raise DegenerateSpectrumError(
            f"spectrum integrates to {area:g} over 400-700 nm; cannot normalize"
        )
    factor = area / STANDARD_INTEGRAL
    return s.with_values(s.values / factor), factor


def lin_combine(weights: Sequence[float], spectra: Sequence[Spectrum]) -> Spectrum:
    """Pointwise sum of ``weights[i] * spectra[i]``, accumulated left to right."""
    if len(weights) != len(spectra):
        raise ValueError(f"{len(weights)} weights for {len(spectra)} spectra")
    if not spectra:
        raise ValueError("need at least one spectrum")
    first = spectra[0]
    for other in spectra[1:]:
        if not first.same_grid(other):
            raise GridMismatchError("spectra are on different wavelength grids")
        if other.kind != first.kind:
            raise GridMismatchError(f"cannot combine {first.kind} with {other.kind}")
    w = [float(x) for x in weights]
    if any(x < 0 or not math.isfinite(x) for x in w):
        raise ValueError(f"weights must be finite and non-negative, got {w}")
    total = w[0] * first.values
    for wi, s in zip(w[1:], spectra[1:]):
        total = total + wi * s.values
    return first.with_values(total, meta="")


def from_absorbance(
    a: Spectrum,
    cuvette_path_mm: float,
    dilution_factor: float = 1.0,
    instrument_max: float = DEFAULT_ABSORBANCE_MAX,
) -> Spectrum:
    """Spectrophotometer absorbance of a diluted sample -> attenuation (1/m) of the undiluted solution."""
    if a.kind != "absorbance":
        raise ValueError(f"expected an absorbance spectrum, got {a.kind}")
    if not cuvette_path_mm > 0:
        raise ValueError("cuvette path must be positive")
    if not dilution_factor >= 1:
        raise ValueError("dilution factor must be >= 1")
    peak = float(np.max(a.values))
    if peak > instrument_max:
        raise RangeError(
            f"absorbance {peak:g} exceeds instrument maximum {instrument_max:g}; dilute further"
        )
    if np.any(a.values < 0):
        raise ValueError("absorbance must be non-negative")
    path_m = cuvette_path_mm / 1000.0
    values = math.log(10.0) * a.values / path_m * dilution_factor
    return Spectrum(a.wavelengths_nm, values, "attenuation", a.meta)


def to_absorbance(c: Spectrum, cuvette_path_mm: float, dilution_factor: float = 1.0) -> Spectrum:
    """Inverse of :func:`from_absorbance` (no range check)."""
    path_m = cuvette_path_mm / 1000.0
    values = c.values * path_m / (math.log(10.0) * dilution_factor)
    return Spectrum(c.wavelengths_nm, values, "absorbance", c.meta)


# -- CSV -------------------------------------------------------------------

CSV_HEADER = ("wavelength_nm", "value", "kind", "unit")


def parse_spectrum_csv(text: str, source: str = "<string>") -> Spectrum:
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if not rows:
        raise ParseError(f"{source}: empty spectrum file")
    header = tuple(cell.strip() for cell in rows[0])
    if header != CSV_HEADER:
        raise ParseError(f"{source}: header must be {','.join(CSV_HEADER)}, got {','.join(header)}")
    wl, vals, kinds, units = [], [], set(), set()
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 4:
            raise ParseError(f"{source}:{lineno}: expected 4 fields, got {len(row)}")
        try:
            wl.append(float(row[0]))
            vals.append(float(row[1]))
        except ValueError as exc:
            raise ParseError(f"{source}:{lineno}: {exc}") from exc
        kinds.add(row[2].strip())
        units.add(row[3].strip())
    if len(kinds) != 1 or len(units) != 1:
        raise ParseError(f"{source}: mixed kind/unit columns {sorted(kinds)} / {sorted(units)}")
    kind, unit = kinds.pop(), units.pop()
    if kind not in KINDS:
        raise ParseError(f"{source}: unknown kind {kind!r}")
    if unit not in UNITS:
        raise ParseError(f"{source}: unknown unit {unit!r}")
    if (kind == "absorbance") != (unit == "absorbance"):
        raise ParseError(f"{source}: kind {kind!r} is incompatible with unit {unit!r}")
    values = np.array(vals)
    if unit == "per_mm":
        values = values * 1000.0
    try:
        return Spectrum(np.array(wl), values, kind, meta=source)
    except ValueError as exc:
        raise ParseError(f"{source}: {exc}") from exc


def read_spectrum_csv(path) -> Spectrum:
    with open(path, encoding="utf-8") as fh:
        return parse_spectrum_csv(fh.read(), source=str(path))


def format_spectrum_csv(s: Spectrum) -> str:
    unit = "absorbance" if s.kind == "absorbance" else "per_m"
    lines = [",".join(CSV_HEADER)]
    for w, v in zip(s.wavelengths_nm, s.values):
        lines.append(f"{fmt_float(w)},{fmt_float(v)},{s.kind},{unit}")
    return "\n".join(lines) + "\n"


def write_spectrum_csv(s: Spectrum, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_spectrum_csv(s))
