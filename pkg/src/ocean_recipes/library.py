"""Reference waters and additive measurements on disk.

Manifest JSON::

    {"entries": [{"label": "synthetic-IB",
                  "absorption_csv": "synthetic-IB.absorption.csv",
                  "scattering_csv": "synthetic-IB.scattering.csv",
                  "provenance": "...",
                  "checksums": {"absorption_csv": "sha256:<hex>",
                                "scattering_csv": "sha256:<hex>"}}]}

Additive sidecar JSON (the CSV path is relative to the sidecar)::

    {"name": "blue", "role": "dye", "spectrum_csv": "blue.csv",
     "base_volume_l": 0.25, "base_mass_g": null, "standard_scale": 133.45,
     "measurement": {"cuvette_path_mm": 10, "dilution_base_ml": 100,
                     "dilution_total_ml": 2000}}

``standard_scale`` is optional and computed from the spectrum when absent.
A spectrum of kind ``absorbance`` is converted to attenuation using the
measurement block.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ChecksumError, OceanRecipeError, ParseError, RoleError
from .fmt import dumps_json, fmt_float, write_text
from .recipe import ROLES, Additive, MeasurementInfo, WaterReference
from .spectral import (
    CANONICAL_GRID,
    DEFAULT_ABSORBANCE_MAX,
    Grid,
    Spectrum,
    from_absorbance,
    normalize_standard,
    read_spectrum_csv,
    resample,
    write_spectrum_csv,
)


def file_checksum(path) -> str:
    return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path}: expected a JSON object")
    return data


@dataclass(frozen=True)
class ManifestEntry:
    label: str
    absorption_csv: str
    scattering_csv: str
    provenance: str
    checksums: dict


@dataclass(frozen=True)
class LibraryManifest:
    entries: tuple
    base_dir: Path

    @property
    def labels(self) -> list[str]:
        return [e.label for e in self.entries]

    def entry(self, label: str) -> ManifestEntry:
        for e in self.entries:
            if e.label == label:
                return e
        raise ParseError(f"label {label!r} not in manifest (have {self.labels})")

    def to_dict(self) -> dict:
        return {
            "entries": [
                {
                    "label": e.label,
                    "absorption_csv": e.absorption_csv,
                    "scattering_csv": e.scattering_csv,
                    "provenance": e.provenance,
                    "checksums": dict(e.checksums),
                }
                for e in self.entries
            ]
        }


def load_manifest(path) -> LibraryManifest:
    path = Path(path)
    data = _read_json(path)
    raw = data.get("entries")
    if not isinstance(raw, list):
        raise ParseError(f"{path}: 'entries' must be a list")
    entries, seen = [], set()
    for i, item in enumerate(raw):
        try:
            entry = ManifestEntry(
                label=str(item["label"]),
                absorption_csv=str(item["absorption_csv"]),
                scattering_csv=str(item["scattering_csv"]),
                provenance=str(item.get("provenance", "")),
                checksums=dict(item.get("checksums", {})),
            )
        except (KeyError, TypeError) as exc:
            raise ParseError(f"{path}: entry {i} is missing {exc}") from exc
        if entry.label in seen:
            raise ParseError(f"{path}: duplicate label {entry.label!r}")
        seen.add(entry.label)
        entries.append(entry)
    return LibraryManifest(tuple(entries), path.parent)


def _load_checked(manifest: LibraryManifest, entry: ManifestEntry, key: str, kind: str, grid: Grid):
    path = manifest.base_dir / getattr(entry, key)
    if not path.exists():
        raise ParseError(f"{path}: file not found")
    expected = entry.checksums.get(key)
    if expected is not None and file_checksum(path) != expected:
        raise ChecksumError(f"{path}: checksum mismatch")
    s = read_spectrum_csv(path)
    if s.kind != kind:
        raise ParseError(f"{path}: expected kind {kind!r}, file declares {s.kind!r}")
    return resample(s, grid)


def load_reference(manifest, label: str, grid: Grid = CANONICAL_GRID) -> WaterReference:
    if not isinstance(manifest, LibraryManifest):
        manifest = load_manifest(manifest)
    entry = manifest.entry(label)
    return WaterReference(
        label,
        _load_checked(manifest, entry, "absorption_csv", "absorption", grid),
        _load_checked(manifest, entry, "scattering_csv", "scattering", grid),
    )


def load_spectrum(path, grid: Grid = CANONICAL_GRID, kind: str | None = None) -> Spectrum:
    s = read_spectrum_csv(path)
    if kind is not None and s.kind != kind:
        raise ParseError(f"{path}: expected kind {kind!r}, file declares {s.kind!r}")
    return resample(s, grid)


def write_manifest(path, entries: list[dict]) -> LibraryManifest:
    """Write a manifest, filling in checksums of the referenced files."""
    path = Path(path)
    out = []
    for e in entries:
        item = dict(e)
        item["checksums"] = {
            key: file_checksum(path.parent / item[key]) for key in ("absorption_csv", "scattering_csv")
        }
        out.append(item)
    write_text(path, dumps_json({"entries": out}))
    return load_manifest(path)


def _quantize(x: float) -> float:
    # computed values are stored at serialization precision so round trips are exact
    return float(fmt_float(x))


def validate_additive(path, grid: Grid = CANONICAL_GRID, instrument_max: float = DEFAULT_ABSORBANCE_MAX) -> Additive:
    """Load and check an additive sidecar plus its spectrum CSV."""
    path = Path(path)
    data = _read_json(path)
    for key in ("name", "role", "spectrum_csv"):
        if key not in data:
            raise ParseError(f"{path}: missing field {key!r}")
    role = data["role"]
    if role not in ROLES:
        raise RoleError(f"{path}: role must be one of {ROLES}, got {role!r}")
    mass = data.get("base_mass_g")
    if role == "scatterer" and mass is None:
        raise RoleError(f"{path}: scatterer {data['name']!r} needs base_mass_g")

    try:
        measurement = MeasurementInfo(**data.get("measurement", {}))
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: bad measurement block ({exc})") from exc

    raw = read_spectrum_csv(path.parent / data["spectrum_csv"])
    if raw.kind == "absorbance":
        raw = from_absorbance(raw, measurement.cuvette_path_mm, measurement.dilution_factor, instrument_max)
    elif raw.kind != "attenuation":
        raise ParseError(f"{path}: additive spectrum must be attenuation or absorbance, got {raw.kind}")
    spectrum = resample(raw, grid)
    if role == "scatterer" and np.any(spectrum.values <= 0):
        raise ParseError(f"{path}: scatterer spectrum must be strictly positive on the grid")

    scale = data.get("standard_scale")
    if scale is None:
        _, scale = normalize_standard(raw)
        scale = _quantize(scale)
    try:
        return Additive(
            name=str(data["name"]),
            role=role,
            base_spectrum=spectrum,
            base_volume_l=float(data.get("base_volume_l", 1.0)),
            base_mass_g=None if mass is None else float(mass),
            standard_scale=float(scale),
            measurement=measurement,
        )
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def additive_sidecar(add: Additive, spectrum_csv: str) -> dict:
    m = add.measurement
    measurement = {"cuvette_path_mm": m.cuvette_path_mm}
    if m.dilution_base_ml is not None:
        measurement["dilution_base_ml"] = m.dilution_base_ml
        measurement["dilution_total_ml"] = m.dilution_total_ml
    return {
        "name": add.name,
        "role": add.role,
        "spectrum_csv": spectrum_csv,
        "base_volume_l": add.base_volume_l,
        "base_mass_g": add.base_mass_g,
        "standard_scale": add.standard_scale,
        "measurement": measurement,
    }


def serialize_additive(add: Additive, directory, stem: str | None = None) -> Path:
    """Write ``<stem>.csv`` and ``<stem>.json``; returns the sidecar path."""
    directory = Path(directory)
    stem = stem or add.name
    csv_name = f"{stem}.csv"
    write_spectrum_csv(add.base_spectrum, directory / csv_name)
    sidecar = directory / f"{stem}.json"
    write_text(sidecar, dumps_json(additive_sidecar(add, csv_name)))
    return sidecar


def validate_all(additives=(), manifest=None, grid: Grid = CANONICAL_GRID) -> dict:
    """Check a set of files; collects every problem instead of stopping at the first."""
    report = {"additives": [], "references": [], "ok": True}
    for path in additives:
        try:
            add = validate_additive(path, grid)
            report["additives"].append({"file": str(path), "name": add.name, "role": add.role,
                                        "standard_scale": add.standard_scale, "ok": True})
        except OceanRecipeError as exc:
            report["ok"] = False
            report["additives"].append({"file": str(path), "ok": False, "error": exc.kind, "message": str(exc)})
    if manifest is not None:
        try:
            man = load_manifest(manifest)
        except OceanRecipeError as exc:
            report["ok"] = False
            report["references"].append({"file": str(manifest), "ok": False, "error": exc.kind, "message": str(exc)})
        else:
            for label in man.labels:
                try:
                    load_reference(man, label, grid)
                    report["references"].append({"label": label, "ok": True})
                except OceanRecipeError as exc:
                    report["ok"] = False
                    report["references"].append({"label": label, "ok": False, "error": exc.kind, "message": str(exc)})
    return report
