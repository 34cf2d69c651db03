"""Direct-beam Lambert-Beer preview of a scene seen through a given water.

Only the attenuated direct signal is modelled: no backscatter veil and no
forward-scatter blur. Pixel values are linear light in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ParseError
from .spectral import Spectrum, integrate

CHANNELS = ("R", "G", "B")


@dataclass(frozen=True)
class BandSet:
    """Channel sensitivities: box bands by default, or explicit sensitivity curves."""

    red: tuple = (600.0, 700.0)
    green: tuple = (500.0, 600.0)
    blue: tuple = (400.0, 500.0)
    curves: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, (lo, hi) in zip(CHANNELS, self.intervals):
            if not 400.0 <= lo < hi <= 700.0:
                raise ValueError(f"band {name} = ({lo}, {hi}) must be non-empty and within [400, 700] nm")
        for key in self.curves:
            if key not in CHANNELS:
                raise ValueError(f"unknown channel {key!r}")

    @property
    def intervals(self) -> tuple:
        return (tuple(self.red), tuple(self.green), tuple(self.blue))

    @classmethod
    def parse(cls, text: str) -> "BandSet":
        """``"600-700,500-600,400-500"`` in R,G,B order."""
        try:
            parts = [tuple(float(x) for x in band.split("-")) for band in text.split(",")]
        except ValueError as exc:
            raise ValueError(f"bands must look like 'lo-hi,lo-hi,lo-hi', got {text!r}") from exc
        if len(parts) != 3 or any(len(p) != 2 for p in parts):
            raise ValueError(f"need three lo-hi bands (R,G,B), got {text!r}")
        return cls(*parts)

    def to_dict(self) -> dict:
        return {ch: list(iv) for ch, iv in zip(CHANNELS, self.intervals)}


@dataclass(frozen=True)
class SceneInput:
    image: np.ndarray
    distance_map: np.ndarray
    ambient_scale: tuple = (1.0, 1.0, 1.0)

    def __post_init__(self):
        img = np.asarray(self.image, dtype=float)
        dist = np.asarray(self.distance_map, dtype=float)
        if img.ndim != 3 or img.shape[2] != 3:
            raise DimensionError(f"image must be HxWx3, got {img.shape}")
        if dist.shape != img.shape[:2]:
            raise DimensionError(f"distance map {dist.shape} does not match image {img.shape[:2]}")
        if not np.all(np.isfinite(dist)) or np.any(dist < 0):
            raise ValueError("distances must be finite and non-negative")
        if len(self.ambient_scale) != 3:
            raise DimensionError("ambient_scale needs one value per channel")
        object.__setattr__(self, "image", img)
        object.__setattr__(self, "distance_map", dist)


def channel_coefficients(c: Spectrum, bands: BandSet = BandSet()) -> tuple[float, float, float]:
    """Band-averaged attenuation coefficient per channel (1/m)."""
    out = []
    for name, (lo, hi) in zip(CHANNELS, bands.intervals):
        curve = bands.curves.get(name)
        if curve is None:
            out.append(integrate(c, lo, hi) / (hi - lo))
            continue
        if not curve.same_grid(c):
            raise ParseError(f"sensitivity curve for {name} is not on the spectrum grid")
        weight = integrate(curve, *curve.range_nm)
        if not weight > 0:
            raise ValueError(f"sensitivity curve for {name} integrates to zero")
        weighted = Spectrum(c.wavelengths_nm, c.values * curve.values, "attenuation")
        out.append(integrate(weighted, *curve.range_nm) / weight)
    return tuple(out)


def attenuate(scene: SceneInput, coeffs) -> np.ndarray:
    """``out = in * ambient * exp(-c_ch * x)`` per pixel and channel, clamped to [0, 1]."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (3,):
        raise DimensionError(f"need three channel coefficients, got shape {coeffs.shape}")
    if np.any(coeffs < 0):
        raise ValueError("attenuation coefficients must be non-negative")
    transmission = np.exp(-scene.distance_map[..., None] * coeffs)
    out = scene.image * np.asarray(scene.ambient_scale, dtype=float) * transmission
    return np.clip(out, 0.0, 1.0)


# -- image IO -----------------------------------------------------------------


def srgb_decode(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.where(v <= 0.04045, v / 12.92, ((v + 0.055) / 1.055) ** 2.4)


def srgb_encode(v: np.ndarray) -> np.ndarray:
    v = np.clip(np.asarray(v, dtype=float), 0.0, 1.0)
    return np.where(v <= 0.0031308, 12.92 * v, 1.055 * v ** (1 / 2.4) - 0.055)


def _tokens(data: bytes, count: int, start: int = 0):
    """Read ``count`` whitespace-separated header tokens (skipping # comments)."""
    tokens, i = [], start
    while len(tokens) < count:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if data[i : i + 1] == b"#":
            while i < len(data) and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < len(data) and not data[j : j + 1].isspace():
            j += 1
        if j == i:
            raise ParseError("truncated PNM header")
        tokens.append(data[i:j])
        i = j
    return tokens, i + 1  # one whitespace byte separates header from raster


def read_pnm(path) -> np.ndarray:
    """Read binary or ASCII PPM/PGM; returns integer array (H, W) or (H, W, 3) and maxval."""
    with open(path, "rb") as fh:
        data = fh.read()
    (magic,), _ = _tokens(data, 1)
    if magic not in (b"P2", b"P3", b"P5", b"P6"):
        raise ParseError(f"{path}: unsupported PNM type {magic!r}")
    toks, offset = _tokens(data, 4)
    width, height, maxval = (int(x) for x in toks[1:])
    channels = 3 if magic in (b"P3", b"P6") else 1
    n = width * height * channels
    if magic in (b"P2", b"P3"):
        vals, _ = _tokens(data, 4 + n)
        arr = np.array([int(x) for x in vals[4:]])
    else:
        dtype = ">u2" if maxval > 255 else "u1"
        arr = np.frombuffer(data, dtype=dtype, count=n, offset=offset).astype(int)
    shape = (height, width, 3) if channels == 3 else (height, width)
    return arr.reshape(shape), maxval


def write_ppm(path, image8: np.ndarray) -> None:
    image8 = np.asarray(image8, dtype=np.uint8)
    h, w, _ = image8.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(image8.tobytes())


def load_image(path) -> np.ndarray:
    """Load an 8/16-bit sRGB PPM or PNG as linear light in [0, 1]."""
    if str(path).lower().endswith(".png"):
        from PIL import Image

        with Image.open(path) as im:
            arr = np.asarray(im.convert("RGB"), dtype=float)
        return srgb_decode(arr / 255.0)
    arr, maxval = read_pnm(path)
    if arr.ndim != 3:
        raise ParseError(f"{path}: expected a colour image")
    return srgb_decode(arr / maxval)


def encode_image(linear: np.ndarray) -> np.ndarray:
    return np.round(srgb_encode(linear) * 255.0).astype(np.uint8)


def save_png(path, image8: np.ndarray) -> None:
    from PIL import Image

    Image.fromarray(np.asarray(image8, dtype=np.uint8), mode="RGB").save(path)


def load_distance_map(path, scale: float = 1.0) -> np.ndarray:
    """Distances in metres from a CSV grid or a single-channel PGM (raw value x ``scale``)."""
    if str(path).lower().endswith(".csv"):
        try:
            arr = np.loadtxt(path, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise ParseError(f"{path}: {exc}") from exc
        return arr * scale
    arr, _ = read_pnm(path)
    if arr.ndim != 2:
        raise ParseError(f"{path}: distance map must be single-channel")
    return arr.astype(float) * scale
