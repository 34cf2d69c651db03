"""Split a measured attenuation spectrum into absorption and scattering parts.

Dissolved dyes scatter negligibly and drop to (near) zero absorption somewhere in
the visible range, whereas a particulate scatterer contributes a smooth curve
everywhere. The attenuation minimum therefore fixes the scattering magnitude:
the scatterer's reference shape is scaled to match the attenuation there, and
what remains is absorption.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpectrumError, GridMismatchError
from .spectral import Spectrum


@dataclass(frozen=True)
class DecompositionResult:
    absorption: Spectrum
    scattering: Spectrum
    anchor_wavelength_nm: float
    scatter_scale: float
    clamped_points: int

    def diagnostics(self) -> dict:
        return {
            "anchor_wavelength_nm": self.anchor_wavelength_nm,
            "scatter_scale": self.scatter_scale,
            "clamped_points": self.clamped_points,
        }


def split(c: Spectrum, scatter_shape: Spectrum) -> DecompositionResult:
    """Anchor ``scatter_shape`` at the attenuation minimum of ``c`` and subtract it.

    Ties between equal minima go to the shortest wavelength. Negative residual
    absorption (measurement noise) is clamped to zero and counted, not raised.
    """
    if c.kind != "attenuation":
        raise ValueError(f"expected an attenuation spectrum, got {c.kind}")
    if not c.same_grid(scatter_shape):
        raise GridMismatchError("attenuation and scatterer shape are on different grids")
    shape = scatter_shape.values
    if np.any(shape <= 0):
        raise DegenerateSpectrumError("scatterer shape must be strictly positive at every grid point")

    anchor = int(np.argmin(c.values))
    scale = float(c.values[anchor] / shape[anchor])
    scattering = scale * shape
    raw = c.values - scattering
    negative = raw < 0
    absorption = np.where(negative, 0.0, raw)

    return DecompositionResult(
        absorption=Spectrum(c.wavelengths_nm, absorption, "absorption", c.meta),
        scattering=Spectrum(c.wavelengths_nm, scattering, "scattering", c.meta),
        anchor_wavelength_nm=float(c.wavelengths_nm[anchor]),
        scatter_scale=scale,
        clamped_points=int(np.count_nonzero(negative)),
    )
