"""Exception hierarchy. The class name doubles as the machine-readable error kind."""


class OceanRecipeError(Exception):
    """Base class for all domain errors."""

    @property
    def kind(self) -> str:
        return type(self).__name__


class CoverageError(OceanRecipeError):
    """A spectrum does not cover the requested wavelength range."""


class GridMismatchError(OceanRecipeError):
    """Spectra that must share a grid (and kind) do not."""


class DegenerateSpectrumError(OceanRecipeError):
    pass


class RangeError(OceanRecipeError):
    """Absorbance above the instrument maximum; the sample must be diluted further."""


class ConvergenceError(OceanRecipeError):
    pass


class RankError(OceanRecipeError):
    """Design matrix (or a passive-set subproblem) is numerically singular."""


class FitError(OceanRecipeError):
    pass


class DimensionError(OceanRecipeError):
    pass


class ParseError(OceanRecipeError):
    pass


class ChecksumError(OceanRecipeError):
    pass


class RoleError(OceanRecipeError):
    pass
