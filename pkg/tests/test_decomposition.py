import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ocean_recipes.decomposition import split
from ocean_recipes.errors import DegenerateSpectrumError
from ocean_recipes.fixtures import dye_spectrum, scatterer_spectrum
from ocean_recipes.spectral import CANONICAL_GRID, Spectrum

WL = CANONICAL_GRID.points


def att(values):
    return Spectrum(WL, values, "attenuation")


@pytest.fixture
def shape():
    s = scatterer_spectrum()
    return Spectrum(WL, s.values / s.values.max(), "scattering")


def test_pure_scatterer(shape):
    result = split(att(2.0 * shape.values), shape)
    assert result.scatter_scale == pytest.approx(2.0, rel=1e-15)
    np.testing.assert_allclose(result.absorption.values, 0.0, atol=1e-15)
    np.testing.assert_allclose(result.scattering.values, 2.0 * shape.values, rtol=1e-15)


def test_pure_dye(shape):
    values = np.exp(-0.5 * ((WL - 520) / 30) ** 2)
    values[-1] = 0.0
    result = split(att(values), shape)
    assert result.scatter_scale == 0.0
    assert np.all(result.scattering.values == 0.0)
    assert np.array_equal(result.absorption.values, values)
    assert result.anchor_wavelength_nm == 700.0
    assert result.clamped_points == 0


def test_recovers_synthesized_components(shape):
    # dye absorption that vanishes exactly where the mixture is smallest
    brown = dye_spectrum("brown").values
    a_star = brown - brown[-1]
    beta = 35.0
    c = a_star + beta * shape.values
    result = split(att(c), shape)
    assert a_star[np.argmin(c)] == pytest.approx(0.0, abs=1e-6)
    assert result.scatter_scale == pytest.approx(beta, abs=1e-6)
    np.testing.assert_allclose(result.absorption.values, a_star, atol=1e-6)


def test_tie_breaks_to_shortest_wavelength(shape):
    values = np.full(151, 5.0)
    values[[10, 80]] = 1.0
    assert split(att(values), shape).anchor_wavelength_nm == WL[10]


def test_negative_absorption_is_clamped_and_counted():
    shape = Spectrum(WL, np.linspace(1.0, 2.0, 151), "scattering")
    # the scatterer rises faster than the attenuation away from the anchor
    values = np.ones(151)
    values[0] = 0.999
    result = split(att(values), shape)
    assert result.anchor_wavelength_nm == 400.0
    assert result.clamped_points == 150
    assert np.all(result.absorption.values >= 0)


def test_shape_must_be_positive():
    shape = Spectrum(WL, np.r_[0.0, np.ones(150)], "scattering")
    with pytest.raises(DegenerateSpectrumError):
        split(att(np.ones(151)), shape)


positive_values = st.lists(st.floats(0.0, 100.0), min_size=151, max_size=151)


@given(positive_values, st.floats(0.01, 100.0))
def test_reconstruction_and_homogeneity(values, k):
    shape = Spectrum(WL, np.linspace(1.5, 0.5, 151), "scattering")
    c = att(values)
    result = split(c, shape)
    total = result.absorption.values + result.scattering.values
    clamped = (c.values - result.scattering.values) < 0
    assert result.clamped_points == int(clamped.sum())
    np.testing.assert_allclose(total[~clamped], c.values[~clamped], rtol=1e-9, atol=1e-9)
    # where clamped the deficit is at most the clamp magnitude
    assert np.all(total[clamped] - c.values[clamped] <= result.scattering.values[clamped] - c.values[clamped] + 1e-12)
    np.testing.assert_allclose(result.scattering.values, result.scatter_scale * shape.values, rtol=1e-15)
    assert (result.scatter_scale == 0) == (min(values) == 0)

    scaled = split(att(np.asarray(values) * k), shape)
    assert scaled.clamped_points == result.clamped_points
    np.testing.assert_allclose(scaled.scattering.values, k * result.scattering.values, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(scaled.absorption.values, k * result.absorption.values, rtol=1e-9, atol=1e-9 * k)
