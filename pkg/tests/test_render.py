import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ocean_recipes.errors import DimensionError, ParseError
from ocean_recipes.render import (
    BandSet,
    SceneInput,
    attenuate,
    channel_coefficients,
    encode_image,
    load_distance_map,
    load_image,
    read_pnm,
    srgb_decode,
    srgb_encode,
    write_ppm,
)
from ocean_recipes.spectral import CANONICAL_GRID, Spectrum

WL = CANONICAL_GRID.points


@pytest.fixture
def scene(rng):
    return SceneInput(rng.uniform(0, 1, (64, 64, 3)), rng.uniform(0, 4, (64, 64)))


def test_zero_distance_is_identity(rng):
    img = rng.uniform(0, 1, (8, 8, 3))
    out = attenuate(SceneInput(img, np.zeros((8, 8))), (0.5, 1.0, 7.0))
    np.testing.assert_array_equal(out, img)


def test_half_value_distance():
    c = (0.3, 0.8, 2.0)
    img = np.full((2, 2, 3), 0.8)
    for ch, cc in enumerate(c):
        out = attenuate(SceneInput(img, np.full((2, 2), math.log(2) / cc)), c)
        assert out[0, 0, ch] == pytest.approx(0.4, abs=1e-9)


@pytest.mark.parametrize("k", [2, 5, 10])
def test_coefficient_distance_equivalence(scene, k):
    c = np.array([0.2, 0.45, 0.9])
    a = attenuate(scene, k * c)
    b = attenuate(SceneInput(scene.image, k * scene.distance_map), c)
    np.testing.assert_allclose(a, b, atol=1e-9, rtol=0)


def test_split_path_composition(scene, rng):
    c = np.array([0.35, 0.6, 1.1])
    frac = rng.uniform(0, 1, scene.distance_map.shape)
    first = attenuate(SceneInput(scene.image, frac * scene.distance_map), c)
    second = attenuate(SceneInput(first, (1 - frac) * scene.distance_map), c)
    np.testing.assert_allclose(second, attenuate(scene, c), atol=1e-9, rtol=0)


def test_monotone_in_distance(scene):
    c = (0.4, 0.5, 0.6)
    near = attenuate(scene, c)
    far = attenuate(SceneInput(scene.image, scene.distance_map + 0.5), c)
    assert np.all(far <= near)


@given(st.floats(0, 10), st.floats(0, 20), st.floats(0, 1))
def test_energy_bound(c, x, v):
    out = attenuate(SceneInput(np.full((1, 1, 3), v), np.full((1, 1), x)), (c, c, c))
    assert 0.0 <= out[0, 0, 0] <= v


def test_ambient_scale_clipped():
    out = attenuate(SceneInput(np.full((1, 1, 3), 0.9), np.zeros((1, 1)), (2.0, 1.0, 0.5)), (0, 0, 0))
    np.testing.assert_allclose(out[0, 0], [1.0, 0.9, 0.45])


def test_channel_coefficients_constant():
    s = Spectrum(WL, np.full(WL.size, 0.7), "attenuation")
    assert channel_coefficients(s) == pytest.approx((0.7, 0.7, 0.7), rel=1e-12)


def test_channel_coefficients_blue_free():
    s = Spectrum(WL, np.where(WL < 500, 0.0, 1.0), "attenuation")
    r, g, b = channel_coefficients(s)
    assert (r, g) == pytest.approx((1.0, 1.0))
    # only the 498-500 segment carries a ramp into the blue band
    assert b == pytest.approx(0.5 * 2 / 100, rel=1e-12)


def test_channel_coefficients_linear_oracle():
    s = Spectrum(WL, 0.01 * WL, "attenuation")
    # a linear spectrum averages to its value at the band centre
    assert channel_coefficients(s) == pytest.approx((6.5, 5.5, 4.5), rel=1e-12)


def test_channel_coefficients_with_curves():
    flat = Spectrum(WL, np.ones(WL.size), "attenuation")
    s = Spectrum(WL, 0.01 * WL, "attenuation")
    bands = BandSet(curves={"R": flat, "G": flat, "B": flat})
    assert channel_coefficients(s, bands) == pytest.approx((5.5, 5.5, 5.5), rel=1e-12)


def test_band_parse():
    bands = BandSet.parse("610-700,490-610,400-490")
    assert bands.intervals == ((610, 700), (490, 610), (400, 490))
    for bad in ("1-2", "600-700,500-600", "a-b,c-d,e-f", "700-600,500-600,400-500"):
        with pytest.raises(ValueError):
            BandSet.parse(bad)


def test_scene_validation(rng):
    with pytest.raises(DimensionError):
        SceneInput(rng.uniform(0, 1, (4, 4, 3)), np.zeros((4, 5)))
    with pytest.raises(DimensionError):
        SceneInput(rng.uniform(0, 1, (4, 4)), np.zeros((4, 4)))
    with pytest.raises(ValueError):
        SceneInput(rng.uniform(0, 1, (4, 4, 3)), -np.ones((4, 4)))
    with pytest.raises(DimensionError):
        attenuate(SceneInput(np.zeros((2, 2, 3)), np.zeros((2, 2))), (1, 2))


@given(st.floats(0, 1))
def test_srgb_round_trip(v):
    assert float(srgb_decode(srgb_encode(v))) == pytest.approx(v, abs=1e-12)


def test_ppm_round_trip(tmp_path, rng):
    img8 = rng.integers(0, 256, (5, 7, 3), dtype=np.uint8)
    write_ppm(tmp_path / "a.ppm", img8)
    arr, maxval = read_pnm(tmp_path / "a.ppm")
    assert maxval == 255
    np.testing.assert_array_equal(arr, img8)
    np.testing.assert_array_equal(encode_image(load_image(tmp_path / "a.ppm")), img8)


def test_ascii_pnm_with_comments(tmp_path):
    (tmp_path / "d.pgm").write_text("P2\n# distances\n3 2\n255\n0 1 2\n3 4 255\n")
    dist = load_distance_map(tmp_path / "d.pgm", scale=0.1)
    np.testing.assert_allclose(dist, [[0, 0.1, 0.2], [0.3, 0.4, 25.5]])
    (tmp_path / "c.ppm").write_text("P3 1 1 255 255 0 10\n")
    arr, _ = read_pnm(tmp_path / "c.ppm")
    assert arr.tolist() == [[[255, 0, 10]]]


def test_sixteen_bit_pgm(tmp_path):
    raw = np.array([[0, 1000], [65535, 2]], dtype=">u2")
    (tmp_path / "d.pgm").write_bytes(b"P5\n2 2\n65535\n" + raw.tobytes())
    np.testing.assert_array_equal(load_distance_map(tmp_path / "d.pgm"), raw.astype(float))


def test_csv_distance_map(tmp_path):
    (tmp_path / "d.csv").write_text("0,1.5\n2,3\n")
    np.testing.assert_array_equal(load_distance_map(tmp_path / "d.csv", 2.0), [[0, 3], [4, 6]])
    (tmp_path / "bad.csv").write_text("0,x\n")
    with pytest.raises(ParseError):
        load_distance_map(tmp_path / "bad.csv")


def test_unsupported_pnm(tmp_path):
    (tmp_path / "x.pbm").write_text("P1\n1 1\n1\n")
    with pytest.raises(ParseError):
        read_pnm(tmp_path / "x.pbm")


def test_png_round_trip(tmp_path, rng):
    pytest.importorskip("PIL")
    from ocean_recipes.render import save_png

    img8 = rng.integers(0, 256, (4, 6, 3), dtype=np.uint8)
    save_png(tmp_path / "a.png", img8)
    np.testing.assert_array_equal(encode_image(load_image(tmp_path / "a.png")), img8)
