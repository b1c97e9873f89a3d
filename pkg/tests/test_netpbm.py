import numpy as np
import pytest
from PIL import Image

from dataset.netpbm import (ImageFile, channel_planes, convert_image, decode_netpbm, encode_netpbm, load_image,
                            luminance, save_image, to_image_file)
from utils.errors import FormatError


def test_decode_header_with_comments():
    data = b"P5\n# made by hand\n3 2 # width height\n255\n" + bytes(range(6))
    image = decode_netpbm(data)
    assert (image.width, image.height, image.channels) == (3, 2, 1)
    np.testing.assert_array_equal(image.samples[:, :, 0], [[0, 1, 2], [3, 4, 5]])


def test_ppm_samples_are_interleaved():
    data = b"P6 2 1 255\n" + bytes([10, 20, 30, 40, 50, 60])
    image = decode_netpbm(data)
    np.testing.assert_array_equal(image.samples[0, 1], [40, 50, 60])


@pytest.mark.parametrize("data, field", [
    (b"P3\n1 1\n255\n0 0 0", "magic"),
    (b"P5\n1 1\n65535\n\0\0", "maxval"),
    (b"P5\nx 1\n255\n\0", "width"),
    (b"P5\n0 1\n255\n", "width"),
    (b"P5\n2 2\n255\n\0\0", "payload"),
    (b"P5\n2", "height"),
])
def test_decode_errors_name_field_and_offset(data, field):
    with pytest.raises(FormatError) as err:
        decode_netpbm(data, "bad.pgm")
    assert err.value.field == field
    assert err.value.offset is not None
    assert "bad.pgm" in str(err.value) or field in str(err.value)


def test_maxval_error_points_at_token():
    data = b"P5\n1 1\n65535\n\0\0"
    with pytest.raises(FormatError) as err:
        decode_netpbm(data)
    assert err.value.offset == data.index(b"65535")


@pytest.mark.parametrize("channels", [1, 3])
def test_save_load_is_byte_exact(tmp_path, channels):
    rng = np.random.default_rng(channels)
    for trial in range(25):
        h, w = rng.integers(1, 40, size=2)
        samples = rng.integers(0, 256, size=(h, w, channels), dtype=np.uint8)
        image = ImageFile(int(w), int(h), channels, samples)
        path = tmp_path / "img{}.pnm".format(trial)
        save_image(str(path), image)
        loaded = load_image(str(path))
        np.testing.assert_array_equal(loaded.samples, samples)
        assert encode_netpbm(loaded) == path.read_bytes()


def test_float_plane_is_requantized():
    image = to_image_file(np.array([[0.0, 0.5], [1.2, -0.3]]))
    np.testing.assert_array_equal(image.samples[:, :, 0], [[0, 128], [255, 0]])


def test_luminance_and_channel_planes():
    samples = np.array([[[255, 0, 0], [0, 0, 255]]], dtype=np.uint8)
    image = ImageFile(2, 1, 3, samples)
    np.testing.assert_allclose(luminance(image), [[0.299, 0.114]])
    planes = channel_planes(image)
    assert len(planes) == 3
    np.testing.assert_allclose(planes[2], [[0.0, 1.0]])


def test_convert_png_to_pgm_and_ppm(tmp_path):
    gray = np.arange(24, dtype=np.uint8).reshape(4, 6) * 10
    Image.fromarray(gray).save(str(tmp_path / "g.png"))
    out = convert_image(str(tmp_path / "g.png"), str(tmp_path / "g.pgm"))
    assert out.channels == 1
    assert (tmp_path / "g.pgm").read_bytes().startswith(b"P5")
    np.testing.assert_array_equal(load_image(str(tmp_path / "g.pgm")).samples[:, :, 0], gray)

    rgb = np.zeros((3, 5, 3), dtype=np.uint8)
    rgb[..., 1] = 200
    Image.fromarray(rgb).save(str(tmp_path / "c.png"))
    out = convert_image(str(tmp_path / "c.png"), str(tmp_path / "c.ppm"))
    assert out.channels == 3
    np.testing.assert_array_equal(load_image(str(tmp_path / "c.ppm")).samples, rgb)
